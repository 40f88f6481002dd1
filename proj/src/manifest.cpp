#include "netqre/manifest.hpp"

#include <set>

namespace netqre {

TraceManifest::TraceManifest(std::vector<std::string> names, std::vector<unsigned> bit_widths,
                             std::map<std::string, std::map<std::string, std::uint64_t>> enums,
                             std::string time_feature, TimeEncoding time_encoding)
    : names_(std::move(names)),
      bit_widths_(std::move(bit_widths)),
      enums_(std::move(enums)),
      time_encoding_(time_encoding) {
  if (names_.empty()) throw ManifestError("manifest declares no features");
  if (names_.size() != bit_widths_.size())
    throw ManifestError("manifest has " + std::to_string(names_.size()) + " features but " +
                        std::to_string(bit_widths_.size()) + " bit widths");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw ManifestError("empty feature name");
    if (!seen.insert(n).second) throw ManifestError("duplicate feature name: " + n);
  }
  for (std::size_t i = 0; i < bit_widths_.size(); ++i)
    if (bit_widths_[i] < 1 || bit_widths_[i] > 64)
      throw ManifestError("bit width of " + names_[i] + " must be in [1,64]");
  for (const auto& [feat, table] : enums_)
    if (!seen.count(feat)) throw ManifestError("enum table for unknown feature: " + feat);
  auto t = find(time_feature);
  if (!t) throw ManifestError("time feature not in manifest: " + time_feature);
  time_feature_ = *t;
}

TraceManifest TraceManifest::standard() {
  return TraceManifest(
      {"ip.src_ip", "ip.dst_ip", "ip.len", "ip.type", "ip.ttl", "tcp.src_port", "tcp.dst_port",
       "tcp.seq", "tcp.ack_num", "tcp.win", "tcp.syn", "tcp.ack", "tcp.fin", "tcp.rst", "tcp.psh",
       "tcp.urg", "tcp.hdr_len", "tcp.urg_ptr", "time_since_last_pkt"},
      {32, 32, 16, 8, 8, 16, 16, 32, 32, 16, 1, 1, 1, 1, 1, 1, 8, 16, 32},
      {{"ip.type", {{"ICMP", 1}, {"TCP", 6}, {"UDP", 17}}}}, "time_since_last_pkt",
      TimeEncoding::Interval);
}

std::optional<FeatureId> TraceManifest::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return FeatureId{static_cast<std::uint32_t>(i)};
  return std::nullopt;
}

std::optional<std::uint64_t> TraceManifest::enum_value(FeatureId f, std::string_view symbol) const {
  auto it = enums_.find(name(f));
  if (it == enums_.end()) return std::nullopt;
  auto v = it->second.find(std::string(symbol));
  if (v == it->second.end()) return std::nullopt;
  return v->second;
}

std::optional<std::string> TraceManifest::enum_name(FeatureId f, std::uint64_t value) const {
  auto it = enums_.find(name(f));
  if (it == enums_.end()) return std::nullopt;
  for (const auto& [sym, v] : it->second)
    if (v == value) return sym;
  return std::nullopt;
}

}  // namespace netqre
