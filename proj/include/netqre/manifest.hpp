#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace netqre {

/// Index into a manifest's feature list.
struct FeatureId {
  std::uint32_t index = 0;
  friend auto operator<=>(const FeatureId&, const FeatureId&) = default;
};

/// How the time column of a trace-set file is encoded.
enum class TimeEncoding { Timestamp, Interval };

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Describes the fixed-width feature vector carried by every packet.
class TraceManifest {
 public:
  TraceManifest() = default;
  TraceManifest(std::vector<std::string> names, std::vector<unsigned> bit_widths,
                std::map<std::string, std::map<std::string, std::uint64_t>> enums,
                std::string time_feature, TimeEncoding time_encoding = TimeEncoding::Interval);

  /// The 19-feature TCP/IP header manifest used when none is supplied.
  static TraceManifest standard();

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(FeatureId f) const { return names_.at(f.index); }
  unsigned bit_width(FeatureId f) const { return bit_widths_.at(f.index); }
  const std::vector<unsigned>& bit_widths() const { return bit_widths_; }
  FeatureId time_feature() const { return time_feature_; }
  TimeEncoding time_encoding() const { return time_encoding_; }
  const std::map<std::string, std::map<std::string, std::uint64_t>>& enums() const { return enums_; }

  std::optional<FeatureId> find(std::string_view name) const;
  /// Resolves an enumerated symbol (e.g. `TCP` for `ip.type`).
  std::optional<std::uint64_t> enum_value(FeatureId f, std::string_view symbol) const;
  /// Reverse lookup used by the printer; empty when the value has no symbol.
  std::optional<std::string> enum_name(FeatureId f, std::uint64_t value) const;

  friend bool operator==(const TraceManifest&, const TraceManifest&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<unsigned> bit_widths_;
  std::map<std::string, std::map<std::string, std::uint64_t>> enums_;
  FeatureId time_feature_{};
  TimeEncoding time_encoding_ = TimeEncoding::Interval;
};

}  // namespace netqre
