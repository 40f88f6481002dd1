#include "netqre/trace.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <set>

#include "json_io.hpp"

namespace netqre {

using nlohmann::json;

// ------------------------------------------------------------ manifest json

namespace detail {

json manifest_to_json(const TraceManifest& m) {
  json j;
  j["features"] = m.names();
  j["bit_widths"] = m.bit_widths();
  j["enums"] = m.enums();
  j["time_feature"] = m.name(m.time_feature());
  j["time_encoding"] = m.time_encoding() == TimeEncoding::Timestamp ? "ts" : "interval";
  return j;
}

TraceManifest manifest_from_json(const json& j) {
  if (!j.is_object() || !j.contains("features") || !j.contains("bit_widths"))
    throw TraceError("manifest record needs 'features' and 'bit_widths'");
  auto names = j.at("features").get<std::vector<std::string>>();
  auto widths = j.at("bit_widths").get<std::vector<unsigned>>();
  std::map<std::string, std::map<std::string, std::uint64_t>> enums;
  if (j.contains("enums")) enums = j.at("enums").get<decltype(enums)>();
  std::string time = j.value("time_feature", std::string("time_since_last_pkt"));
  std::string enc = j.value("time_encoding", std::string("interval"));
  TimeEncoding te;
  if (enc == "ts")
    te = TimeEncoding::Timestamp;
  else if (enc == "interval")
    te = TimeEncoding::Interval;
  else
    throw TraceError("unknown time_encoding '" + enc + "' (expected ts or interval)");
  return TraceManifest(std::move(names), std::move(widths), std::move(enums), time, te);
}

}  // namespace detail

// ------------------------------------------------------------ trace sets

ValueSpaces ValueSpaces::build(const TraceManifest& m, const std::vector<const Example*>& examples) {
  std::vector<std::set<std::uint64_t>> seen(m.size());
  for (const auto* e : examples)
    for (const auto& p : e->packets)
      for (std::size_t f = 0; f < m.size(); ++f) seen[f].insert(p[f]);
  ValueSpaces out;
  for (auto& s : seen) out.values.emplace_back(s.begin(), s.end());
  return out;
}

ExampleRefs TraceSet::positive_refs() const {
  ExampleRefs out;
  for (const auto& e : positives) out.push_back(&e);
  return out;
}

ExampleRefs TraceSet::negative_refs() const {
  ExampleRefs out;
  for (const auto& e : negatives) out.push_back(&e);
  return out;
}

TraceSet make_trace_set(TraceManifest manifest, std::vector<Example> examples) {
  TraceSet set;
  for (auto& e : examples) {
    if (e.packets.empty()) throw TraceError("example '" + e.id + "' has no packets");
    for (const auto& p : e.packets) {
      if (p.size() != manifest.size())
        throw TraceError("example '" + e.id + "': packet has " + std::to_string(p.size()) +
                         " values, manifest declares " + std::to_string(manifest.size()));
      for (std::size_t f = 0; f < p.size(); ++f) {
        unsigned w = manifest.bit_widths()[f];
        if (w < 64 && p[f] >> w)
          throw TraceError("example '" + e.id + "': value " + std::to_string(p[f]) +
                           " does not fit the " + std::to_string(w) + "-bit feature " +
                           manifest.names()[f]);
      }
    }
    (e.label == Label::Positive ? set.positives : set.negatives).push_back(std::move(e));
  }
  set.manifest = std::move(manifest);
  ExampleRefs all = set.positive_refs();
  for (const auto* e : set.negative_refs()) all.push_back(e);
  set.spaces = ValueSpaces::build(set.manifest, all);
  return set;
}

TraceSet read_trace_set(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw TraceError("trace-set file is empty");
  TraceManifest manifest;
  try {
    manifest = detail::manifest_from_json(json::parse(line));
  } catch (const json::exception& ex) {
    throw TraceError("line 1: malformed manifest: " + std::string(ex.what()));
  } catch (const ManifestError& ex) {
    throw TraceError("line 1: " + std::string(ex.what()));
  }
  const std::size_t tcol = manifest.time_feature().index;
  std::vector<Example> examples;
  while (next_line()) {
    const std::string where = "line " + std::to_string(lineno) + ": ";
    Example e;
    try {
      json rec = json::parse(line);
      e.id = rec.at("id").get<std::string>();
      std::string label = rec.at("label").get<std::string>();
      if (label == "pos")
        e.label = Label::Positive;
      else if (label == "neg")
        e.label = Label::Negative;
      else
        throw TraceError(where + "unknown label '" + label + "'");
      for (const auto& row : rec.at("packets")) {
        if (!row.is_array() || row.size() != manifest.size())
          throw TraceError(where + "ragged packet vector in example '" + e.id + "': expected " +
                           std::to_string(manifest.size()) + " values");
        e.packets.push_back(row.get<Packet>());
      }
    } catch (const json::exception& ex) {
      throw TraceError(where + "malformed record: " + ex.what());
    }
    if (manifest.time_encoding() == TimeEncoding::Timestamp) {
      std::uint64_t prev = e.packets.empty() ? 0 : e.packets.front()[tcol];
      for (auto& p : e.packets) {
        std::uint64_t ts = p[tcol];
        if (ts < prev) throw TraceError(where + "timestamps out of order in example '" + e.id + "'");
        p[tcol] = ts - prev;
        prev = ts;
      }
    }
    examples.push_back(std::move(e));
  }
  // Stored values are intervals from here on.
  TraceManifest as_interval(manifest.names(), manifest.bit_widths(), manifest.enums(),
                            manifest.name(manifest.time_feature()), TimeEncoding::Interval);
  try {
    return make_trace_set(std::move(as_interval), std::move(examples));
  } catch (const TraceError& ex) {
    throw TraceError(std::string("invalid trace set: ") + ex.what());
  }
}

TraceSet load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TraceError("cannot open trace-set file: " + path);
  return read_trace_set(in);
}

void write_trace_set(std::ostream& out, const TraceSet& set) {
  json m = detail::manifest_to_json(set.manifest);
  m["time_encoding"] = "interval";
  out << m.dump() << '\n';
  auto emit = [&](const Example& e) {
    json rec;
    rec["id"] = e.id;
    rec["label"] = e.label == Label::Positive ? "pos" : "neg";
    rec["packets"] = e.packets;
    out << rec.dump() << '\n';
  };
  for (const auto& e : set.positives) emit(e);
  for (const auto& e : set.negatives) emit(e);
}

std::vector<FeatureDomain> alphabet(const ValueSpaces& spaces, std::size_t eq_domain_limit) {
  std::vector<FeatureDomain> out;
  for (std::size_t f = 0; f < spaces.values.size(); ++f) {
    FeatureDomain d;
    d.feature = FeatureId{static_cast<std::uint32_t>(f)};
    d.distinct = spaces.values[f].size();
    if (d.distinct <= eq_domain_limit) d.values = spaces.values[f];
    out.push_back(std::move(d));
  }
  return out;
}

// ------------------------------------------------------------ resolution

std::uint64_t resolve_percentile(const Percentile& q, const std::vector<std::uint64_t>& space) {
  if (space.empty()) throw TraceError("empty value space");
  const auto n = static_cast<unsigned __int128>(space.size());
  unsigned __int128 scaled = static_cast<unsigned __int128>(q.numerator()) * n;
  unsigned __int128 den = static_cast<unsigned __int128>(1) << q.exponent();
  auto ceil = static_cast<std::size_t>((scaled + den - 1) / den);
  return space[ceil == 0 ? 0 : ceil - 1];
}

namespace {
std::size_t rank_of(const Percentile& q, std::size_t n) {
  unsigned __int128 scaled = static_cast<unsigned __int128>(q.numerator()) * n;
  unsigned __int128 den = static_cast<unsigned __int128>(1) << q.exponent();
  auto ceil = static_cast<std::size_t>((scaled + den - 1) / den);
  return ceil == 0 ? 0 : ceil - 1;
}

std::uint64_t top_bits(std::uint64_t v, unsigned len, unsigned width) {
  if (len == 0) return 0;
  return v >> (width - len);
}
}  // namespace

BitPrefix resolve_prefix(const PercentileRange& r, const std::vector<std::uint64_t>& space,
                         unsigned width) {
  if (space.empty()) throw TraceError("empty value space");
  std::uint64_t a = space[rank_of(r.lo, space.size())];
  std::uint64_t b = space[rank_of(r.hi, space.size())];
  std::uint64_t diff = a ^ b;
  unsigned used = diff == 0 ? 0 : static_cast<unsigned>(64 - std::countl_zero(diff));
  unsigned len = width - std::min(width, used);
  return {a, len};
}

bool prefix_matches(const BitPrefix& p, std::uint64_t value, unsigned width) {
  return top_bits(p.value, p.length, width) == top_bits(value, p.length, width);
}

Truth ConcretePredicate::match(const Packet& pkt) const {
  switch (kind) {
    case Kind::Const: return constant;
    case Kind::Range: {
      std::uint64_t x = pkt[feat.index];
      if (has_strict && strict_lo <= x && x <= strict_hi) return Truth::True;
      if (loose_lo <= x && x <= loose_hi) return Truth::Unknown;
      return Truth::False;
    }
    case Kind::Prefix: {
      std::uint64_t x = pkt[feat.index];
      if (has_strict && prefix_matches(strict_prefix, x, width)) return Truth::True;
      if (prefix_matches(loose_prefix, x, width)) return Truth::Unknown;
      return Truth::False;
    }
    case Kind::And: return kids[0].match(pkt) && kids[1].match(pkt);
    case Kind::Or: return kids[0].match(pkt) || kids[1].match(pkt);
  }
  return Truth::Unknown;
}

bool ConcretePredicate::is_concrete() const {
  switch (kind) {
    case Kind::Const: return constant != Truth::Unknown;
    case Kind::Range: return has_strict && strict_lo == loose_lo && strict_hi == loose_hi;
    case Kind::Prefix: return has_strict && strict_prefix == loose_prefix;
    default:
      return std::all_of(kids.begin(), kids.end(), [](const auto& k) { return k.is_concrete(); });
  }
}

namespace {

constexpr std::uint64_t kMax = ~std::uint64_t{0};

struct Span {
  std::uint64_t lo, hi;
};

// Resolved values of the smallest and largest completion of a bound.
Span bound_span(const Ast& b, const std::vector<std::uint64_t>& space) {
  switch (b->kind) {
    case Kind::BoundValue: return {b->value, b->value};
    case Kind::BoundPct: {
      auto v = resolve_percentile(b->pct, space);
      return {v, v};
    }
    case Kind::Hole:
    case Kind::BoundEstimate:
      return {resolve_percentile(b->range.lo, space), resolve_percentile(b->range.hi, space)};
    default: throw MutationError("malformed bound in predicate");
  }
}

}  // namespace

ConcretePredicate resolve(const Ast& pred, const ValueSpaces& spaces, const TraceManifest& m) {
  ConcretePredicate out;
  switch (pred->kind) {
    case Kind::PredWildcard: out.constant = Truth::True; return out;
    case Kind::PredUnknown:
    case Kind::Hole: out.constant = Truth::Unknown; return out;
    case Kind::PredAnd:
    case Kind::PredOr:
      out.kind = pred->kind == Kind::PredAnd ? ConcretePredicate::Kind::And : ConcretePredicate::Kind::Or;
      out.kids.push_back(resolve(pred->kids[0], spaces, m));
      out.kids.push_back(resolve(pred->kids[1], spaces, m));
      return out;
    default: break;
  }
  out.feat = pred->feat;
  out.width = m.bit_width(pred->feat);
  const Ast& b = pred->kids.at(0);
  const auto& space = spaces.of(pred->feat);
  const bool exact = b->kind == Kind::BoundValue || b->kind == Kind::BoundPct ||
                     b->kind == Kind::RangePct || b->kind == Kind::PrefixLiteral;
  switch (pred->kind) {
    case Kind::PredEq: {
      Span s = bound_span(b, space);
      out.kind = ConcretePredicate::Kind::Range;
      out.loose_lo = s.lo;
      out.loose_hi = s.hi;
      out.has_strict = s.lo == s.hi;
      out.strict_lo = out.strict_hi = s.lo;
      return out;
    }
    case Kind::PredGeq: {
      // x >= v holds for all completions iff x >= the largest v.
      Span s = bound_span(b, space);
      out.kind = ConcretePredicate::Kind::Range;
      out.strict_lo = s.hi;
      out.loose_lo = s.lo;
      out.strict_hi = out.loose_hi = kMax;
      return out;
    }
    case Kind::PredLeq: {
      Span s = bound_span(b, space);
      out.kind = ConcretePredicate::Kind::Range;
      out.strict_lo = out.loose_lo = 0;
      out.strict_hi = s.lo;
      out.loose_hi = s.hi;
      return out;
    }
    case Kind::PredPrefix: {
      out.kind = ConcretePredicate::Kind::Prefix;
      if (b->kind == Kind::PrefixLiteral) {
        if (b->prefix.length > out.width) throw TraceError("prefix longer than the feature width");
        out.strict_prefix = out.loose_prefix = b->prefix;
      } else {
        out.loose_prefix = resolve_prefix(b->range, space, out.width);
        out.strict_prefix = out.loose_prefix;
        out.has_strict = exact;
      }
      return out;
    }
    default: throw MutationError("not a predicate node");
  }
}

}  // namespace netqre
