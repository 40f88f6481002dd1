#pragma once

// Labeled packet traces, per-feature value spaces and predicate resolution.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "netqre/lang.hpp"
#include "netqre/manifest.hpp"

namespace netqre {

/// One feature vector; the time feature holds the inter-arrival time in µs.
using Packet = std::vector<std::uint64_t>;

enum class Label { Positive, Negative };

struct Example {
  std::string id;
  Label label = Label::Positive;
  std::vector<Packet> packets;
};

using ExampleRefs = std::vector<const Example*>;

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sorted distinct training values per feature.
struct ValueSpaces {
  std::vector<std::vector<std::uint64_t>> values;

  static ValueSpaces build(const TraceManifest& m, const std::vector<const Example*>& examples);
  const std::vector<std::uint64_t>& of(FeatureId f) const { return values.at(f.index); }
  friend bool operator==(const ValueSpaces&, const ValueSpaces&) = default;
};

struct TraceSet {
  TraceManifest manifest;
  std::vector<Example> positives;
  std::vector<Example> negatives;
  ValueSpaces spaces;

  ExampleRefs positive_refs() const;
  ExampleRefs negative_refs() const;
};

/// Validates the examples against the manifest and computes value spaces.
TraceSet make_trace_set(TraceManifest manifest, std::vector<Example> examples);

TraceSet load(const std::string& path);
TraceSet read_trace_set(std::istream& in);
/// Writes the line-delimited format with precomputed intervals.
void write_trace_set(std::ostream& out, const TraceSet& set);

/// Predicate alphabet facts for the grammar.
std::vector<FeatureDomain> alphabet(const ValueSpaces& spaces, std::size_t eq_domain_limit);

// ---------------------------------------------------------- predicates

enum class Truth : std::uint8_t { False, True, Unknown };

constexpr Truth operator&&(Truth a, Truth b) {
  if (a == Truth::False || b == Truth::False) return Truth::False;
  if (a == Truth::True && b == Truth::True) return Truth::True;
  return Truth::Unknown;
}

constexpr Truth operator||(Truth a, Truth b) {
  if (a == Truth::True || b == Truth::True) return Truth::True;
  if (a == Truth::False && b == Truth::False) return Truth::False;
  return Truth::Unknown;
}

/// A predicate with every percentile replaced by a training value.
///
/// Leaves built from estimates carry two tests: the strict one holds for
/// every completion, the loose one for at least one. Concrete leaves have
/// identical strict and loose tests.
struct ConcretePredicate {
  enum class Kind : std::uint8_t { Const, Range, Prefix, And, Or };

  Kind kind = Kind::Const;
  Truth constant = Truth::True;
  FeatureId feat{};
  bool has_strict = true;
  std::uint64_t strict_lo = 0, strict_hi = 0;
  std::uint64_t loose_lo = 0, loose_hi = 0;
  BitPrefix strict_prefix, loose_prefix;
  unsigned width = 0;
  std::vector<ConcretePredicate> kids;

  Truth match(const Packet& pkt) const;
  bool is_concrete() const;
};

/// Value at rank max(0, ceil(q*n) - 1) of a sorted space of n values.
std::uint64_t resolve_percentile(const Percentile& q, const std::vector<std::uint64_t>& space);
/// Longest common prefix of the space values whose ranks fall in the range.
BitPrefix resolve_prefix(const PercentileRange& r, const std::vector<std::uint64_t>& space,
                         unsigned width);
bool prefix_matches(const BitPrefix& p, std::uint64_t value, unsigned width);

/// Resolves a `<pred>` subtree (concrete, or made of estimate stand-ins).
ConcretePredicate resolve(const Ast& pred, const ValueSpaces& spaces, const TraceManifest& m);

inline Truth match_packet(const ConcretePredicate& p, const Packet& pkt) { return p.match(pkt); }

}  // namespace netqre
