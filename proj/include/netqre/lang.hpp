#pragma once

// NetQRE abstract syntax, textual form, productions and complexity.

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "netqre/interval.hpp"
#include "netqre/manifest.hpp"

namespace netqre {

enum class AggOp : std::uint8_t { Max, Min, Sum };

std::string_view to_string(AggOp op);

/// Grammar non-terminals that a hole can stand for.
enum class Symbol : std::uint8_t { Program, Split, Qre, Re, Pred, Op, Feats, Bound, Range };

std::string_view to_string(Symbol s);

/// Dyadic fraction num / 2^exp in [0, 1], kept in lowest terms.
class Percentile {
 public:
  constexpr Percentile() = default;
  Percentile(std::uint64_t num, unsigned exp);

  static Percentile zero() { return {0, 0}; }
  static Percentile one() { return {1, 0}; }

  std::uint64_t numerator() const { return num_; }
  unsigned exponent() const { return exp_; }
  std::uint64_t denominator() const { return std::uint64_t{1} << exp_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(denominator()); }

  static Percentile midpoint(const Percentile& a, const Percentile& b);
  /// Width of [a, b] expressed as a power of two exponent: b - a == 2^-result.
  /// Returns nullopt when the width is not a power of two.
  static std::optional<unsigned> width_exponent(const Percentile& a, const Percentile& b);

  /// Percent text, e.g. `62.5%`.
  std::string str() const;

  friend std::strong_ordering operator<=>(const Percentile& a, const Percentile& b);
  friend bool operator==(const Percentile& a, const Percentile& b) = default;

 private:
  std::uint64_t num_ = 0;
  unsigned exp_ = 0;
};

struct PercentileRange {
  Percentile lo;
  Percentile hi;
  friend bool operator==(const PercentileRange&, const PercentileRange&) = default;
};

/// Concrete bit prefix: the top `length` bits of a `width`-bit field equal
/// the top bits of `value`.
struct BitPrefix {
  std::uint64_t value = 0;
  unsigned length = 0;
  friend bool operator==(const BitPrefix&, const BitPrefix&) = default;
};

enum class Kind : std::uint8_t {
  Hole,
  // <split>
  Split,
  // <qre>
  QreConcat,
  QreIter,
  Unit,
  // <re>
  ReConcat,
  ReStar,
  RePred,
  ReAny,
  // <pred>
  PredAnd,
  PredOr,
  PredEq,
  PredGeq,
  PredLeq,
  PredPrefix,
  PredWildcard,
  // attributes
  Op,
  Feats,
  BoundValue,
  BoundPct,
  RangePct,
  PrefixLiteral,
  // stand-ins produced by equivalent completion; never parsed
  PredUnknown,
  ReEstimate,
  QreEstimate,
  BoundEstimate,
};

struct Node;
using Ast = std::shared_ptr<const Node>;

/// One AST node. Immutable once shared; subtrees are shared between
/// programs derived from one another.
struct Node {
  Kind kind = Kind::Hole;
  Symbol hole = Symbol::Program;  // Hole only
  AggOp op = AggOp::Sum;          // Op only
  FeatureId feat{};               // predicate leaves
  std::vector<FeatureId> feats;   // Feats only
  std::uint64_t value = 0;        // BoundValue
  Percentile pct;                 // BoundPct
  PercentileRange range;          // RangePct, bound/range holes, BoundEstimate
  BitPrefix prefix;               // PrefixLiteral
  int extension = -1;             // index of the harvested shortcut that produced this subtree
  std::vector<Ast> kids;
};

/// Child-index path from the root.
using Path = std::vector<std::uint32_t>;

namespace ast {
Ast hole(Symbol s);
Ast bound_hole(PercentileRange r);
Ast range_hole(PercentileRange r);
Ast split(Ast inner, Ast op, Ast feats);
Ast qre_concat(Ast a, Ast b, Ast op);
Ast iter(Ast body, Ast op);
Ast unit(Ast re);
Ast re_concat(Ast a, Ast b);
Ast star(Ast re);
Ast re_pred(Ast pred);
Ast any();
Ast pred_and(Ast a, Ast b);
Ast pred_or(Ast a, Ast b);
Ast eq(FeatureId f, Ast bound);
Ast geq(FeatureId f, Ast bound);
Ast leq(FeatureId f, Ast bound);
Ast prefix(FeatureId f, Ast range);
Ast wildcard();
Ast op(AggOp o);
Ast feats(std::vector<FeatureId> fs);
Ast bound_value(std::uint64_t v);
Ast bound_pct(Percentile p);
Ast range_pct(PercentileRange r);
Ast prefix_literal(BitPrefix p);
Ast unknown();
Ast re_estimate();
Ast qre_estimate();
Ast bound_estimate(PercentileRange r);

/// The starting program s0: a single `<program>` hole.
Ast start();

/// Copy of `n` tagged with a shortcut index.
Ast with_extension(const Ast& n, int extension);
}  // namespace ast

/// Grammar symbol the node derives from (holes report their tag).
Symbol symbol_of(const Node& n);
bool is_complete(const Ast& p);
/// Height ignoring attribute children (ops, feature lists, bounds).
int height(const Ast& p);
bool structurally_equal(const Ast& a, const Ast& b);

const Ast& node_at(const Ast& root, const Path& path);
Ast replace_at(const Ast& root, const Path& path, Ast replacement);
/// All holes in pre-order.
std::vector<Path> holes(const Ast& p);

/// Complete program plus the numeric cut-off `program > threshold`.
struct Classifier {
  Ast program;
  double threshold = 0;
  Interval threshold_range{0, 0};
};

// ---------------------------------------------------------------- text

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

using ParseResult = std::variant<Ast, Classifier>;

/// Parses a program, partial program, or classifier (`program > T`).
ParseResult parse(std::string_view text, const TraceManifest& manifest);
Ast parse_program(std::string_view text, const TraceManifest& manifest);
Classifier parse_classifier(std::string_view text, const TraceManifest& manifest);

/// Canonical text. Without a manifest, features print as raw indices.
std::string print(const Ast& p, const TraceManifest* manifest = nullptr);
std::string print(const Classifier& c, const TraceManifest* manifest = nullptr);
std::string format_threshold(double t);

// ------------------------------------------------------- productions

/// A harvested shortcut `<symbol> ::= rhs`.
struct SyntaxExtension {
  Symbol symbol = Symbol::Pred;
  Ast rhs;
  double reward = 1;
};

/// Registry of shortcuts, deduplicated by (symbol, canonical text).
class SyntaxExtensions {
 public:
  /// Returns the index of the (possibly pre-existing) extension.
  int add(SyntaxExtension e);
  const std::vector<SyntaxExtension>& all() const { return items_; }
  const SyntaxExtension& at(int i) const { return items_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

 private:
  std::vector<SyntaxExtension> items_;
  std::vector<std::string> keys_;
};

/// Training-set facts about one feature that shape the predicate alphabet.
struct FeatureDomain {
  FeatureId feature;
  std::size_t distinct = 0;
  std::vector<std::uint64_t> values;  // listed only when distinct <= eq_domain_limit
};

struct GrammarConfig {
  unsigned percentile_depth = 4;
  std::size_t eq_domain_limit = 8;
  bool allow_split = true;
  bool allow_and_or = true;
  std::vector<FeatureId> split_features;
};

class Grammar {
 public:
  Grammar(std::vector<FeatureDomain> domains, GrammarConfig cfg);

  /// Right-hand sides legal at `hole` of `program`, shortcuts included.
  std::vector<Ast> productions(const Ast& program, const Path& hole,
                               const SyntaxExtensions* extensions = nullptr) const;
  const GrammarConfig& config() const { return cfg_; }
  const std::vector<FeatureDomain>& domains() const { return domains_; }

 private:
  std::vector<FeatureDomain> domains_;
  GrammarConfig cfg_;
  std::vector<Ast> pred_leaves_;
};

class MutationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Replaces the hole at `hole` by `production`.
Ast mutate(const Ast& p, const Path& hole, const Ast& production);

/// The hole the enumerator expands next: `<op>`/`<feats>` first, then
/// structural holes, then predicates, then numeric bounds; leftmost within
/// each class. Nullopt for complete programs.
std::optional<Path> select_hole(const Ast& p);

struct ComplexityConfig {
  double production_cost = 1;
  double hole_penalty = 2;  // per unexpanded <op> or <feats>
  unsigned percentile_depth = 4;
};

/// Number of expansion decisions behind `p`, plus penalties for pending
/// `<op>`/`<feats>` holes, minus rewards for shortcut uses.
double complexity(const Ast& p, const SyntaxExtensions* extensions = nullptr,
                  const ComplexityConfig& cfg = {});

}  // namespace netqre
