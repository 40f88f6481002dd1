#include <algorithm>
#include <bit>
#include <cassert>

#include "netqre/lang.hpp"

namespace netqre {

std::string_view to_string(AggOp op) {
  switch (op) {
    case AggOp::Max: return "max";
    case AggOp::Min: return "min";
    case AggOp::Sum: return "sum";
  }
  return "?";
}

std::string_view to_string(Symbol s) {
  switch (s) {
    case Symbol::Program: return "<program>";
    case Symbol::Split: return "<split>";
    case Symbol::Qre: return "<qre>";
    case Symbol::Re: return "<re>";
    case Symbol::Pred: return "<pred>";
    case Symbol::Op: return "<op>";
    case Symbol::Feats: return "<feats>";
    case Symbol::Bound: return "<bound>";
    case Symbol::Range: return "<range>";
  }
  return "<?>";
}

// ---------------------------------------------------------------- Percentile

Percentile::Percentile(std::uint64_t num, unsigned exp) : num_(num), exp_(exp) {
  if (exp > 62) throw std::invalid_argument("percentile refinement too deep");
  if (num > denominator()) throw std::invalid_argument("percentile above 100%");
  while (exp_ > 0 && num_ % 2 == 0) {
    num_ /= 2;
    --exp_;
  }
  if (num_ == 0) exp_ = 0;
}

std::strong_ordering operator<=>(const Percentile& a, const Percentile& b) {
  unsigned e = std::max(a.exp_, b.exp_);
  return (a.num_ << (e - a.exp_)) <=> (b.num_ << (e - b.exp_));
}

Percentile Percentile::midpoint(const Percentile& a, const Percentile& b) {
  // Both numerators are even at exponent e, so the halved sum is exact.
  unsigned e = std::max(a.exp_, b.exp_) + 1;
  return Percentile(((a.num_ << (e - a.exp_)) + (b.num_ << (e - b.exp_))) / 2, e);
}

std::optional<unsigned> Percentile::width_exponent(const Percentile& a, const Percentile& b) {
  if (b < a) return std::nullopt;
  unsigned e = std::max(a.exp_, b.exp_);
  std::uint64_t w = (b.num_ << (e - b.exp_)) - (a.num_ << (e - a.exp_));
  if (w == 0 || !std::has_single_bit(w)) return std::nullopt;
  unsigned shift = static_cast<unsigned>(std::countr_zero(w));
  if (shift > e) return std::nullopt;
  return e - shift;
}

std::string Percentile::str() const {
  // num/2^exp * 100, printed exactly (dyadic fractions terminate in decimal).
  std::uint64_t scaled = num_ * 100;
  std::uint64_t den = denominator();
  std::string out = std::to_string(scaled / den);
  std::uint64_t rem = scaled % den;
  if (rem != 0) {
    out += '.';
    while (rem != 0) {
      rem *= 10;
      out += static_cast<char>('0' + rem / den);
      rem %= den;
    }
  }
  return out + "%";
}

// ------------------------------------------------------------------ builders

namespace ast {
namespace {
std::shared_ptr<Node> make(Kind k, std::vector<Ast> kids = {}) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->kids = std::move(kids);
  return n;
}
}  // namespace

Ast hole(Symbol s) {
  auto n = make(Kind::Hole);
  n->hole = s;
  if (s == Symbol::Bound || s == Symbol::Range) n->range = {Percentile::zero(), Percentile::one()};
  return n;
}
Ast bound_hole(PercentileRange r) {
  auto n = make(Kind::Hole);
  n->hole = Symbol::Bound;
  n->range = r;
  return n;
}
Ast range_hole(PercentileRange r) {
  auto n = make(Kind::Hole);
  n->hole = Symbol::Range;
  n->range = r;
  return n;
}
Ast split(Ast inner, Ast op, Ast feats) {
  return make(Kind::Split, {std::move(inner), std::move(op), std::move(feats)});
}
Ast qre_concat(Ast a, Ast b, Ast op) {
  return make(Kind::QreConcat, {std::move(a), std::move(b), std::move(op)});
}
Ast iter(Ast body, Ast op) { return make(Kind::QreIter, {std::move(body), std::move(op)}); }
Ast unit(Ast re) { return make(Kind::Unit, {std::move(re)}); }
Ast re_concat(Ast a, Ast b) { return make(Kind::ReConcat, {std::move(a), std::move(b)}); }
Ast star(Ast re) { return make(Kind::ReStar, {std::move(re)}); }
Ast re_pred(Ast pred) { return make(Kind::RePred, {std::move(pred)}); }
Ast any() { return make(Kind::ReAny); }
Ast pred_and(Ast a, Ast b) { return make(Kind::PredAnd, {std::move(a), std::move(b)}); }
Ast pred_or(Ast a, Ast b) { return make(Kind::PredOr, {std::move(a), std::move(b)}); }
namespace {
Ast leaf(Kind k, FeatureId f, Ast child) {
  auto n = make(k, {std::move(child)});
  n->feat = f;
  return n;
}
}  // namespace
Ast eq(FeatureId f, Ast bound) { return leaf(Kind::PredEq, f, std::move(bound)); }
Ast geq(FeatureId f, Ast bound) { return leaf(Kind::PredGeq, f, std::move(bound)); }
Ast leq(FeatureId f, Ast bound) { return leaf(Kind::PredLeq, f, std::move(bound)); }
Ast prefix(FeatureId f, Ast range) { return leaf(Kind::PredPrefix, f, std::move(range)); }
Ast wildcard() { return make(Kind::PredWildcard); }
Ast op(AggOp o) {
  auto n = make(Kind::Op);
  n->op = o;
  return n;
}
Ast feats(std::vector<FeatureId> fs) {
  auto n = make(Kind::Feats);
  n->feats = std::move(fs);
  return n;
}
Ast bound_value(std::uint64_t v) {
  auto n = make(Kind::BoundValue);
  n->value = v;
  return n;
}
Ast bound_pct(Percentile p) {
  auto n = make(Kind::BoundPct);
  n->pct = p;
  return n;
}
Ast range_pct(PercentileRange r) {
  auto n = make(Kind::RangePct);
  n->range = r;
  return n;
}
Ast prefix_literal(BitPrefix p) {
  auto n = make(Kind::PrefixLiteral);
  n->prefix = p;
  return n;
}
Ast unknown() { return make(Kind::PredUnknown); }
Ast re_estimate() { return make(Kind::ReEstimate); }
Ast qre_estimate() { return make(Kind::QreEstimate); }
Ast bound_estimate(PercentileRange r) {
  auto n = make(Kind::BoundEstimate);
  n->range = r;
  return n;
}

Ast start() { return hole(Symbol::Program); }

Ast with_extension(const Ast& n, int extension) {
  auto copy = std::make_shared<Node>(*n);
  copy->extension = extension;
  return copy;
}
}  // namespace ast

// --------------------------------------------------------------- structure

Symbol symbol_of(const Node& n) {
  switch (n.kind) {
    case Kind::Hole: return n.hole;
    case Kind::Split: return Symbol::Split;
    case Kind::QreConcat:
    case Kind::QreIter:
    case Kind::Unit:
    case Kind::QreEstimate: return Symbol::Qre;
    case Kind::ReConcat:
    case Kind::ReStar:
    case Kind::RePred:
    case Kind::ReAny:
    case Kind::ReEstimate: return Symbol::Re;
    case Kind::PredAnd:
    case Kind::PredOr:
    case Kind::PredEq:
    case Kind::PredGeq:
    case Kind::PredLeq:
    case Kind::PredPrefix:
    case Kind::PredWildcard:
    case Kind::PredUnknown: return Symbol::Pred;
    case Kind::Op: return Symbol::Op;
    case Kind::Feats: return Symbol::Feats;
    case Kind::BoundValue:
    case Kind::BoundPct:
    case Kind::BoundEstimate: return Symbol::Bound;
    case Kind::RangePct:
    case Kind::PrefixLiteral: return Symbol::Range;
  }
  return Symbol::Program;
}

bool is_complete(const Ast& p) {
  if (p->kind == Kind::Hole) return false;
  return std::all_of(p->kids.begin(), p->kids.end(), [](const Ast& k) { return is_complete(k); });
}

namespace {
bool is_attribute(const Node& n) {
  switch (symbol_of(n)) {
    case Symbol::Op:
    case Symbol::Feats:
    case Symbol::Bound:
    case Symbol::Range: return true;
    default: return false;
  }
}
}  // namespace

int height(const Ast& p) {
  int h = 0;
  for (const auto& k : p->kids)
    if (!is_attribute(*k)) h = std::max(h, height(k));
  return h + 1;
}

bool structurally_equal(const Ast& a, const Ast& b) {
  if (a == b) return true;
  if (a->kind != b->kind || a->kids.size() != b->kids.size()) return false;
  switch (a->kind) {
    case Kind::Hole:
      if (a->hole != b->hole) return false;
      if ((a->hole == Symbol::Bound || a->hole == Symbol::Range) && !(a->range == b->range))
        return false;
      break;
    case Kind::Op:
      if (a->op != b->op) return false;
      break;
    case Kind::Feats:
      if (a->feats != b->feats) return false;
      break;
    case Kind::PredEq:
    case Kind::PredGeq:
    case Kind::PredLeq:
    case Kind::PredPrefix:
      if (a->feat != b->feat) return false;
      break;
    case Kind::BoundValue:
      if (a->value != b->value) return false;
      break;
    case Kind::BoundPct:
      if (!(a->pct == b->pct)) return false;
      break;
    case Kind::RangePct:
    case Kind::BoundEstimate:
      if (!(a->range == b->range)) return false;
      break;
    case Kind::PrefixLiteral:
      if (!(a->prefix == b->prefix)) return false;
      break;
    default: break;
  }
  for (std::size_t i = 0; i < a->kids.size(); ++i)
    if (!structurally_equal(a->kids[i], b->kids[i])) return false;
  return true;
}

const Ast& node_at(const Ast& root, const Path& path) {
  const Ast* cur = &root;
  for (auto i : path) {
    if (i >= (*cur)->kids.size()) throw MutationError("path leaves the tree");
    cur = &(*cur)->kids[i];
  }
  return *cur;
}

namespace {
Ast replace_rec(const Ast& n, const Path& path, std::size_t depth, Ast replacement) {
  if (depth == path.size()) return replacement;
  auto i = path[depth];
  if (i >= n->kids.size()) throw MutationError("path leaves the tree");
  auto copy = std::make_shared<Node>(*n);
  copy->kids[i] = replace_rec(n->kids[i], path, depth + 1, std::move(replacement));
  return copy;
}

void collect_holes(const Ast& n, Path& cur, std::vector<Path>& out) {
  if (n->kind == Kind::Hole) {
    out.push_back(cur);
    return;
  }
  for (std::uint32_t i = 0; i < n->kids.size(); ++i) {
    cur.push_back(i);
    collect_holes(n->kids[i], cur, out);
    cur.pop_back();
  }
}

bool fits(Symbol slot, Symbol got) {
  if (slot == got) return true;
  // <program> ::= <split>; <split> ::= <qre>
  if (slot == Symbol::Program) return got == Symbol::Split || got == Symbol::Qre;
  if (slot == Symbol::Split) return got == Symbol::Qre;
  return false;
}
}  // namespace

Ast replace_at(const Ast& root, const Path& path, Ast replacement) {
  return replace_rec(root, path, 0, std::move(replacement));
}

std::vector<Path> holes(const Ast& p) {
  std::vector<Path> out;
  Path cur;
  collect_holes(p, cur, out);
  return out;
}

Ast mutate(const Ast& p, const Path& hole, const Ast& production) {
  const Ast& target = node_at(p, hole);
  if (target->kind != Kind::Hole) throw MutationError("no hole at the given position");
  Symbol got = symbol_of(*production);
  if (!fits(target->hole, got))
    throw MutationError(std::string("production for ") + std::string(to_string(got)) +
                        " is illegal at " + std::string(to_string(target->hole)));
  if (target->hole == Symbol::Bound || target->hole == Symbol::Range) {
    const auto& r = target->range;
    auto inside = [&](const Percentile& x) { return r.lo <= x && x <= r.hi; };
    bool ok = false;
    switch (production->kind) {
      case Kind::Hole:
      case Kind::RangePct: ok = inside(production->range.lo) && inside(production->range.hi); break;
      case Kind::BoundPct: ok = inside(production->pct); break;
      default: ok = false;
    }
    if (!ok) throw MutationError("refinement leaves the hole's percentile range");
  }
  return replace_at(p, hole, production);
}

std::optional<Path> select_hole(const Ast& p) {
  auto all = holes(p);
  if (all.empty()) return std::nullopt;
  auto rank = [&](const Path& path) {
    switch (node_at(p, path)->hole) {
      case Symbol::Op:
      case Symbol::Feats: return 0;
      case Symbol::Program:
      case Symbol::Split:
      case Symbol::Qre: return 1;
      case Symbol::Re: return 2;
      case Symbol::Pred: return 3;
      case Symbol::Bound:
      case Symbol::Range: return 4;
    }
    return 5;
  };
  return *std::min_element(all.begin(), all.end(),
                           [&](const Path& a, const Path& b) { return rank(a) < rank(b); });
}

// -------------------------------------------------------------- complexity

namespace {
double refinement_steps(const PercentileRange& r) {
  auto w = Percentile::width_exponent(r.lo, r.hi);
  return w ? static_cast<double>(*w) : 0.0;
}

double cost(const Ast& n, Symbol slot, const SyntaxExtensions* ext, const ComplexityConfig& cfg) {
  const double unit = cfg.production_cost;
  // Choosing the <qre> alternative of <split> is itself a decision.
  double lift = ((slot == Symbol::Program || slot == Symbol::Split) && symbol_of(*n) == Symbol::Qre)
                    ? unit
                    : 0.0;
  if (n->extension >= 0) {
    double reward = (ext && static_cast<std::size_t>(n->extension) < ext->size())
                        ? ext->at(n->extension).reward
                        : 0.0;
    return lift + unit - reward;
  }
  switch (n->kind) {
    case Kind::Hole:
      switch (n->hole) {
        case Symbol::Op:
        case Symbol::Feats: return cfg.hole_penalty;
        case Symbol::Bound:
        case Symbol::Range: return unit * refinement_steps(n->range);
        default: return lift;
      }
    case Kind::Feats: return unit * static_cast<double>(n->feats.size());
    case Kind::BoundValue:
    case Kind::PrefixLiteral: return 0;
    case Kind::BoundPct: return unit * (cfg.percentile_depth + 1);
    case Kind::RangePct: return unit * (refinement_steps(n->range) + 1);
    case Kind::PredUnknown:
    case Kind::ReEstimate:
    case Kind::QreEstimate:
    case Kind::BoundEstimate: return 0;
    default: break;
  }
  double total = lift + unit;
  for (std::size_t i = 0; i < n->kids.size(); ++i) {
    Symbol child_slot = symbol_of(*n->kids[i]);
    if (n->kind == Kind::Split && i == 0) child_slot = Symbol::Split;
    total += cost(n->kids[i], child_slot, ext, cfg);
  }
  return total;
}
}  // namespace

double complexity(const Ast& p, const SyntaxExtensions* extensions, const ComplexityConfig& cfg) {
  return cost(p, Symbol::Program, extensions, cfg);
}

// -------------------------------------------------------------- extensions

int SyntaxExtensions::add(SyntaxExtension e) {
  std::string key = std::string(to_string(e.symbol)) + " ::= " + print(e.rhs);
  for (std::size_t i = 0; i < keys_.size(); ++i)
    if (keys_[i] == key) return static_cast<int>(i);
  keys_.push_back(std::move(key));
  items_.push_back(std::move(e));
  return static_cast<int>(items_.size() - 1);
}

}  // namespace netqre
