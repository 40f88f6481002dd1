#include "netqre/lang.hpp"

namespace netqre {

namespace {

Ast full_bound_hole() { return ast::bound_hole({Percentile::zero(), Percentile::one()}); }
Ast full_range_hole() { return ast::range_hole({Percentile::zero(), Percentile::one()}); }

bool coarser_than(const PercentileRange& r, unsigned depth) {
  auto w = Percentile::width_exponent(r.lo, r.hi);
  return w && *w < depth;
}

bool is_pred_compound(Kind k) { return k == Kind::PredAnd || k == Kind::PredOr; }

}  // namespace

Grammar::Grammar(std::vector<FeatureDomain> domains, GrammarConfig cfg)
    : domains_(std::move(domains)), cfg_(std::move(cfg)) {
  for (const auto& d : domains_) {
    if (d.distinct <= 1) continue;  // constant on the training set
    if (d.distinct <= cfg_.eq_domain_limit)
      for (auto v : d.values) pred_leaves_.push_back(ast::eq(d.feature, ast::bound_value(v)));
    if (d.distinct >= 3) {
      pred_leaves_.push_back(ast::geq(d.feature, full_bound_hole()));
      pred_leaves_.push_back(ast::leq(d.feature, full_bound_hole()));
    }
    if (d.distinct > cfg_.eq_domain_limit)
      pred_leaves_.push_back(ast::prefix(d.feature, full_range_hole()));
  }
}

std::vector<Ast> Grammar::productions(const Ast& program, const Path& hole,
                                      const SyntaxExtensions* extensions) const {
  const Ast& target = node_at(program, hole);
  if (target->kind != Kind::Hole) throw MutationError("no hole at the given position");

  const Node* parent = nullptr;
  std::uint32_t child_index = 0;
  if (!hole.empty()) {
    Path up(hole.begin(), hole.end() - 1);
    parent = node_at(program, up).get();
    child_index = hole.back();
  }

  // Canonical-form restrictions keep one derivation per program.
  auto allowed = [&](Kind k) {
    if (!parent) return true;
    switch (k) {
      case Kind::ReConcat: return !(parent->kind == Kind::ReConcat && child_index == 0);
      case Kind::ReStar: return parent->kind != Kind::ReStar;
      case Kind::PredAnd:
        return !(parent->kind == Kind::PredAnd && child_index == 0);
      case Kind::PredOr:
        return !(parent->kind == Kind::PredAnd) && !(parent->kind == Kind::PredOr && child_index == 0);
      default: return true;
    }
  };

  std::vector<Ast> out;
  const Symbol sym = target->hole;
  switch (sym) {
    case Symbol::Program:
    case Symbol::Split:
      if (cfg_.allow_split && !cfg_.split_features.empty())
        out.push_back(ast::split(ast::hole(Symbol::Split), ast::hole(Symbol::Op), ast::hole(Symbol::Feats)));
      out.push_back(ast::hole(Symbol::Qre));
      break;
    case Symbol::Qre:
      out.push_back(ast::qre_concat(ast::hole(Symbol::Qre), ast::hole(Symbol::Qre), ast::hole(Symbol::Op)));
      out.push_back(ast::iter(ast::hole(Symbol::Qre), ast::hole(Symbol::Op)));
      out.push_back(ast::unit(ast::hole(Symbol::Re)));
      break;
    case Symbol::Re:
      if (allowed(Kind::ReConcat)) out.push_back(ast::re_concat(ast::hole(Symbol::Re), ast::hole(Symbol::Re)));
      if (allowed(Kind::ReStar)) out.push_back(ast::star(ast::hole(Symbol::Re)));
      out.push_back(ast::re_pred(ast::hole(Symbol::Pred)));
      out.push_back(ast::any());
      break;
    case Symbol::Pred:
      out.insert(out.end(), pred_leaves_.begin(), pred_leaves_.end());
      if (cfg_.allow_and_or) {
        if (allowed(Kind::PredAnd)) out.push_back(ast::pred_and(ast::hole(Symbol::Pred), ast::hole(Symbol::Pred)));
        if (allowed(Kind::PredOr)) out.push_back(ast::pred_or(ast::hole(Symbol::Pred), ast::hole(Symbol::Pred)));
      }
      break;
    case Symbol::Op:
      for (auto o : {AggOp::Max, AggOp::Min, AggOp::Sum}) out.push_back(ast::op(o));
      break;
    case Symbol::Feats:
      for (auto f : cfg_.split_features) out.push_back(ast::feats({f}));
      break;
    case Symbol::Bound: {
      const auto& r = target->range;
      if (coarser_than(r, cfg_.percentile_depth)) {
        auto mid = Percentile::midpoint(r.lo, r.hi);
        out.push_back(ast::bound_hole({r.lo, mid}));
        out.push_back(ast::bound_hole({mid, r.hi}));
      } else {
        // Each granule owns its lower end; the top granule also owns 100%.
        out.push_back(ast::bound_pct(r.lo));
        if (r.hi == Percentile::one()) out.push_back(ast::bound_pct(r.hi));
      }
      break;
    }
    case Symbol::Range: {
      const auto& r = target->range;
      out.push_back(ast::range_pct(r));
      if (coarser_than(r, cfg_.percentile_depth)) {
        auto mid = Percentile::midpoint(r.lo, r.hi);
        out.push_back(ast::range_hole({r.lo, mid}));
        out.push_back(ast::range_hole({mid, r.hi}));
      }
      break;
    }
  }

  if (extensions) {
    for (std::size_t i = 0; i < extensions->size(); ++i) {
      const auto& e = extensions->at(static_cast<int>(i));
      bool fits = e.symbol == sym ||
                  ((sym == Symbol::Program || sym == Symbol::Split) &&
                   (e.symbol == Symbol::Split || e.symbol == Symbol::Qre));
      if (!fits) continue;
      if (e.rhs->kind == Kind::Split && !(cfg_.allow_split)) continue;
      if (!allowed(e.rhs->kind)) continue;
      if (sym == Symbol::Pred && is_pred_compound(e.rhs->kind) && !cfg_.allow_and_or) continue;
      out.push_back(ast::with_extension(e.rhs, static_cast<int>(i)));
    }
  }
  return out;
}

}  // namespace netqre
