#include "netqre/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <unordered_set>

namespace netqre {

// ------------------------------------------------------------- completions

namespace {

Ast rebuild(const Ast& n, std::vector<Ast> kids) {
  bool same = true;
  for (std::size_t i = 0; i < kids.size(); ++i) same = same && kids[i] == n->kids[i];
  if (same) return n;
  auto copy = std::make_shared<Node>(*n);
  copy->kids = std::move(kids);
  return copy;
}

Ast equivalent(const Ast& n) {
  if (n->kind == Kind::Hole) {
    switch (n->hole) {
      case Symbol::Pred: return ast::unknown();
      case Symbol::Re: return ast::re_estimate();
      case Symbol::Qre: return ast::qre_estimate();
      case Symbol::Bound:
      case Symbol::Range: return ast::bound_estimate(n->range);
      default:
        throw MutationError(std::string("no equivalent completion for a ") +
                            std::string(to_string(n->hole)) + " hole");
    }
  }
  std::vector<Ast> kids;
  kids.reserve(n->kids.size());
  for (const auto& k : n->kids) kids.push_back(equivalent(k));
  return rebuild(n, std::move(kids));
}

Ast cheapest(const Ast& n, Kind parent) {
  if (n->kind == Kind::Hole) {
    switch (n->hole) {
      case Symbol::Pred: return ast::wildcard();
      case Symbol::Re: return ast::any();
      case Symbol::Qre: return ast::unit(ast::any());
      case Symbol::Bound: return ast::bound_pct(parent == Kind::PredLeq ? n->range.hi : n->range.lo);
      case Symbol::Range: return ast::range_pct(n->range);
      default:
        throw MutationError(std::string("cannot complete a ") + std::string(to_string(n->hole)) +
                            " hole");
    }
  }
  std::vector<Ast> kids;
  kids.reserve(n->kids.size());
  for (const auto& k : n->kids) kids.push_back(cheapest(k, n->kind));
  auto is_w = [](const Ast& a) { return a->kind == Kind::PredWildcard; };
  switch (n->kind) {
    case Kind::RePred:
      if (is_w(kids[0])) return ast::any();
      break;
    case Kind::PredAnd:
      if (is_w(kids[0])) return kids[1];
      if (is_w(kids[1])) return kids[0];
      break;
    case Kind::PredOr:
      if (is_w(kids[0])) return kids[0];
      if (is_w(kids[1])) return kids[1];
      break;
    default: break;
  }
  return rebuild(n, std::move(kids));
}

}  // namespace

Ast complete_equivalent(const Ast& p) { return equivalent(p); }

bool completable(const Ast& p) {
  if (p->kind == Kind::Hole)
    return p->hole != Symbol::Program && p->hole != Symbol::Split && p->hole != Symbol::Op &&
           p->hole != Symbol::Feats;
  return std::all_of(p->kids.begin(), p->kids.end(), [](const Ast& k) { return completable(k); });
}

Ast concretize(const Ast& p) { return cheapest(p, Kind::Hole); }

Grammar make_grammar(const ValueSpaces& spaces, const TraceManifest& manifest, GrammarConfig cfg) {
  auto domains = alphabet(spaces, cfg.eq_domain_limit);
  if (cfg.split_features.empty())
    for (const auto& d : domains)
      if (d.feature != manifest.time_feature() && d.distinct > 1) cfg.split_features.push_back(d.feature);
  return Grammar(std::move(domains), std::move(cfg));
}

// ----------------------------------------------------------------- decide

Bounds effective_bounds(const Outcome& o) {
  return {o.matched && o.certain ? o.value.lo : -kInf, o.matched ? o.value.hi : -kInf};
}

Decision decide_from_bounds(const std::vector<Bounds>& pos, const std::vector<Bounds>& neg,
                            double epsilon) {
  if (pos.empty() || neg.empty()) throw std::invalid_argument("decide needs examples of both classes");
  Decision d;

  // Accept test after dropping the worst outliers of each class.
  std::vector<double> pos_lo, neg_hi, neg_lo;
  for (const auto& b : pos) pos_lo.push_back(b.lo);
  for (const auto& b : neg) {
    neg_hi.push_back(b.hi);
    neg_lo.push_back(b.lo);
  }
  std::sort(pos_lo.begin(), pos_lo.end());
  std::sort(neg_hi.begin(), neg_hi.end(), std::greater<>());
  auto kp = static_cast<std::size_t>(std::floor(epsilon * static_cast<double>(pos.size())));
  auto kn = static_cast<std::size_t>(std::floor(epsilon * static_cast<double>(neg.size())));
  kp = std::min(kp, pos.size() - 1);
  kn = std::min(kn, neg.size() - 1);
  double a = neg_hi[kn];
  double b = pos_lo[kp];
  if (a < b) {
    d.kind = Decision::Kind::Accept;
    d.range = Interval(a, b);
    return d;
  }

  // Reject test over all pairs, tolerating an epsilon fraction of failures.
  std::sort(neg_lo.begin(), neg_lo.end());
  double ok = 0;
  for (const auto& p : pos)
    ok += static_cast<double>(std::lower_bound(neg_lo.begin(), neg_lo.end(), p.hi) - neg_lo.begin());
  double needed = (1 - epsilon) * static_cast<double>(pos.size()) * static_cast<double>(neg.size());
  if (ok < needed) d.kind = Decision::Kind::Reject;
  return d;
}

namespace {

std::vector<Bounds> bounds_of(const Machine& m, const ExampleRefs& es, WorkerPool* pool) {
  std::vector<Bounds> out(es.size());
  auto one = [&](std::size_t i) { out[i] = effective_bounds(eval(m, *es[i])); };
  if (pool)
    pool->parallel_for(es.size(), one);
  else
    for (std::size_t i = 0; i < es.size(); ++i) one(i);
  return out;
}

}  // namespace

Decision decide(const Ast& p, const ExampleRefs& pos, const ExampleRefs& neg, const ValueSpaces& spaces,
                const TraceManifest& manifest, double epsilon, WorkerPool* pool) {
  if (!completable(p)) return {};
  Machine m = compile(complete_equivalent(p), spaces, manifest);
  return decide_from_bounds(bounds_of(m, pos, pool), bounds_of(m, neg, pool), epsilon);
}

double score_value(const ExactResult& r) {
  switch (r.status) {
    case ExactResult::Status::Value: return r.value;
    case ExactResult::Status::Conflict: return r.range.midpoint();
    case ExactResult::Status::NoMatch: return -kInf;
  }
  return -kInf;
}

double learning_rate(const Classifier& c, const ExampleRefs& pos, const ExampleRefs& neg,
                     const ValueSpaces& spaces, const TraceManifest& manifest, WorkerPool* pool) {
  Machine m = compile(c.program, spaces, manifest);
  std::vector<char> correct(pos.size() + neg.size());
  auto one = [&](std::size_t i) {
    bool is_pos = i < pos.size();
    const Example& e = is_pos ? *pos[i] : *neg[i - pos.size()];
    bool above = score_value(eval_exact(m, e)) > c.threshold;
    correct[i] = above == is_pos;
  };
  if (pool)
    pool->parallel_for(correct.size(), one);
  else
    for (std::size_t i = 0; i < correct.size(); ++i) one(i);
  if (correct.empty()) return 0;
  return static_cast<double>(std::count(correct.begin(), correct.end(), 1)) /
         static_cast<double>(correct.size());
}

void sort_candidates(std::vector<Candidate>& cs) {
  std::stable_sort(cs.begin(), cs.end(), [](const Candidate& a, const Candidate& b) {
    if (a.learning_rate != b.learning_rate) return a.learning_rate > b.learning_rate;
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.text < b.text;
  });
}

// ----------------------------------------------------------------- search

namespace {

struct Entry {
  double cost;
  std::string text;
  Ast program;
};

struct Later {
  bool operator()(const Entry& a, const Entry& b) const {
    if (a.cost != b.cost) return a.cost > b.cost;
    return a.text > b.text;
  }
};

}  // namespace

std::vector<Candidate> search(const SearchContext& ctx, const ExampleRefs& pos, const ExampleRefs& neg,
                              const std::vector<Ast>& seeds, const SynthConfig& cfg, SearchStats* stats) {
  SearchStats local;
  SearchStats& st = stats ? *stats : local;
  std::vector<Candidate> out;
  if (pos.empty() || neg.empty() || cfg.candidates == 0) return out;

  ComplexityConfig free_cfg = cfg.complexity;
  free_cfg.hole_penalty = 0;

  std::priority_queue<Entry, std::vector<Entry>, Later> frontier;
  std::unordered_set<std::string> seen;
  std::unordered_set<std::string> emitted;
  auto push = [&](Ast p) {
    if (complexity(p, ctx.extensions, free_cfg) > cfg.max_cost) return;
    std::string text = print(p);
    if (!seen.insert(text).second) return;
    frontier.push({complexity(p, ctx.extensions, cfg.complexity), std::move(text), std::move(p)});
    ++st.generated;
  };
  for (const auto& s : seeds.empty() ? std::vector<Ast>{ast::start()} : seeds) push(s);

  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t batch_size = std::max<std::size_t>(1, cfg.batch);
  while (!frontier.empty() && out.size() < cfg.candidates) {
    if (st.popped >= cfg.node_budget) {
      st.out_of_budget = true;
      break;
    }
    if (cfg.time_budget > 0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() > cfg.time_budget) {
      st.out_of_budget = true;
      break;
    }
    std::vector<Entry> batch;
    while (!frontier.empty() && batch.size() < batch_size && st.popped + batch.size() < cfg.node_budget) {
      batch.push_back(frontier.top());
      frontier.pop();
    }
    std::vector<Decision> decisions(batch.size());
    std::vector<char> evaluated(batch.size(), 0);
    auto decide_one = [&](std::size_t i) {
      const Ast& p = batch[i].program;
      bool evaluate = cfg.prune ? completable(p) : is_complete(p);
      if (!evaluate) return;
      evaluated[i] = 1;
      decisions[i] = decide(p, pos, neg, ctx.spaces, ctx.manifest, cfg.epsilon);
    };
    if (ctx.pool)
      ctx.pool->parallel_for(batch.size(), decide_one);
    else
      for (std::size_t i = 0; i < batch.size(); ++i) decide_one(i);

    for (std::size_t i = 0; i < batch.size() && out.size() < cfg.candidates; ++i) {
      ++st.popped;
      const Ast& p = batch[i].program;
      if (evaluated[i]) {
        ++st.decided;
        st.evals += pos.size() + neg.size();
      }
      const Decision& d = decisions[i];
      if (d.kind == Decision::Kind::Accept) {
        ++st.accepted;
        Ast q = concretize(p);
        std::string text = print(q);
        if (!emitted.insert(text).second) continue;
        Candidate c;
        c.classifier = Classifier{q, d.range.midpoint(), d.range};
        c.cost = complexity(q, ctx.extensions, cfg.complexity);
        c.text = std::move(text);
        out.push_back(std::move(c));
        continue;
      }
      if (d.kind == Decision::Kind::Reject) {
        ++st.rejected;
        continue;
      }
      auto hole = select_hole(p);
      if (!hole) continue;
      for (const auto& prod : ctx.grammar.productions(p, *hole, ctx.extensions)) push(mutate(p, *hole, prod));
    }
  }
  if (frontier.empty() && out.size() < cfg.candidates) st.exhausted = true;

  for (auto& c : out) c.learning_rate = learning_rate(c.classifier, pos, neg, ctx.spaces, ctx.manifest, ctx.pool);
  sort_candidates(out);
  return out;
}

}  // namespace netqre
