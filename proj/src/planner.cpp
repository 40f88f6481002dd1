#include "netqre/planner.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

namespace netqre {

std::pair<Subset, Subset> split(const ExampleRefs& pos, const ExampleRefs& neg) {
  if (pos.size() < 2 || neg.size() < 2)
    throw std::invalid_argument("cannot split a task with fewer than two examples in a class");
  auto halve = [](const ExampleRefs& v, ExampleRefs& l, ExampleRefs& r) {
    std::size_t left = (v.size() + 1) / 2;
    l.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(left));
    r.assign(v.begin() + static_cast<std::ptrdiff_t>(left), v.end());
  };
  Subset l, r;
  halve(pos, l.pos, r.pos);
  halve(neg, l.neg, r.neg);
  return {std::move(l), std::move(r)};
}

// ------------------------------------------------------------------ harvest

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

Ast strip_tags(const Ast& n) {
  auto copy = std::make_shared<Node>(*n);
  copy->extension = -1;
  for (auto& k : copy->kids) k = strip_tags(k);
  return copy;
}

double derivation_cost(const Ast& n) {
  double c = complexity(n);
  // complexity() charges the <split> ::= <qre> step at the root.
  if (symbol_of(*n) == Symbol::Qre) c -= 1;
  return c;
}

void collect(const Ast& n, int depth, double reward, std::vector<SyntaxExtension>& out) {
  if (is_attribute(*n) || n->kind == Kind::Hole) return;
  if (height(n) <= depth && derivation_cost(n) > 1)
    out.push_back({symbol_of(*n), strip_tags(n), reward});
  for (const auto& k : n->kids) collect(k, depth, reward, out);
}

Ast seed_of(const Ast& n, int depth) {
  if (is_attribute(*n) || n->kind == Kind::Hole) return n;
  int h = height(n);
  if (h == depth) return ast::hole(symbol_of(*n));
  if (h < depth) return n;
  auto copy = std::make_shared<Node>(*n);
  for (auto& k : copy->kids) k = seed_of(k, depth);
  return copy;
}

}  // namespace

Harvest harvest(const Classifier& c, int depth_threshold, double reward) {
  Harvest h;
  if (depth_threshold > 0) collect(c.program, depth_threshold, reward, h.extensions);
  h.seed = depth_threshold > 0 ? seed_of(c.program, depth_threshold) : c.program;
  return h;
}

// --------------------------------------------------------------------- pool

bool CandidatePool::add(const Candidate& c, const Subset& separated) {
  std::lock_guard lock(mu_);
  for (auto& e : entries_) {
    if (e.candidate.text == c.text) {
      e.separated.insert(separated.pos.begin(), separated.pos.end());
      e.separated.insert(separated.neg.begin(), separated.neg.end());
      return false;
    }
  }
  Entry e{c, {}};
  e.separated.insert(separated.pos.begin(), separated.pos.end());
  e.separated.insert(separated.neg.begin(), separated.neg.end());
  entries_.push_back(std::move(e));
  return true;
}

std::vector<Candidate> CandidatePool::ranked_for(const Subset& s) const {
  std::lock_guard lock(mu_);
  std::vector<std::pair<std::size_t, std::size_t>> order;  // (overlap, index)
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    std::size_t overlap = 0;
    for (const auto* e : s.pos) overlap += entries_[i].separated.count(e);
    for (const auto* e : s.neg) overlap += entries_[i].separated.count(e);
    order.emplace_back(overlap, i);
  }
  std::stable_sort(order.begin(), order.end(), [](auto a, auto b) { return a.first > b.first; });
  std::vector<Candidate> out;
  for (auto [ov, i] : order) out.push_back(entries_[i].candidate);
  return out;
}

std::size_t CandidatePool::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

// ------------------------------------------------------------------ planner

namespace {

class Planner {
 public:
  Planner(const PlannerContext& ctx, const PlannerConfig& cfg, PlannerStats& stats)
      : ctx_(ctx),
        cfg_(cfg),
        stats_(stats),
        grammar_(make_grammar(ctx.spaces, ctx.manifest, cfg.synth.grammar)),
        pool_(ctx.pool ? ctx.pool : &own_pool_) {}

  std::vector<Candidate> run(const Subset& all) {
    auto found = solve(all, height_of(all.pos.size(), all.neg.size()));
    // The root verifies every result against the full set.
    std::vector<Candidate> out;
    for (auto& c : found) {
      Decision d = decide(c.classifier.program, all.pos, all.neg, ctx_.spaces, ctx_.manifest,
                          cfg_.synth.epsilon, ctx_.workers);
      if (d.kind == Decision::Kind::Accept) c.classifier = Classifier{c.classifier.program, d.range.midpoint(), d.range};
      c.learning_rate = learning_rate(c.classifier, all.pos, all.neg, ctx_.spaces, ctx_.manifest, ctx_.workers);
      out.push_back(std::move(c));
    }
    sort_candidates(out);
    if (out.size() > cfg_.synth.candidates) out.resize(cfg_.synth.candidates);
    return out;
  }

 private:
  bool divisible(std::size_t p, std::size_t n) const {
    return p + n > cfg_.leaf_threshold && p >= 2 && n >= 2;
  }

  int height_of(std::size_t p, std::size_t n) const {
    if (!divisible(p, n)) return 0;
    std::size_t lp = (p + 1) / 2, ln = (n + 1) / 2;
    return 1 + std::max(height_of(lp, ln), height_of(p - lp, n - ln));
  }

  std::size_t t_at(int level) const {
    double t = static_cast<double>(cfg_.synth.candidates);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t / std::pow(2.0, level))));
  }

  /// Candidates that separate `s`, with thresholds re-derived on `s`.
  std::vector<Candidate> recheck(const std::vector<Candidate>& cs, const Subset& s, std::size_t want) {
    std::vector<Candidate> out;
    std::unordered_set<std::string> seen;
    for (const auto& c : cs) {
      if (out.size() >= want) break;
      if (!seen.insert(c.text).second) continue;
      Decision d = decide(c.classifier.program, s.pos, s.neg, ctx_.spaces, ctx_.manifest,
                          cfg_.synth.epsilon, ctx_.workers);
      stats_.evals += s.size();
      if (d.kind != Decision::Kind::Accept) continue;
      Candidate r = c;
      r.classifier = Classifier{c.classifier.program, d.range.midpoint(), d.range};
      r.learning_rate = learning_rate(r.classifier, s.pos, s.neg, ctx_.spaces, ctx_.manifest, ctx_.workers);
      out.push_back(std::move(r));
    }
    sort_candidates(out);
    return out;
  }

  void log(int level, const Subset& s, const SearchStats& st, const char* outcome, std::size_t found) {
    if (!ctx_.progress) return;
    nlohmann::json j;
    j["level"] = level;
    j["pos"] = s.pos.size();
    j["neg"] = s.neg.size();
    j["expansions"] = st.popped;
    j["evals"] = st.evals;
    j["outcome"] = outcome;
    j["candidates"] = found;
    *ctx_.progress << j.dump() << '\n';
  }

  std::vector<Candidate> run_search(const Subset& s, const std::vector<Ast>& seeds, std::size_t t,
                                    SearchStats& st) {
    SynthConfig sc = cfg_.synth;
    sc.candidates = t;
    SearchContext sctx{ctx_.manifest, ctx_.spaces, grammar_, &extensions_, ctx_.workers};
    auto found = search(sctx, s.pos, s.neg, seeds, sc, &st);
    ++stats_.searches;
    stats_.popped += st.popped;
    stats_.evals += st.evals;
    return found;
  }

  std::vector<Candidate> solve(const Subset& s, int level) {
    ++stats_.tasks;
    const std::size_t t = t_at(level);
    SearchStats none;

    if (cfg_.use_pool && pool_->size() > 0) {
      auto hits = recheck(pool_->ranked_for(s), s, t);
      if (!hits.empty()) {
        ++stats_.pool_hits;
        log(level, s, none, "pool", hits.size());
        return hits;
      }
    }

    if (level == 0) {
      SearchStats st;
      auto found = run_search(s, {ast::start()}, t, st);
      stats_.leaf_evals += st.evals;
      for (const auto& c : found) pool_->add(c, s);
      log(level, s, st, found.empty() ? "leaf-empty" : "leaf", found.size());
      return found;
    }

    auto [l, r] = split(s.pos, s.neg);
    auto cl = solve(l, level - 1);
    auto cr = solve(r, level - 1);
    std::vector<Candidate> children = cl;
    children.insert(children.end(), cr.begin(), cr.end());

    std::vector<Candidate> recheck_list = children;
    if (cfg_.use_pool) {
      auto pooled = pool_->ranked_for(s);
      recheck_list.insert(recheck_list.end(), pooled.begin(), pooled.end());
    }
    auto reused = recheck(recheck_list, s, t);
    if (!reused.empty()) {
      ++stats_.child_reuse;
      for (const auto& c : reused) pool_->add(c, s);
      log(level, s, none, "reuse", reused.size());
      return reused;
    }

    std::vector<Ast> seeds;
    std::unordered_set<std::string> seed_texts;
    for (const auto& c : children) {
      Harvest h = harvest(c.classifier, cfg_.harvest_depth, cfg_.reward);
      for (auto& e : h.extensions) extensions_.add(std::move(e));
      if (seed_texts.insert(print(h.seed)).second) seeds.push_back(h.seed);
    }
    SearchStats st;
    auto found = seeds.empty() ? std::vector<Candidate>{} : run_search(s, seeds, t, st);
    if (!found.empty()) {
      for (const auto& c : found) pool_->add(c, s);
      log(level, s, st, "merge", found.size());
      return found;
    }

    // Best effort: the most accurate child candidates on the merged set.
    ++stats_.fallbacks;
    for (auto& c : children)
      c.learning_rate = learning_rate(c.classifier, s.pos, s.neg, ctx_.spaces, ctx_.manifest, ctx_.workers);
    sort_candidates(children);
    if (children.size() > t) children.resize(t);
    log(level, s, st, "fallback", children.size());
    return children;
  }

  const PlannerContext& ctx_;
  const PlannerConfig& cfg_;
  PlannerStats& stats_;
  Grammar grammar_;
  SyntaxExtensions extensions_;
  CandidatePool own_pool_;
  CandidatePool* pool_;
};

}  // namespace

std::vector<Candidate> merge_search(const PlannerContext& ctx, const ExampleRefs& pos,
                                    const ExampleRefs& neg, const PlannerConfig& cfg,
                                    PlannerStats* stats) {
  PlannerStats local;
  Planner planner(ctx, cfg, stats ? *stats : local);
  return planner.run(Subset{pos, neg});
}

}  // namespace netqre
