#include "netqre/machine.hpp"

#include <algorithm>
#include <cassert>

namespace netqre {

// ------------------------------------------------------------------ compile

class MachineBuilder {
 public:
  MachineBuilder(Machine& m, const ValueSpaces& spaces, const TraceManifest& manifest)
      : m_(m), spaces_(spaces), manifest_(manifest) {}

  struct Frag {
    std::uint32_t start, end;
  };

  std::uint32_t node(std::uint32_t depth, std::uint32_t levels) {
    Machine::Node n;
    n.depth = depth;
    n.levels = levels;
    m_.nodes_.push_back(std::move(n));
    return static_cast<std::uint32_t>(m_.nodes_.size() - 1);
  }

  void eps(std::uint32_t from, std::uint32_t to, std::vector<Machine::Step> steps = {}) {
    m_.nodes_[from].eps.push_back({to, std::move(steps)});
  }

  void read(std::uint32_t from, std::uint32_t to, std::int32_t pred) {
    m_.nodes_[from].reads.push_back({to, pred});
  }

  static Machine::Step act(Machine::Action a, AggOp op = AggOp::Sum, std::uint32_t level = 0) {
    if (level >= 64) throw MutationError("program nests too deeply");
    return {a, op, static_cast<std::uint8_t>(level)};
  }

  static AggOp op_of(const Ast& n) {
    if (n->kind != Kind::Op) throw MutationError("unexpanded <op> hole");
    return n->op;
  }

  // Stack height grows by one from start to end of every qre fragment.
  Frag qre(const Ast& n, std::uint32_t d, std::uint32_t lv) {
    using A = Machine::Action;
    switch (n->kind) {
      case Kind::Unit: {
        auto s = node(d, lv);
        Frag r = re(n->kids[0], d, lv + 1);
        auto e = node(d + 1, lv);
        eps(s, r.start, {act(A::Clear, AggOp::Sum, lv)});
        eps(r.end, e, {act(A::Require, AggOp::Sum, lv), act(A::PushOne)});
        return {s, e};
      }
      case Kind::QreIter: {
        AggOp op = op_of(n->kids[1]);
        auto s = node(d, lv);
        auto h = node(d + 1, lv);
        Frag body = qre(n->kids[0], d + 1, lv + 1);
        auto e = node(d + 1, lv);
        eps(s, h, {act(A::PushNone)});
        eps(h, body.start, {act(A::Clear, AggOp::Sum, lv)});
        eps(body.end, h, {act(A::Require, AggOp::Sum, lv), act(A::Fold, op)});
        eps(h, e, {act(A::Finalize)});
        return {s, e};
      }
      case Kind::QreConcat: {
        AggOp op = op_of(n->kids[2]);
        Frag a = qre(n->kids[0], d, lv);
        Frag b = qre(n->kids[1], d + 1, lv);
        auto e = node(d + 1, lv);
        eps(a.end, b.start);
        eps(b.end, e, {act(A::Combine, op)});
        return {a.start, e};
      }
      case Kind::QreEstimate: {
        auto s = node(d, lv);
        auto m = node(d + 1, lv);
        auto g = node(d + 1, lv);
        auto e = node(d + 1, lv);
        eps(s, m, {act(A::Uncertain), act(A::PushZero)});
        read(m, g, -1);
        eps(g, m, {act(A::Grow)});
        eps(m, e);
        return {s, e};
      }
      case Kind::Hole: throw MutationError("cannot compile a program with an open hole");
      default: throw MutationError("malformed quantitative expression");
    }
  }

  static bool has_hole(const Ast& n) {
    if (n->kind == Kind::Hole) return true;
    for (const auto& k : n->kids)
      if (has_hole(k)) return true;
    return false;
  }

  Frag re(const Ast& n, std::uint32_t d, std::uint32_t lv) {
    using A = Machine::Action;
    switch (n->kind) {
      case Kind::RePred: {
        auto s = node(d, lv), e = node(d, lv);
        if (n->kids[0]->kind == Kind::PredWildcard) {
          read(s, e, -1);
        } else {
          if (has_hole(n->kids[0])) throw MutationError("cannot compile a program with an open hole");
          m_.preds_.push_back(resolve(n->kids[0], spaces_, manifest_));
          read(s, e, static_cast<std::int32_t>(m_.preds_.size() - 1));
        }
        return {s, e};
      }
      case Kind::ReAny: {
        auto s = node(d, lv), e = node(d, lv);
        read(s, e, -1);
        return {s, e};
      }
      case Kind::ReConcat: {
        Frag a = re(n->kids[0], d, lv);
        Frag b = re(n->kids[1], d, lv);
        eps(a.end, b.start);
        return {a.start, b.end};
      }
      case Kind::ReStar: {
        auto s = node(d, lv);
        Frag body = re(n->kids[0], d, lv);
        auto e = node(d, lv);
        eps(s, body.start);
        eps(body.end, s);
        eps(s, e);
        return {s, e};
      }
      case Kind::ReEstimate: {
        auto s = node(d, lv), m = node(d, lv), e = node(d, lv);
        eps(s, m, {act(A::Uncertain)});
        read(m, m, -1);
        eps(m, e);
        return {s, e};
      }
      case Kind::Hole: throw MutationError("cannot compile a program with an open hole");
      default: throw MutationError("malformed regular expression");
    }
  }

 private:
  Machine& m_;
  const ValueSpaces& spaces_;
  const TraceManifest& manifest_;
};

Machine compile(const Ast& program, const ValueSpaces& spaces, const TraceManifest& manifest) {
  Machine m;
  Ast cur = program;
  while (cur->kind == Kind::Split) {
    const Ast& feats = cur->kids[2];
    if (feats->kind != Kind::Feats) throw MutationError("unexpanded <feats> hole");
    m.splits_.push_back({MachineBuilder::op_of(cur->kids[1]), feats->feats});
    cur = cur->kids[0];
  }
  MachineBuilder b(m, spaces, manifest);
  auto f = b.qre(cur, 0, 0);
  m.start_ = f.start;
  m.accept_ = f.end;
  return m;
}

// --------------------------------------------------------------------- eval

namespace {

/// Register contents: possibly "no iteration yet", plus a value range.
struct Reg {
  double lo = 0, hi = 0;
  bool has = false;
  bool none = false;

  static Reg value(double l, double h) { return {l, h, true, false}; }

  void join(const Reg& o) {
    if (o.has) {
      if (has) {
        lo = std::min(lo, o.lo);
        hi = std::max(hi, o.hi);
      } else {
        lo = o.lo;
        hi = o.hi;
        has = true;
      }
    }
    none = none || o.none;
  }

  friend bool operator==(const Reg&, const Reg&) = default;
};

double apply(AggOp op, double a, double b) {
  switch (op) {
    case AggOp::Max: return std::max(a, b);
    case AggOp::Min: return std::min(a, b);
    case AggOp::Sum: return a + b;
  }
  return a;
}

// Interval image of op; max, min and + are monotone in both arguments.
Reg apply(AggOp op, const Reg& a, const Reg& b) {
  return Reg::value(apply(op, a.lo, b.lo), apply(op, a.hi, b.hi));
}

struct Thread {
  std::uint32_t node;
  std::uint64_t mask;
  bool certain;
  std::uint32_t regs;  // offset into the register pool
  std::int32_t next;   // next thread at the same node
};

class Runner {
 public:
  Runner(const Machine& m, EvalStats* stats) : m_(m), stats_(stats), head_(m.nodes().size(), -1) {}

  Outcome run(std::span<const Packet* const> packets) {
    clear();
    Reg none_stack[1];
    insert(m_.start(), 0, true, none_stack, 0);
    close();
    std::vector<Truth> truth(m_.predicates().size());
    for (const Packet* pkt : packets) {
      for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = m_.predicates()[i].match(*pkt);
      for (const Thread& t : cur_) head_[t.node] = -1;
      std::swap(cur_, prev_);
      std::swap(pool_, prev_pool_);
      cur_.clear();
      pool_.clear();
      for (const Thread& t : prev_) {
        const auto& n = m_.nodes()[t.node];
        for (const auto& r : n.reads) {
          Truth tv = r.pred < 0 ? Truth::True : truth[static_cast<std::size_t>(r.pred)];
          if (tv == Truth::False) continue;
          const auto& tn = m_.nodes()[r.target];
          insert(r.target, full_mask(tn.levels), t.certain && tv == Truth::True,
                 prev_pool_.data() + t.regs, tn.depth);
        }
      }
      if (stats_) {
        ++stats_->steps;
        stats_->max_threads = std::max(stats_->max_threads, cur_.size());
      }
      if (cur_.empty()) return {};
      close();
    }
    Outcome out;
    for (std::int32_t i = head_[m_.accept()]; i >= 0; i = cur_[static_cast<std::size_t>(i)].next) {
      const Thread& t = cur_[static_cast<std::size_t>(i)];
      const Reg& r = pool_[t.regs];
      assert(r.has && !r.none);
      if (!out.matched) {
        out.value = Interval(r.lo, r.hi);
        out.matched = true;
      } else {
        out.value = hull(out.value, Interval(r.lo, r.hi));
      }
      out.certain = out.certain || t.certain;
    }
    return out;
  }

 private:
  static std::uint64_t full_mask(std::uint32_t levels) {
    return levels >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << levels) - 1);
  }

  void clear() {
    for (const Thread& t : cur_) head_[t.node] = -1;
    cur_.clear();
    pool_.clear();
  }

  /// Adds a thread or joins it into the one with the same node and mask.
  /// Returns the index of the thread if anything changed, else -1.
  std::int32_t insert(std::uint32_t node, std::uint64_t mask, bool certain, const Reg* regs,
                      std::uint32_t depth) {
    mask &= full_mask(m_.nodes()[node].levels);
    for (std::int32_t i = head_[node]; i >= 0; i = cur_[static_cast<std::size_t>(i)].next) {
      Thread& t = cur_[static_cast<std::size_t>(i)];
      if (t.mask != mask) continue;
      bool changed = false;
      if (certain && !t.certain) {
        t.certain = true;
        changed = true;
      }
      for (std::uint32_t k = 0; k < depth; ++k) {
        Reg& dst = pool_[t.regs + k];
        Reg before = dst;
        dst.join(regs[k]);
        changed = changed || !(before == dst);
      }
      if (stats_) stats_->register_ops += depth;
      return changed ? i : -1;
    }
    auto off = static_cast<std::uint32_t>(pool_.size());
    pool_.insert(pool_.end(), regs, regs + depth);
    cur_.push_back({node, mask, certain, off, head_[node]});
    auto idx = static_cast<std::int32_t>(cur_.size() - 1);
    head_[node] = idx;
    return idx;
  }

  /// ε-closure of the current thread set.
  void close() {
    std::vector<std::int32_t> work;
    for (std::size_t i = 0; i < cur_.size(); ++i) work.push_back(static_cast<std::int32_t>(i));
    std::vector<Reg> scratch;
    while (!work.empty()) {
      auto idx = static_cast<std::size_t>(work.back());
      work.pop_back();
      const auto& n = m_.nodes()[cur_[idx].node];
      for (const auto& e : n.eps) {
        // Copy out: insert() may reallocate the pool and thread list.
        Thread t = cur_[idx];
        scratch.assign(pool_.begin() + t.regs, pool_.begin() + t.regs + n.depth);
        bool alive = true;
        for (const auto& s : e.steps) {
          if (!step(s, t, scratch)) {
            alive = false;
            break;
          }
        }
        if (!alive) continue;
        assert(scratch.size() == m_.nodes()[e.target].depth);
        auto changed = insert(e.target, t.mask, t.certain, scratch.data(),
                              static_cast<std::uint32_t>(scratch.size()));
        if (changed >= 0) work.push_back(changed);
      }
    }
  }

  bool step(const Machine::Step& s, Thread& t, std::vector<Reg>& st) {
    using A = Machine::Action;
    if (stats_) ++stats_->register_ops;
    switch (s.action) {
      case A::PushNone: st.push_back(Reg{0, 0, false, true}); return true;
      case A::PushOne: st.push_back(Reg::value(1, 1)); return true;
      case A::PushZero: st.push_back(Reg::value(0, 0)); return true;
      case A::Grow: st.back().hi += 1; return true;
      case A::Combine: {
        Reg b = st.back();
        st.pop_back();
        st.back() = apply(s.op, st.back(), b);
        return true;
      }
      case A::Fold: {
        Reg v = st.back();
        st.pop_back();
        Reg& acc = st.back();
        Reg out;
        if (acc.none) out.join(v);
        if (acc.has) out.join(apply(s.op, acc, v));
        acc = out;
        return true;
      }
      case A::Finalize: {
        Reg& acc = st.back();
        Reg out;
        if (acc.none) out.join(Reg::value(0, 0));
        if (acc.has) out.join(Reg::value(acc.lo, acc.hi));
        acc = out;
        return true;
      }
      case A::Clear: t.mask &= ~(std::uint64_t{1} << s.level); return true;
      case A::Require: return (t.mask >> s.level) & 1;
      case A::Uncertain: t.certain = false; return true;
    }
    return false;
  }

  const Machine& m_;
  EvalStats* stats_;
  std::vector<std::int32_t> head_;
  std::vector<Thread> cur_, prev_;
  std::vector<Reg> pool_, prev_pool_;
};

Outcome fold_subflows(AggOp op, const std::vector<Outcome>& parts) {
  Outcome out;
  bool any_certain = false;
  double certain_lo = 0, matched_lo = 0, certain_hi = 0, hi = 0;
  bool first_certain = true, first_matched = true;
  for (const auto& p : parts) {
    if (!p.matched) continue;
    if (first_matched) {
      matched_lo = p.value.lo;
      hi = p.value.hi;
    } else {
      switch (op) {
        case AggOp::Sum: hi += p.value.hi; break;
        case AggOp::Max:
          matched_lo = std::min(matched_lo, p.value.lo);
          hi = std::max(hi, p.value.hi);
          break;
        case AggOp::Min:
          matched_lo = std::min(matched_lo, p.value.lo);
          hi = std::max(hi, p.value.hi);
          break;
      }
    }
    first_matched = false;
    if (p.certain) {
      any_certain = true;
      if (first_certain) {
        certain_lo = p.value.lo;
        certain_hi = p.value.hi;
      } else {
        switch (op) {
          case AggOp::Sum: certain_lo += p.value.lo; break;
          case AggOp::Max: certain_lo = std::max(certain_lo, p.value.lo); break;
          case AggOp::Min: certain_hi = std::min(certain_hi, p.value.hi); break;
        }
      }
      first_certain = false;
    }
  }
  if (first_matched) return out;
  out.matched = true;
  out.certain = any_certain;
  switch (op) {
    case AggOp::Sum:
      // Sub-flows that might not match contribute nothing or a non-negative value.
      out.value = Interval(any_certain ? certain_lo : 0, hi);
      break;
    case AggOp::Max: out.value = Interval(any_certain ? certain_lo : matched_lo, hi); break;
    case AggOp::Min: out.value = Interval(matched_lo, any_certain ? certain_hi : hi); break;
  }
  return out;
}

Outcome eval_level(const Machine& m, std::size_t level, std::span<const Packet* const> packets,
                   EvalStats* stats) {
  if (level == m.splits().size()) return Runner(m, stats).run(packets);
  const auto& split = m.splits()[level];
  // Partition by feature values, classes in order of first appearance.
  std::vector<std::vector<const Packet*>> classes;
  std::vector<std::vector<std::uint64_t>> keys;
  std::vector<std::uint64_t> key(split.feats.size());
  for (const Packet* p : packets) {
    for (std::size_t i = 0; i < split.feats.size(); ++i) key[i] = (*p)[split.feats[i].index];
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      classes.emplace_back();
      classes.back().push_back(p);
    } else {
      classes[static_cast<std::size_t>(it - keys.begin())].push_back(p);
    }
  }
  std::vector<Outcome> parts;
  parts.reserve(classes.size());
  for (const auto& c : classes) parts.push_back(eval_level(m, level + 1, c, stats));
  return fold_subflows(split.op, parts);
}

}  // namespace

Outcome eval(const Machine& m, std::span<const Packet* const> packets, EvalStats* stats) {
  return eval_level(m, 0, packets, stats);
}

Outcome eval(const Machine& m, const Example& e, EvalStats* stats) {
  std::vector<const Packet*> ptrs;
  ptrs.reserve(e.packets.size());
  for (const auto& p : e.packets) ptrs.push_back(&p);
  return eval(m, ptrs, stats);
}

ExactResult eval_exact(const Machine& m, const Example& e) {
  Outcome o = eval(m, e);
  ExactResult r;
  if (!o.matched) return r;
  r.range = o.value;
  if (o.value.degenerate()) {
    r.status = ExactResult::Status::Value;
    r.value = o.value.lo;
  } else {
    r.status = ExactResult::Status::Conflict;
  }
  return r;
}

}  // namespace netqre
