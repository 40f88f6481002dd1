#pragma once

// Automaton compilation and interval evaluation of NetQRE programs.

#include <cstdint>
#include <span>
#include <vector>

#include "netqre/interval.hpp"
#include "netqre/lang.hpp"
#include "netqre/trace.hpp"

namespace netqre {

/// Result of running a program on one trace.
///
/// `value` bounds every output of every matching strategy. `certain` is set
/// when at least one accepting run used only edges that hold for every
/// completion of the estimated holes.
struct Outcome {
  bool matched = false;
  Interval value{0, 0};
  bool certain = false;
};

struct ExactResult {
  enum class Status { Value, NoMatch, Conflict };
  Status status = Status::NoMatch;
  double value = 0;     // Value only
  Interval range{0, 0}; // Conflict: the merged interval
};

struct EvalStats {
  std::size_t steps = 0;
  std::size_t max_threads = 0;  // after each consuming step, before ε-closure
  std::size_t register_ops = 0;
};

/// Compiled form of a complete (or equivalently completed) program.
class Machine {
 public:
  enum class Action : std::uint8_t {
    PushNone,   // iteration accumulator with no iteration yet
    PushOne,
    PushZero,
    Grow,       // widen the top register by one on the high side
    Combine,    // pop b, pop a, push a op b
    Fold,       // pop v, fold into the accumulator below
    Finalize,   // accumulator -> value (no iteration yields 0)
    Clear,      // clear the consumption bit of a scope level
    Require,    // drop the thread unless the bit is set
    Uncertain,  // the run no longer holds for every completion
  };

  struct Step {
    Action action;
    AggOp op = AggOp::Sum;
    std::uint8_t level = 0;
  };

  struct EpsEdge {
    std::uint32_t target;
    std::vector<Step> steps;
  };

  struct ReadEdge {
    std::uint32_t target;
    std::int32_t pred;  // index into predicates(), -1 for `_`
  };

  struct Node {
    std::uint32_t depth = 0;   // register stack height
    std::uint32_t levels = 0;  // number of enclosing consumption scopes
    std::vector<EpsEdge> eps;
    std::vector<ReadEdge> reads;
  };

  struct SplitLevel {
    AggOp op;
    std::vector<FeatureId> feats;
  };

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<ConcretePredicate>& predicates() const { return preds_; }
  const std::vector<SplitLevel>& splits() const { return splits_; }
  std::uint32_t start() const { return start_; }
  std::uint32_t accept() const { return accept_; }

 private:
  friend Machine compile(const Ast&, const ValueSpaces&, const TraceManifest&);
  friend class MachineBuilder;

  std::vector<Node> nodes_;
  std::vector<ConcretePredicate> preds_;
  std::vector<SplitLevel> splits_;  // outermost first
  std::uint32_t start_ = 0;
  std::uint32_t accept_ = 0;
};

/// Compiles a program whose holes have been replaced by estimate stand-ins.
/// Throws MutationError if a hole remains.
Machine compile(const Ast& program, const ValueSpaces& spaces, const TraceManifest& manifest);

Outcome eval(const Machine& m, const Example& e, EvalStats* stats = nullptr);
Outcome eval(const Machine& m, std::span<const Packet* const> packets, EvalStats* stats = nullptr);

/// Exact output of a hole-free program: a degenerate interval becomes a
/// value, a wide one is reported as a conflict.
ExactResult eval_exact(const Machine& m, const Example& e);

}  // namespace netqre
