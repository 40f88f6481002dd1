#pragma once

// Enumerative search over partial programs with interval-based pruning.

#include <cstddef>
#include <string>
#include <vector>

#include "netqre/interval.hpp"
#include "netqre/lang.hpp"
#include "netqre/machine.hpp"
#include "netqre/trace.hpp"
#include "netqre/worker_pool.hpp"

namespace netqre {

struct SynthConfig {
  double max_cost = 40;         // on the penalty-free complexity
  std::size_t candidates = 5;   // t
  double epsilon = 0;           // fraction of outliers tolerated per class
  std::size_t batch = 16;       // frontier nodes decided together
  std::size_t node_budget = 200000;
  double time_budget = 0;       // seconds; 0 disables
  bool prune = true;
  GrammarConfig grammar;
  ComplexityConfig complexity;
};

struct Decision {
  enum class Kind { Reject, Accept, Continue };
  Kind kind = Kind::Continue;
  Interval range{0, 0};  // Accept: [largest negative, smallest positive]
};

/// Replaces every hole by a stand-in whose behaviour covers all of its
/// completions. Throws MutationError for program, split, op and feats holes.
Ast complete_equivalent(const Ast& p);
bool completable(const Ast& p);

/// A least-cost completion of `p`.
Ast concretize(const Ast& p);

/// Builds the grammar for a training set: predicate leaves from the value
/// spaces, split features from non-constant, non-time features.
Grammar make_grammar(const ValueSpaces& spaces, const TraceManifest& manifest, GrammarConfig cfg);

/// Per-example evaluation of p̂ reduced to the two bounds used by the accept and reject tests.
struct Bounds {
  double lo;  // −∞ unless every completion matches
  double hi;  // −∞ if no completion matches
};

Bounds effective_bounds(const Outcome& o);

Decision decide_from_bounds(const std::vector<Bounds>& pos, const std::vector<Bounds>& neg,
                            double epsilon);

Decision decide(const Ast& p, const ExampleRefs& pos, const ExampleRefs& neg, const ValueSpaces& spaces,
                const TraceManifest& manifest, double epsilon, WorkerPool* pool = nullptr);

/// Output used for scoring: value, conflict midpoint, or −∞ for no match.
double score_value(const ExactResult& r);

double learning_rate(const Classifier& c, const ExampleRefs& pos, const ExampleRefs& neg,
                     const ValueSpaces& spaces, const TraceManifest& manifest,
                     WorkerPool* pool = nullptr);

struct Candidate {
  Classifier classifier;
  double learning_rate = 0;
  double cost = 0;
  std::string text;  // canonical program text with raw feature indices
};

/// Deterministic best-first order: learning rate, then cost, then text.
void sort_candidates(std::vector<Candidate>& cs);

struct SearchStats {
  std::size_t popped = 0;      // frontier nodes taken
  std::size_t decided = 0;     // nodes evaluated on the examples
  std::size_t rejected = 0;
  std::size_t accepted = 0;
  std::size_t generated = 0;   // children pushed
  std::size_t evals = 0;       // example evaluations
  bool exhausted = false;      // frontier emptied
  bool out_of_budget = false;  // node or time budget hit
};

struct SearchContext {
  const TraceManifest& manifest;
  const ValueSpaces& spaces;
  const Grammar& grammar;
  const SyntaxExtensions* extensions = nullptr;
  WorkerPool* pool = nullptr;
};

std::vector<Candidate> search(const SearchContext& ctx, const ExampleRefs& pos, const ExampleRefs& neg,
                              const std::vector<Ast>& seeds, const SynthConfig& cfg,
                              SearchStats* stats = nullptr);

}  // namespace netqre
