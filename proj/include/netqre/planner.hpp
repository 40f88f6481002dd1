#pragma once

// Divide-and-conquer synthesis with harvested shortcuts and a shared
// candidate pool.

#include <iosfwd>
#include <mutex>
#include <set>
#include <utility>
#include <vector>

#include "netqre/synth.hpp"

namespace netqre {

struct Subset {
  ExampleRefs pos;
  ExampleRefs neg;
  std::size_t size() const { return pos.size() + neg.size(); }
};

/// Halves each class in input order; the odd element goes left.
/// Throws std::invalid_argument if a class has fewer than two examples.
std::pair<Subset, Subset> split(const ExampleRefs& pos, const ExampleRefs& neg);

struct Harvest {
  std::vector<SyntaxExtension> extensions;
  Ast seed;
};

/// Shortcuts for every subtree of height <= depth whose derivation takes
/// more than one production, and a seed with the maximal subtrees of
/// exactly that height replaced by holes.
Harvest harvest(const Classifier& c, int depth_threshold, double reward = 1);

/// Accepted classifiers remembered across tasks.
class CandidatePool {
 public:
  struct Entry {
    Candidate candidate;
    std::set<const Example*> separated;  // subset signature
  };

  /// Returns false if a candidate with the same text is already present;
  /// the signature is then widened.
  bool add(const Candidate& c, const Subset& separated);
  /// Snapshot ordered by overlap with `s`, largest first, then insertion.
  std::vector<Candidate> ranked_for(const Subset& s) const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<Entry> entries_;
};

struct PlannerConfig {
  SynthConfig synth;
  std::size_t leaf_threshold = 50;  // examples per leaf task
  int harvest_depth = 3;
  double reward = 1;
  bool use_pool = true;
};

struct PlannerStats {
  std::size_t tasks = 0;
  std::size_t searches = 0;
  std::size_t popped = 0;
  std::size_t evals = 0;
  std::size_t leaf_evals = 0;
  std::size_t pool_hits = 0;
  std::size_t child_reuse = 0;
  std::size_t fallbacks = 0;
};

struct PlannerContext {
  const TraceManifest& manifest;
  const ValueSpaces& spaces;
  WorkerPool* workers = nullptr;
  CandidatePool* pool = nullptr;   // shared across calls when given
  std::ostream* progress = nullptr;  // one JSON object per task
};

std::vector<Candidate> merge_search(const PlannerContext& ctx, const ExampleRefs& pos,
                                    const ExampleRefs& neg, const PlannerConfig& cfg,
                                    PlannerStats* stats = nullptr);

}  // namespace netqre
