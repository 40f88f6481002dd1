#pragma once

// Translation of sequential counting classifiers into event-handler rule
// scripts.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "netqre/lang.hpp"

namespace netqre {

class UnsupportedShape : public std::invalid_argument {
 public:
  UnsupportedShape(const std::string& why, Ast node, const TraceManifest* manifest = nullptr);
  const std::string& reason() const { return why_; }
  const Ast& node() const { return node_; }

 private:
  std::string why_;
  Ast node_;
};

/// One `_* P1 _* ... Pk _*` block of the program. State 0 is `Init`; state
/// j is reached once P1..Pj have been seen in order.
struct RuleBlock {
  bool iterate = false;             // `( /re/ )*sum` rather than `/re/`
  std::string type;                 // enum type name
  std::string table;                // per-state best-count table
  std::vector<std::string> states;  // Init, then one per predicate
  std::vector<std::size_t> events;  // event raised for predicate j+1
};

struct RuleEvent {
  std::string name;
  Ast pred;
};

/// A rule script and the structure it was printed from.
///
/// Semantics per packet: every table is saved, each event whose predicate
/// holds advances state j to j+1 of its block from the saved values (the
/// last predicate of a block adds one), then completed blocks feed the
/// `Init` state of the next iteration and of the next block. The notice
/// fires when the accepted count exceeds `notice_above`.
struct RuleScript {
  std::string name;
  std::string text;
  std::vector<RuleBlock> blocks;
  std::vector<RuleEvent> events;
  std::optional<FeatureId> key;  // flow split feature
  AggOp key_op = AggOp::Sum;
  double threshold = 0;
  double notice_above = 0;  // max(threshold, 0): zero counts mean no match
  std::string timeout = "Timeout";

  /// Every block's states in order.
  std::vector<std::string> states() const;
  std::vector<std::string> counters() const;
};

/// Throws UnsupportedShape unless the program is a sum-concatenation of
/// `/_* P1 _* ... Pk _*/` units and sum-iterations of such units, under at
/// most one single-feature split aggregated by sum or max.
RuleScript compile_rules(const Classifier& c, const TraceManifest& manifest,
                         const std::string& name = "Attack");

}  // namespace netqre
