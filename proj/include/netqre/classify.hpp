#pragma once

// Scoring traces with a classifier, ROC sweeps and summary metrics.

#include <iosfwd>
#include <string>
#include <vector>

#include "netqre/lang.hpp"
#include "netqre/machine.hpp"
#include "netqre/synth.hpp"
#include "netqre/trace.hpp"
#include "netqre/worker_pool.hpp"

namespace netqre {

struct ScoredExample {
  std::string id;
  Label label = Label::Positive;
  bool matched = false;
  double value = 0;       // meaningful when matched
  bool conflict = false;  // value is the midpoint of an ambiguous output
};

struct OutputDistribution {
  std::vector<ScoredExample> items;
  double A = -kInf;  // largest matched negative output
  double B = kInf;   // smallest matched positive output
};

OutputDistribution score(const Classifier& c, const ExampleRefs& traces, const ValueSpaces& spaces,
                         const TraceManifest& manifest, WorkerPool* pool = nullptr);

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

struct RocCurve {
  std::vector<RocPoint> points;  // thresholds strictly decreasing
  double auc = 0;
};

class MetricsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sweeps T over +∞, every distinct output, and −∞; a trace is flagged
/// when its output exceeds T. Unmatched traces rank below every output.
RocCurve roc(const OutputDistribution& d);

/// Largest TPR among points whose FPR does not exceed each level.
std::vector<double> tp_at_fp(const RocCurve& curve, const std::vector<double>& levels);

void write_distribution_csv(std::ostream& out, const OutputDistribution& d);
void write_roc_csv(std::ostream& out, const RocCurve& c);

}  // namespace netqre
