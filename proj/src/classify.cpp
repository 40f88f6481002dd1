#include "netqre/classify.hpp"

#include <algorithm>
#include <ostream>

namespace netqre {

OutputDistribution score(const Classifier& c, const ExampleRefs& traces, const ValueSpaces& spaces,
                         const TraceManifest& manifest, WorkerPool* pool) {
  Machine m = compile(c.program, spaces, manifest);
  OutputDistribution d;
  d.items.resize(traces.size());
  auto one = [&](std::size_t i) {
    const Example& e = *traces[i];
    ExactResult r = eval_exact(m, e);
    ScoredExample& s = d.items[i];
    s.id = e.id;
    s.label = e.label;
    s.matched = r.status != ExactResult::Status::NoMatch;
    s.conflict = r.status == ExactResult::Status::Conflict;
    s.value = s.matched ? score_value(r) : 0;
  };
  if (pool)
    pool->parallel_for(traces.size(), one);
  else
    for (std::size_t i = 0; i < traces.size(); ++i) one(i);
  for (const auto& s : d.items) {
    if (!s.matched) continue;
    if (s.label == Label::Negative)
      d.A = std::max(d.A, s.value);
    else
      d.B = std::min(d.B, s.value);
  }
  return d;
}

RocCurve roc(const OutputDistribution& d) {
  std::size_t npos = 0, nneg = 0;
  for (const auto& s : d.items) (s.label == Label::Positive ? npos : nneg)++;
  if (npos == 0 || nneg == 0) throw MetricsError("ROC needs at least one example of each class");

  // Unmatched outputs sit strictly below every matched one.
  double floor = 0;
  bool any = false;
  for (const auto& s : d.items)
    if (s.matched) {
      floor = any ? std::min(floor, s.value) : s.value;
      any = true;
    }
  floor -= 1;
  std::vector<std::pair<double, bool>> v;  // (value, positive)
  for (const auto& s : d.items) v.emplace_back(s.matched ? s.value : floor, s.label == Label::Positive);
  std::sort(v.begin(), v.end(), [](auto a, auto b) { return a.first > b.first; });

  RocCurve c;
  c.points.push_back({kInf, 0, 0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < v.size();) {
    double t = v[i].first;
    // Points at T = t count only outputs strictly above t.
    c.points.push_back({t, static_cast<double>(fp) / static_cast<double>(nneg),
                        static_cast<double>(tp) / static_cast<double>(npos)});
    for (; i < v.size() && v[i].first == t; ++i) (v[i].second ? tp : fp)++;
  }
  c.points.push_back({-kInf, 1, 1});
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    const auto& a = c.points[i - 1];
    const auto& b = c.points[i];
    c.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2;
  }
  return c;
}

std::vector<double> tp_at_fp(const RocCurve& curve, const std::vector<double>& levels) {
  std::vector<double> out;
  for (double level : levels) {
    double best = 0;
    for (const auto& p : curve.points)
      if (p.fpr <= level) best = std::max(best, p.tpr);
    out.push_back(best);
  }
  return out;
}

void write_distribution_csv(std::ostream& out, const OutputDistribution& d) {
  out << "example_id,label,value\n";
  for (const auto& s : d.items) {
    out << s.id << ',' << (s.label == Label::Positive ? "pos" : "neg") << ',';
    if (s.matched)
      out << format_threshold(s.value);
    else
      out << "nomatch";
    out << '\n';
  }
}

void write_roc_csv(std::ostream& out, const RocCurve& c) {
  out << "threshold,fpr,tpr\n";
  for (const auto& p : c.points)
    out << format_threshold(p.threshold) << ',' << format_threshold(p.fpr) << ',' << format_threshold(p.tpr)
        << '\n';
}

}  // namespace netqre
