#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "netqre/classify.hpp"
#include "netqre/model.hpp"
#include "netqre/planner.hpp"
#include "netqre/rulegen.hpp"

namespace netqre::cli {

namespace {

struct RunConfig {
  std::string traces;
  std::string model;
  std::string out;
  std::size_t candidates = 5;
  double epsilon = 0;
  std::size_t workers = 1;
  double max_cost = 40;
  double time_budget = 0;
  std::size_t leaf_threshold = 50;
  int harvest_depth = 3;
  std::uint64_t seed = 0;
  std::size_t candidate = 1;
  std::string name = "Attack";
  bool progress = false;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string describe(const TraceManifest& m) {
  std::string s = std::to_string(m.size()) + " features: ";
  for (std::size_t i = 0; i < m.size(); ++i) s += (i ? "," : "") + m.names()[i];
  return s;
}

void check_manifests(const Model& model, const TraceSet& set) {
  if (model.manifest != set.manifest)
    throw TraceError("trace manifest (" + describe(set.manifest) + ") does not match model manifest (" +
                     describe(model.manifest) + ")");
}

const Candidate& pick(const Model& m, std::size_t index) {
  if (index < 1 || index > m.candidates.size())
    throw UsageError("candidate " + std::to_string(index) + " does not exist; the model has " +
                     std::to_string(m.candidates.size()));
  return m.candidates[index - 1];
}

ExampleRefs all_refs(const TraceSet& s) {
  ExampleRefs r = s.positive_refs();
  auto n = s.negative_refs();
  r.insert(r.end(), n.begin(), n.end());
  return r;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw TraceError("cannot write " + path);
  f << content;
  if (!f) throw TraceError("failed writing " + path);
}

// ------------------------------------------------------------------ train

int train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  TraceSet set = load(cfg.traces);
  WorkerPool workers(cfg.workers);
  PlannerConfig pc;
  pc.synth.candidates = cfg.candidates;
  pc.synth.epsilon = cfg.epsilon;
  pc.synth.max_cost = cfg.max_cost;
  pc.synth.time_budget = cfg.time_budget;
  pc.leaf_threshold = cfg.leaf_threshold;
  pc.harvest_depth = cfg.harvest_depth;
  PlannerContext ctx{set.manifest, set.spaces, &workers, nullptr, cfg.progress ? &err : nullptr};
  PlannerStats stats;
  Model model{set.manifest, set.spaces, {}};
  model.candidates = merge_search(ctx, set.positive_refs(), set.negative_refs(), pc, &stats);
  save_model_file(cfg.out, model);
  out << "searched " << stats.tasks << " tasks, " << stats.popped << " nodes, " << stats.evals
      << " evaluations\n";
  if (model.candidates.empty()) {
    err << "no candidates found\n";
    return kNoCandidates;
  }
  for (std::size_t i = 0; i < model.candidates.size(); ++i) {
    const auto& c = model.candidates[i];
    out << '#' << i + 1 << "  lr " << format_threshold(c.learning_rate) << "  "
        << print(c.classifier, &model.manifest) << '\n';
  }
  return kOk;
}

// ------------------------------------------------------------------- eval

int eval_cmd(const RunConfig& cfg, std::ostream& out) {
  Model model = load_model_file(cfg.model);
  TraceSet set = load(cfg.traces);
  check_manifests(model, set);
  WorkerPool workers(cfg.workers);
  if (!cfg.out.empty()) std::filesystem::create_directories(cfg.out);
  const std::vector<double> levels{0.001, 0.01, 0.03};
  out << "rank  lr  auc  tp@0.001  tp@0.01  tp@0.03  program\n";
  for (std::size_t i = 0; i < model.candidates.size(); ++i) {
    const auto& c = model.candidates[i];
    auto d = score(c.classifier, all_refs(set), model.spaces, model.manifest, &workers);
    double lr = learning_rate(c.classifier, set.positive_refs(), set.negative_refs(), model.spaces,
                              model.manifest, &workers);
    auto curve = roc(d);
    auto tp = tp_at_fp(curve, levels);
    out << i + 1 << "  " << format_threshold(lr) << "  " << format_threshold(curve.auc);
    for (double t : tp) out << "  " << format_threshold(t);
    out << "  " << print(c.classifier, &model.manifest) << '\n';
    if (!cfg.out.empty()) {
      std::ostringstream dist, rc;
      write_distribution_csv(dist, d);
      write_roc_csv(rc, curve);
      auto base = std::filesystem::path(cfg.out) / ("candidate-" + std::to_string(i + 1));
      write_file(base.string() + "-distribution.csv", dist.str());
      write_file(base.string() + "-roc.csv", rc.str());
    }
  }
  if (model.candidates.empty()) out << "no candidates\n";
  return kOk;
}

// ---------------------------------------------------------------- explain

void collect_leaves(const Ast& n, std::vector<Ast>& out) {
  switch (n->kind) {
    case Kind::PredGeq:
    case Kind::PredLeq:
    case Kind::PredEq:
    case Kind::PredPrefix: out.push_back(n); return;
    default:
      for (const auto& k : n->kids) collect_leaves(k, out);
  }
}

std::string resolved(const Ast& leaf, const Model& m) {
  const Ast& b = leaf->kids[0];
  const auto& space = m.spaces.of(leaf->feat);
  if (b->kind == Kind::BoundPct) {
    if (space.empty()) return "(no training values)";
    return "(=" + std::to_string(resolve_percentile(b->pct, space)) + ")";
  }
  if (b->kind == Kind::RangePct) {
    if (space.empty()) return "(no training values)";
    BitPrefix p = resolve_prefix(b->range, space, m.manifest.bit_width(leaf->feat));
    return "(=" + std::to_string(p.value) + "/" + std::to_string(p.length) + ")";
  }
  return "";
}

std::string leaf_text(const Ast& leaf, const Model& m) {
  std::string text = print(leaf, &m.manifest);
  // `[f>=50%]` becomes `f >= 50% (=3)`.
  std::string body = text.substr(1, text.size() - 2);
  static const char* ops[] = {"==", ">=", "<=", "->"};
  for (const char* op : ops) {
    auto at = body.find(op);
    if (at != std::string::npos) {
      body = body.substr(0, at) + " " + op + " " + body.substr(at + 2);
      break;
    }
  }
  std::string r = resolved(leaf, m);
  return r.empty() ? body : body + " " + r;
}

int explain(const RunConfig& cfg, std::ostream& out) {
  Model model = load_model_file(cfg.model);
  if (model.candidates.empty()) {
    out << "no candidates\n";
    return kOk;
  }
  for (std::size_t i = 0; i < model.candidates.size(); ++i) {
    const auto& c = model.candidates[i];
    out << '#' << i + 1 << "  learning rate " << format_threshold(c.learning_rate) << "  cost "
        << format_threshold(c.cost) << '\n';
    out << "  " << print(c.classifier, &model.manifest) << '\n';
    out << "  threshold range [" << format_threshold(c.classifier.threshold_range.lo) << ", "
        << format_threshold(c.classifier.threshold_range.hi) << "]\n";
    std::vector<Ast> leaves;
    collect_leaves(c.classifier.program, leaves);
    std::vector<std::string> seen;
    for (const auto& l : leaves) {
      std::string t = leaf_text(l, model);
      if (std::find(seen.begin(), seen.end(), t) != seen.end()) continue;
      seen.push_back(t);
      out << (seen.size() == 1 ? "  where " : "        ") << t << '\n';
    }
  }
  return kOk;
}

// ---------------------------------------------------------- compile / roc

int compile_cmd(const RunConfig& cfg, std::ostream& out) {
  Model model = load_model_file(cfg.model);
  const Candidate& c = pick(model, cfg.candidate);
  RuleScript s = compile_rules(c.classifier, model.manifest, cfg.name);
  if (cfg.out.empty())
    out << s.text;
  else
    write_file(cfg.out, s.text);
  return kOk;
}

int roc_cmd(const RunConfig& cfg, std::ostream& out) {
  Model model = load_model_file(cfg.model);
  TraceSet set = load(cfg.traces);
  check_manifests(model, set);
  const Candidate& c = pick(model, cfg.candidate);
  WorkerPool workers(cfg.workers);
  auto curve = roc(score(c.classifier, all_refs(set), model.spaces, model.manifest, &workers));
  std::ostringstream csv;
  write_roc_csv(csv, curve);
  if (cfg.out.empty())
    out << csv.str();
  else
    write_file(cfg.out, csv.str());
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthesize and apply quantitative network traffic classifiers", "netqre"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto traces = [&](CLI::App* s) {
    s->add_option("--traces", cfg.traces, "Labeled trace-set file")->required()->check(CLI::ExistingFile);
  };
  auto model_in = [&](CLI::App* s) {
    s->add_option("--model", cfg.model, "Model file")->required()->check(CLI::ExistingFile);
  };
  auto workers = [&](CLI::App* s) {
    s->add_option("--workers", cfg.workers, "Worker threads")->check(CLI::Range(1, 1024));
  };
  auto candidate = [&](CLI::App* s) {
    s->add_option("--candidate", cfg.candidate, "Candidate number, 1 = best");
  };

  auto* train_cmd = app.add_subcommand("train", "Synthesize classifiers from a labeled trace set");
  traces(train_cmd);
  train_cmd->add_option("--out", cfg.out, "Model file to write")->required();
  train_cmd->add_option("--candidates", cfg.candidates, "Number of classifiers to keep")->check(CLI::PositiveNumber);
  train_cmd->add_option("--epsilon", cfg.epsilon, "Tolerated fraction of misclassified examples")
      ->check(CLI::Range(0.0, 1.0));
  workers(train_cmd);
  train_cmd->add_option("--max-cost", cfg.max_cost, "Complexity bound of the search");
  train_cmd->add_option("--time-budget", cfg.time_budget, "Seconds per search, 0 for none");
  train_cmd->add_option("--leaf-threshold", cfg.leaf_threshold, "Largest task solved without splitting");
  train_cmd->add_option("--harvest-depth", cfg.harvest_depth, "Height of harvested subprograms");
  train_cmd->add_option("--seed", cfg.seed, "Random seed");
  train_cmd->add_flag("--progress", cfg.progress, "Report each task as a JSON line on stderr");

  auto* eval_sub = app.add_subcommand("eval", "Score a trace set with every candidate of a model");
  model_in(eval_sub);
  traces(eval_sub);
  eval_sub->add_option("--out", cfg.out, "Directory for distribution and ROC files");
  workers(eval_sub);

  auto* explain_sub = app.add_subcommand("explain", "List candidates with resolved predicates");
  model_in(explain_sub);

  auto* compile_sub = app.add_subcommand("compile", "Translate a candidate into a rule script");
  model_in(compile_sub);
  candidate(compile_sub);
  compile_sub->add_option("--name", cfg.name, "Attack name used in the notice");
  compile_sub->add_option("--out", cfg.out, "Script file to write");

  auto* roc_sub = app.add_subcommand("roc", "Write the ROC curve of one candidate");
  model_in(roc_sub);
  traces(roc_sub);
  candidate(roc_sub);
  roc_sub->add_option("--out", cfg.out, "CSV file to write");
  workers(roc_sub);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }

  try {
    if (*train_cmd) return train(cfg, out, err);
    if (*eval_sub) return eval_cmd(cfg, out);
    if (*explain_sub) return explain(cfg, out);
    if (*compile_sub) return compile_cmd(cfg, out);
    if (*roc_sub) return roc_cmd(cfg, out);
  } catch (const UnsupportedShape& e) {
    err << "error: unsupported shape: " << e.what() << '\n';
    return kUnsupported;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
  return kIoError;
}

}  // namespace netqre::cli
