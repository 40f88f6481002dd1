#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cli.hpp"
#include "generators.hpp"
#include "netqre/model.hpp"

using namespace netqre;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir() {
  auto d = fs::temp_directory_path() / ("netqre-cli-" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

std::string write_traces(const std::string& name, const TraceSet& set) {
  auto path = (scratch_dir() / name).string();
  std::ofstream f(path);
  write_trace_set(f, set);
  return path;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string syn_traces(std::uint64_t seed) {
  return write_traces("syn-" + std::to_string(seed) + ".jsonl",
                      make_trace_set(TraceManifest::standard(), testsupport::syn_flood_like(seed, 12, 12)));
}

std::string attack_program(const std::string& name) {
  std::ifstream f(std::string(NETQRE_TEST_DATA) + "/data/attack_programs.txt");
  std::string line;
  while (std::getline(f, line)) {
    auto tab = line.find('\t');
    if (line[0] != '#' && line.substr(0, tab) == name) return line.substr(tab + 1);
  }
  return {};
}

std::string model_with(const std::vector<std::string>& programs) {
  auto m = TraceManifest::standard();
  Model model{m, {}, {}};
  model.spaces.values.assign(m.size(), {0, 1});
  model.spaces.values[7] = {1, 3, 12, 15};
  for (const auto& p : programs) {
    Classifier c = parse_classifier(p, m);
    model.candidates.push_back({c, 1.0, 5.0, print(c.program)});
  }
  auto path = (scratch_dir() / ("model-" + std::to_string(programs.size()) + ".json")).string();
  save_model_file(path, model);
  return path;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("train writes a model that separates the training set") {
  auto traces = syn_traces(3);
  auto model = (scratch_dir() / "syn-model.json").string();
  Run r = run({"train", "--traces", traces, "--out", model, "--candidates", "2"});
  CAPTURE(r.err);
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.find("#1  lr 1  ") != std::string::npos);
  Model m = load_model_file(model);
  REQUIRE_FALSE(m.candidates.empty());
  CHECK(m.candidates.size() <= 2);
  CHECK(m.candidates[0].learning_rate == 1.0);

  // Held-out traces from the same family.
  auto held = syn_traces(4);
  Run e = run({"eval", "--model", model, "--traces", held});
  REQUIRE(e.code == cli::kOk);
  CHECK(e.out.rfind("rank  lr  auc", 0) == 0);
  CHECK(e.out.find("\n1  ") != std::string::npos);

  Run roc = run({"roc", "--model", model, "--traces", held});
  REQUIRE(roc.code == cli::kOk);
  CHECK(roc.out.rfind("threshold,fpr,tpr\ninf,0,0\n", 0) == 0);

  Run progress = run({"train", "--traces", traces, "--out", model, "--progress", "--leaf-threshold", "8"});
  REQUIRE(progress.code == cli::kOk);
  CHECK(progress.err.find("\"outcome\"") != std::string::npos);
}

TEST_CASE("input and usage errors exit with 2") {
  auto missing = (scratch_dir() / "missing.jsonl").string();
  CHECK(run({"train", "--traces", missing, "--out", "x"}).code == cli::kIoError);
  CHECK(run({"frobnicate"}).code == cli::kIoError);
  CHECK(run({"train", "--out", "x"}).code == cli::kIoError);

  auto bad = (scratch_dir() / "bad.jsonl").string();
  std::ofstream(bad) << "not a manifest\n";
  Run r = run({"train", "--traces", bad, "--out", (scratch_dir() / "bad-model.json").string()});
  CHECK(r.code == cli::kIoError);
  CHECK(r.err.rfind("error: ", 0) == 0);

  auto model = model_with({"/[tcp.rst==1]*/ > 0"});
  CHECK(run({"compile", "--model", model, "--candidate", "2"}).code == cli::kIoError);
  CHECK(run({"compile", "--model", model, "--candidate", "0"}).code == cli::kIoError);
}

TEST_CASE("eval reports a manifest mismatch naming both manifests") {
  TraceManifest other({"a", "ts"}, {4, 32}, {}, "ts");
  std::vector<Example> ex{{"p", Label::Positive, {{1, 0}}}, {"n", Label::Negative, {{2, 0}}}};
  auto traces = write_traces("other.jsonl", make_trace_set(other, ex));
  Run r = run({"eval", "--model", model_with({"/[tcp.rst==1]*/ > 0"}), "--traces", traces});
  CHECK(r.code == cli::kIoError);
  CHECK(r.err.find("2 features: a,ts") != std::string::npos);
  CHECK(r.err.find("features: ip.src_ip") != std::string::npos);
}

TEST_CASE("explain resolves percentiles against the training values") {
  auto model = model_with({"( /_* [tcp.seq>=50%] _* [tcp.rst==1] _*/ )*sum > 1.5"});
  Run r = run({"explain", "--model", model});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.find("#1  learning rate 1  cost 5") != std::string::npos);
  CHECK(r.out.find("[tcp.rst==1]") != std::string::npos);
  CHECK(r.out.find("where tcp.seq >= 50% (=3)") != std::string::npos);
  CHECK(r.out.find("tcp.rst == 1\n") != std::string::npos);
}

TEST_CASE("compile prints the rule script or refuses the shape") {
  auto model = model_with({attack_program("DDoS"), attack_program("Hulk")});
  std::ifstream g(std::string(NETQRE_TEST_DATA) + "/golden/ddos.rules");
  std::ostringstream golden;
  golden << g.rdbuf();

  Run r = run({"compile", "--model", model, "--name", "DDoS"});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out == golden.str());

  auto out = (scratch_dir() / "ddos.rules").string();
  REQUIRE(run({"compile", "--model", model, "--name", "DDoS", "--out", out}).code == cli::kOk);
  CHECK(read_file(out) == golden.str());

  Run hulk = run({"compile", "--model", model, "--candidate", "2"});
  CHECK(hulk.code == cli::kUnsupported);
  CHECK(hulk.err.find("unsupported shape") != std::string::npos);
}

TEST_CASE("a task with no separating program exits with 1") {
  std::vector<Example> ex;
  for (int i = 0; i < 3; ++i) {
    Packet p(TraceManifest::standard().size(), 0);
    ex.push_back({"p" + std::to_string(i), Label::Positive, {p, p}});
    ex.push_back({"n" + std::to_string(i), Label::Negative, {p, p}});
  }
  auto traces = write_traces("same.jsonl", make_trace_set(TraceManifest::standard(), ex));
  auto model = (scratch_dir() / "empty-model.json").string();
  Run r = run({"train", "--traces", traces, "--out", model, "--max-cost", "6"});
  CHECK(r.code == cli::kNoCandidates);
  CHECK(r.err.find("no candidates") != std::string::npos);
  CHECK(run({"explain", "--model", model}).out == "no candidates\n");
}

}  // TEST_SUITE
