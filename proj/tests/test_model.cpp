#include <doctest.h>

#include <sstream>

#include "netqre/model.hpp"

using namespace netqre;

namespace {

Model sample() {
  auto m = TraceManifest::standard();
  Model model{m, {}, {}};
  model.spaces.values.assign(m.size(), {});
  model.spaces.values[7] = {1, 3, 12, 15};
  model.spaces.values[13] = {0, 1};
  for (auto [text, lr, cost] : {std::tuple{"( /_* [tcp.seq>=50%] _*/ )*sum > 1.5", 1.0, 9.0},
                                std::tuple{"/[tcp.rst==1]*/ > 0", 0.75, 5.0}}) {
    Classifier c = parse_classifier(text, m);
    model.candidates.push_back({c, lr, cost, print(c.program)});
  }
  model.candidates[1].classifier.threshold_range = {-kInf, kInf};
  return model;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("save and load round trip") {
  Model a = sample();
  std::stringstream s;
  save_model(s, a);
  Model b = load_model(s);
  CHECK(b.manifest == a.manifest);
  CHECK(b.spaces == a.spaces);
  REQUIRE(b.candidates.size() == a.candidates.size());
  for (std::size_t i = 0; i < a.candidates.size(); ++i) {
    const auto& x = a.candidates[i];
    const auto& y = b.candidates[i];
    CHECK(print(y.classifier.program) == print(x.classifier.program));
    CHECK(y.classifier.threshold == x.classifier.threshold);
    CHECK(y.classifier.threshold_range.lo == x.classifier.threshold_range.lo);
    CHECK(y.classifier.threshold_range.hi == x.classifier.threshold_range.hi);
    CHECK(y.learning_rate == x.learning_rate);
    CHECK(y.cost == x.cost);
    CHECK(y.text == x.text);
  }
  // Saving again gives the same bytes.
  std::stringstream again;
  save_model(again, b);
  CHECK(again.str() == s.str());
  CHECK(s.str().find("\"-inf\"") != std::string::npos);
}

TEST_CASE("malformed files are rejected") {
  std::stringstream text;
  save_model(text, sample());
  std::string good = text.str();

  auto rejects = [](const std::string& content) {
    std::stringstream in(content);
    CHECK_THROWS_AS(load_model(in), ModelError);
  };
  rejects("");
  rejects("not json");
  rejects("{}");
  std::string wrong_format = good;
  wrong_format.replace(wrong_format.find("netqre-model"), 12, "other-format");
  rejects(wrong_format);
  std::string wrong_version = good;
  wrong_version.replace(wrong_version.find("\"version\": 1"), 12, "\"version\": 9");
  rejects(wrong_version);
  rejects(good.substr(0, good.size() / 2));
}

}  // TEST_SUITE
