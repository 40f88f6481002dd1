#include <doctest.h>

#include <random>
#include <sstream>

#include "netqre/classify.hpp"
#include "reference.hpp"

using namespace netqre;

namespace {

OutputDistribution dist(const std::vector<double>& pos, const std::vector<double>& neg) {
  OutputDistribution d;
  for (double v : pos) d.items.push_back({"p", Label::Positive, true, v, false});
  for (double v : neg) d.items.push_back({"n", Label::Negative, true, v, false});
  return d;
}

// Probability that a random positive outranks a random negative, ties
// counting one half; unmatched outputs rank lowest.
double mann_whitney(const OutputDistribution& d) {
  double wins = 0, pairs = 0;
  for (const auto& p : d.items) {
    if (p.label != Label::Positive) continue;
    for (const auto& n : d.items) {
      if (n.label != Label::Negative) continue;
      pairs += 1;
      if (!p.matched && !n.matched) {
        wins += 0.5;
      } else if (!n.matched) {
        wins += 1;
      } else if (p.matched) {
        wins += p.value > n.value ? 1 : p.value == n.value ? 0.5 : 0;
      }
    }
  }
  return wins / pairs;
}

}  // namespace

TEST_SUITE("classify") {

TEST_CASE("rank statistic example") {
  auto d = dist({6, 7, 8}, {4, 5, 7});
  RocCurve c = roc(d);
  // 7 of 9 pairs won outright, one tie at 7, one loss (6 against 7).
  CHECK(mann_whitney(d) == doctest::Approx(7.5 / 9));
  CHECK(c.auc == doctest::Approx(7.5 / 9).epsilon(1e-12));
  REQUIRE(c.points.size() == 7);
  CHECK(c.points.front().threshold == kInf);
  CHECK(c.points.back().threshold == -kInf);
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    CHECK(c.points[i].threshold < c.points[i - 1].threshold);
    CHECK(c.points[i].fpr >= c.points[i - 1].fpr);
    CHECK(c.points[i].tpr >= c.points[i - 1].tpr);
  }
  // At T = 5 the flagged outputs are 6, 7, 8 and the negative 7.
  auto at5 = std::find_if(c.points.begin(), c.points.end(), [](const RocPoint& p) { return p.threshold == 5; });
  REQUIRE(at5 != c.points.end());
  CHECK(at5->tpr == 1);
  CHECK(at5->fpr == doctest::Approx(1.0 / 3));
  // Level 1/3 admits that point; below it only 8 is flagged.
  auto tp = tp_at_fp(c, {0.0, 0.3, 1.0 / 3});
  CHECK(tp[0] == doctest::Approx(1.0 / 3));
  CHECK(tp[1] == doctest::Approx(1.0 / 3));
  CHECK(tp[2] == 1);
}

TEST_CASE("degenerate curves") {
  RocCurve perfect = roc(dist({5, 6}, {1, 2, 3}));
  CHECK(perfect.auc == 1.0);
  for (double t : tp_at_fp(perfect, {0.001, 0.01, 0.03})) CHECK(t == 1.0);
  RocCurve flat = roc(dist({4, 4, 4}, {4, 4}));
  CHECK(flat.auc == 0.5);
  RocCurve inverted = roc(dist({1}, {2}));
  CHECK(inverted.auc == 0.0);
  CHECK_THROWS_AS(roc(dist({1, 2}, {})), MetricsError);
  CHECK_THROWS_AS(roc(dist({}, {1})), MetricsError);
}

TEST_CASE("unmatched outputs rank below every value") {
  auto d = dist({-3, 0}, {-5});
  d.items.push_back({"n2", Label::Negative, false, 0, false});
  d.items.push_back({"p2", Label::Positive, false, 0, false});
  RocCurve c = roc(d);
  CHECK(c.auc == doctest::Approx(mann_whitney(d)));
  CHECK(c.auc == doctest::Approx((2 + 2 + 0.5) / 6.0));
}

TEST_CASE("area matches the rank statistic on random distributions") {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 200; ++round) {
    OutputDistribution d;
    int n = 2 + static_cast<int>(rng() % 30);
    for (int i = 0; i < n; ++i) {
      bool pos = i == 0 || (i != 1 && rng() % 2);
      bool matched = rng() % 8 != 0;
      d.items.push_back({"e", pos ? Label::Positive : Label::Negative, matched,
                         static_cast<double>(rng() % 10) / 2, false});
    }
    RocCurve c = roc(d);
    CHECK(std::abs(c.auc - mann_whitney(d)) < 1e-12);
    auto tp = tp_at_fp(c, {0.001, 0.01, 0.03, 0.5, 1});
    for (std::size_t i = 1; i < tp.size(); ++i) CHECK(tp[i] >= tp[i - 1]);
    CHECK(tp.back() == 1);
  }
}

TEST_CASE("scoring records values, misses and conflicts") {
  auto m = TraceManifest::standard();
  ValueSpaces spaces;
  spaces.values.assign(m.size(), {0});
  spaces.values[10] = {0, 1};
  auto trace = [&](std::string id, Label l, std::vector<int> syn) {
    Example e{std::move(id), l, {}};
    for (int s : syn) {
      Packet p(m.size(), 0);
      p[10] = static_cast<std::uint64_t>(s);
      e.packets.push_back(p);
    }
    return e;
  };
  std::vector<Example> ex{trace("p", Label::Positive, {1, 1, 1}), trace("n1", Label::Negative, {1}),
                          trace("n2", Label::Negative, {0, 1})};
  ExampleRefs refs{&ex[0], &ex[1], &ex[2]};
  auto d = score(parse_classifier("( /[tcp.syn==1]/ )*sum > 2", m), refs, spaces, m);
  REQUIRE(d.items.size() == 3);
  CHECK(d.items[0].value == 3);
  CHECK(d.items[1].value == 1);
  CHECK_FALSE(d.items[2].matched);
  CHECK(d.A == 1);
  CHECK(d.B == 3);
  CHECK(d.B > d.A);

  // Only unmatched negatives: A stays at −∞.
  d = score(parse_classifier("( /[tcp.syn==1] [tcp.syn==1]/ )*sum > 0", m), refs, spaces, m);
  CHECK_FALSE(d.items[0].matched);
  CHECK(d.A == -kInf);

  // Ambiguous splits of the positive trace give a conflict scored at the
  // midpoint of the evaluated interval.
  Classifier amb = parse_classifier("( ( /_/ )*sum ( /_/ )*sum )max > 1", m);
  d = score(amb, refs, spaces, m);
  Interval range = eval(compile(amb.program, spaces, m), ex[0]).value;
  CHECK(d.items[0].conflict);
  CHECK(d.items[0].value == range.midpoint());
  for (double v : testsupport::ref_outputs(amb.program, ex[0].packets, spaces, m)) CHECK(range.contains(v));

  std::ostringstream csv;
  write_distribution_csv(csv, d);
  CHECK(csv.str().rfind("example_id,label,value\n", 0) == 0);
  CHECK(csv.str().find("p,pos," + format_threshold(range.midpoint()) + "\n") != std::string::npos);
}

TEST_CASE("Hulk program on a flow of FIN-terminated connections") {
  auto m = TraceManifest::standard();
  // One packet with a high sequence number, then 20 connections that each
  // end with a FIN.
  Example flow{"hulk", Label::Positive, {}};
  Packet first(m.size(), 0);
  first[7] = 0xF0000000u;
  flow.packets.push_back(first);
  for (int i = 0; i < 20; ++i) {
    Packet data(m.size(), 0), fin(m.size(), 0);
    data[7] = 100 + static_cast<std::uint64_t>(i);
    fin[7] = 200 + static_cast<std::uint64_t>(i);
    fin[12] = 1;
    flow.packets.push_back(data);
    flow.packets.push_back(fin);
  }
  Example quiet{"quiet", Label::Negative, {first, first}};
  ExampleRefs all{&flow, &quiet};
  ValueSpaces spaces = ValueSpaces::build(m, all);
  Classifier c = parse_classifier("( /_* [tcp.seq>=50%] _*/ ( /_* [tcp.fin==1] _*/ )*sum )max > 13", m);

  // The largest-output strategy ends the first block at the first packet
  // and counts one FIN per connection; the shortest strategies give 1.
  auto ref = testsupport::ref_outputs(c.program, flow.packets, spaces, m);
  REQUIRE_FALSE(ref.empty());
  CHECK(*ref.rbegin() == 20);
  CHECK(*ref.begin() == 1);
  CHECK(*ref.rbegin() > c.threshold);

  Outcome o = eval(compile(c.program, spaces, m), flow);
  CHECK(o.value.hi == 20);
  auto d = score(c, all, spaces, m);
  CHECK(d.items[0].conflict);
  CHECK(d.items[0].value == 10.5);
  CHECK(d.items[1].value == 1);
}

TEST_CASE("ROC CSV") {
  std::ostringstream out;
  write_roc_csv(out, roc(dist({2}, {1})));
  CHECK(out.str() == "threshold,fpr,tpr\ninf,0,0\n2,0,0\n1,0,1\n-inf,1,1\n");
}

}  // TEST_SUITE
