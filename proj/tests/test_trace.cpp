#include <doctest.h>

#include <sstream>

#include "generators.hpp"
#include "netqre/trace.hpp"
#include "reference.hpp"

using namespace netqre;

namespace {

const char* kManifest =
    R"({"features":["a","b","ts"],"bit_widths":[4,4,32],"enums":{},"time_feature":"ts","time_encoding":"ts"})";

}  // namespace

TEST_SUITE("trace") {

TEST_CASE("loading counts examples and converts timestamps to intervals") {
  std::stringstream in;
  in << kManifest << "\n";
  for (int i = 0; i < 4; ++i)
    in << R"({"id":"e)" << i << R"(","label":")" << (i < 2 ? "pos" : "neg")
       << R"(","packets":[[1,2,0],[3,4,250],[5,6,1250]]})" << "\n";
  TraceSet s = read_trace_set(in);
  CHECK(s.positives.size() == 2);
  CHECK(s.negatives.size() == 2);
  const auto& p = s.positives[0].packets;
  CHECK(p[0][2] == 0);
  CHECK(p[1][2] == 250);
  CHECK(p[2][2] == 1000);
  CHECK(s.manifest.time_encoding() == TimeEncoding::Interval);
  CHECK(s.spaces.of(FeatureId{0}) == std::vector<std::uint64_t>{1, 3, 5});

  std::stringstream out;
  write_trace_set(out, s);
  TraceSet again = read_trace_set(out);
  CHECK(again.positives[0].packets == s.positives[0].packets);
  CHECK(again.spaces == s.spaces);
}

TEST_CASE("malformed trace sets are rejected") {
  auto bad = [](const std::string& body) {
    std::stringstream in;
    in << kManifest << "\n" << body << "\n";
    return in;
  };
  auto ragged = bad(R"({"id":"x","label":"pos","packets":[[1,2]]})");
  CHECK_THROWS_AS(read_trace_set(ragged), TraceError);
  auto label = bad(R"({"id":"x","label":"maybe","packets":[[1,2,3]]})");
  CHECK_THROWS_AS(read_trace_set(label), TraceError);
  auto json = bad(R"({"id":"x","label":"pos","packets":[[1,2,3]])");
  CHECK_THROWS_AS(read_trace_set(json), TraceError);
  auto order = bad(R"({"id":"x","label":"pos","packets":[[1,2,30],[1,2,20]]})");
  CHECK_THROWS_AS(read_trace_set(order), TraceError);
  auto wide = bad(R"({"id":"x","label":"pos","packets":[[16,2,30]]})");
  CHECK_THROWS_AS(read_trace_set(wide), TraceError);
  auto empty = bad(R"({"id":"x","label":"pos","packets":[]})");
  CHECK_THROWS_AS(read_trace_set(empty), TraceError);
  std::stringstream nothing;
  CHECK_THROWS_AS(read_trace_set(nothing), TraceError);
  CHECK_THROWS_AS(load("/nonexistent/traces.jsonl"), TraceError);
}

TEST_CASE("percentiles resolve to training values") {
  const std::vector<std::uint64_t> space{1, 3, 12, 15};
  CHECK(resolve_percentile(Percentile(1, 1), space) == 3);
  CHECK(resolve_percentile(Percentile::zero(), space) == 1);
  CHECK(resolve_percentile(Percentile::one(), space) == 15);
  BitPrefix p = resolve_prefix({Percentile(3, 2), Percentile::one()}, space, 4);
  CHECK(p.length == 2);
  CHECK((p.value >> 2) == 0b11);
  CHECK(prefix_matches(p, 12, 4));
  CHECK(prefix_matches(p, 15, 4));
  CHECK_FALSE(prefix_matches(p, 3, 4));
  CHECK_THROWS_AS(resolve_percentile(Percentile::one(), {}), TraceError);
}

TEST_CASE("resolution agrees with a rank scan and is monotone") {
  testsupport::Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    std::set<std::uint64_t> vals;
    int n = std::uniform_int_distribution<int>(1, 12)(rng);
    while (static_cast<int>(vals.size()) < n) vals.insert(rng() % 256);
    std::vector<std::uint64_t> space(vals.begin(), vals.end());
    std::uint64_t prev = 0;
    for (std::uint64_t k = 0; k <= 16; ++k) {
      Percentile q(k, 4);
      std::uint64_t v = resolve_percentile(q, space);
      CHECK(v == testsupport::ref_percentile(q, space));
      CHECK(v >= prev);
      prev = v;
    }
    Percentile lo(rng() % 9, 3), hi(rng() % 9, 3);
    if (hi < lo) std::swap(lo, hi);
    BitPrefix p = resolve_prefix({lo, hi}, space, 8);
    for (std::uint64_t x = 0; x < 256; ++x)
      CHECK(prefix_matches(p, x, 8) == testsupport::ref_prefix_match({lo, hi}, space, 8, x));
    // every value in the rank range shares the prefix
    for (auto v : space)
      if (v >= resolve_percentile(lo, space) && v <= resolve_percentile(hi, space)) CHECK(prefix_matches(p, v, 8));
  }
}

TEST_CASE("three-valued connectives") {
  CHECK((Truth::True && Truth::Unknown) == Truth::Unknown);
  CHECK((Truth::False && Truth::Unknown) == Truth::False);
  CHECK((Truth::True || Truth::Unknown) == Truth::True);
  CHECK((Truth::False || Truth::Unknown) == Truth::Unknown);
  CHECK((Truth::False || Truth::False) == Truth::False);
}

TEST_CASE("concrete and estimated predicates") {
  auto m = TraceManifest::standard();
  ValueSpaces spaces;
  spaces.values.assign(m.size(), {0, 1});
  spaces.values[7] = {1, 3, 12, 15};
  spaces.values[3] = {1, 6, 17};
  Packet pkt(m.size(), 0);
  pkt[3] = 6;
  pkt[7] = 3;
  CHECK(resolve(parse_program("/[ip.type==TCP]/", m)->kids[0]->kids[0], spaces, m).match(pkt) == Truth::True);

  // [tcp.seq >= <[25%,75%]>]: 12 and above for sure, 1 and above possibly
  Ast est = ast::geq(FeatureId{7}, ast::bound_estimate({Percentile(1, 2), Percentile(3, 2)}));
  ConcretePredicate c = resolve(est, spaces, m);
  CHECK_FALSE(c.is_concrete());
  pkt[7] = 12;
  CHECK(c.match(pkt) == Truth::True);
  pkt[7] = 3;
  CHECK(c.match(pkt) == Truth::Unknown);
  pkt[7] = 0;
  CHECK(c.match(pkt) == Truth::False);

  ConcretePredicate u = resolve(ast::unknown(), spaces, m);
  ConcretePredicate t = resolve(ast::eq(FeatureId{3}, ast::bound_value(6)), spaces, m);
  pkt[3] = 6;
  CHECK(resolve(ast::pred_and(ast::eq(FeatureId{3}, ast::bound_value(6)), ast::unknown()), spaces, m).match(pkt) ==
        Truth::Unknown);
  CHECK(resolve(ast::pred_or(ast::eq(FeatureId{3}, ast::bound_value(6)), ast::unknown()), spaces, m).match(pkt) ==
        Truth::True);
  CHECK(u.match(pkt) == Truth::Unknown);
  CHECK(t.match(pkt) == Truth::True);
}

TEST_CASE("resolved predicates agree with the reference on random packets") {
  testsupport::Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    auto w = testsupport::small_world(rng);
    Ast p = testsupport::random_pred(rng, w, 3);
    ConcretePredicate c = resolve(p, w.spaces, w.manifest);
    CHECK(c.is_concrete());
    for (const auto& pkt : testsupport::random_trace(rng, w, 8)) {
      bool want = testsupport::ref_pred(p, pkt, w.spaces, w.manifest);
      CHECK(c.match(pkt) == (want ? Truth::True : Truth::False));
    }
  }
}

}  // TEST_SUITE
