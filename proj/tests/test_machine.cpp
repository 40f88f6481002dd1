#include <doctest.h>

#include "generators.hpp"
#include "netqre/machine.hpp"
#include "netqre/synth.hpp"
#include "reference.hpp"

using namespace netqre;

namespace {

struct Tcp {
  TraceManifest m = TraceManifest::standard();
  ValueSpaces spaces;
  Tcp() {
    spaces.values.assign(m.size(), {0});
    spaces.values[3] = {6, 17};
  }
  Example trace(const std::string& letters) const {
    Example e{"t", Label::Positive, {}};
    for (char c : letters) {
      Packet p(m.size(), 0);
      p[3] = c == 'C' ? 6 : 17;
      e.packets.push_back(p);
    }
    return e;
  }
  Outcome run(const std::string& program, const std::string& letters) const {
    return eval(compile(parse_program(program, m), spaces, m), trace(letters));
  }
};

}  // namespace

TEST_SUITE("machine") {

TEST_CASE("unambiguous counting of TCP pairs") {
  Tcp t;
  Outcome o = t.run("( ( /[ip.type==TCP] [ip.type==TCP]/ )*sum ( /[ip.type==UDP]/ )*sum )max", "CCCCD");
  CHECK(o.matched);
  CHECK(o.certain);
  CHECK(o.value.lo == 2);
  CHECK(o.value.hi == 2);
  ExactResult r = eval_exact(compile(parse_program("( ( /[ip.type==TCP] [ip.type==TCP]/ )*sum ( /[ip.type==UDP]/ )*sum )max", t.m), t.spaces, t.m), t.trace("CCCCD"));
  CHECK(r.status == ExactResult::Status::Value);
  CHECK(r.value == 2);
}

TEST_CASE("ambiguous program covers every strategy") {
  Tcp t;
  Outcome o = t.run("( ( /[ip.type==TCP] [ip.type==TCP]/ )*sum ( /_/ )*sum )max", "CCCCD");
  CHECK(o.matched);
  CHECK(o.value.lo <= 2);
  CHECK(o.value.hi >= 5);
  auto ref = testsupport::ref_outputs(
      parse_program("( ( /[ip.type==TCP] [ip.type==TCP]/ )*sum ( /_/ )*sum )max", t.m), t.trace("CCCCD").packets,
      t.spaces, t.m);
  CHECK(ref == testsupport::Outputs{2, 3, 5});
}

TEST_CASE("no match and empty iterations") {
  Tcp t;
  CHECK_FALSE(t.run("/[ip.type==UDP]/", "C").matched);
  CHECK_FALSE(t.run("/_/", "CC").matched);
  CHECK(t.run("( /_/ )*sum", "CCC").value == Interval::point(3));
  // an iteration with no rounds contributes 0 whatever its operator
  for (const char* op : {"max", "min", "sum"}) {
    Outcome o = t.run(std::string("( ( /[ip.type==UDP]/ )*") + op + " ( /_/ )*sum )sum", "CC");
    CHECK(o.matched);
    CHECK(o.value == Interval::point(2));
  }
}

TEST_CASE("flow splits fold matching sub-flows") {
  auto m = TraceManifest::standard();
  ValueSpaces spaces;
  spaces.values.assign(m.size(), {0});
  Example e{"t", Label::Positive, {}};
  for (std::uint64_t port : {80, 22, 80, 80, 443, 22}) {
    Packet p(m.size(), 0);
    p[6] = port;
    e.packets.push_back(p);
  }
  auto run = [&](const std::string& text) { return eval_exact(compile(parse_program(text, m), spaces, m), e); };
  CHECK(run("( ( /_/ )*sum )max|tcp.dst_port").value == 3);
  CHECK(run("( ( /_/ )*sum )min|tcp.dst_port").value == 1);
  CHECK(run("( ( /_/ )*sum )sum|tcp.dst_port").value == 6);
  // only the two-packet sub-flow matches `/_ _/`; the others are skipped
  CHECK(run("( /_ _/ )sum|tcp.dst_port").value == 1);
  CHECK(run("( ( /_ _/ )*sum )sum|tcp.dst_port").value == 1);
  CHECK(run("( /_ _ _ _/ )sum|tcp.dst_port").status == ExactResult::Status::NoMatch);
  for (const char* text : {"( /_ _/ )sum|tcp.dst_port", "( ( /_ _/ )*sum )sum|tcp.dst_port"})
    CHECK(testsupport::ref_outputs(parse_program(text, m), e.packets, spaces, m) == testsupport::Outputs{1});
}

TEST_CASE("estimates make runs uncertain") {
  Tcp t;
  Outcome o = t.run("( /_/ )*sum", "CCC");
  CHECK(o.certain);
  Ast p = complete_equivalent(parse_program("( /<pred>/ )*sum", t.m));
  Outcome u = eval(compile(p, t.spaces, t.m), t.trace("CCC"));
  CHECK(u.matched);
  CHECK_FALSE(u.certain);
  CHECK(u.value == Interval::point(3));
  Ast q = complete_equivalent(parse_program("( <qre> ( /_/ )*sum )max", t.m));
  Outcome v = eval(compile(q, t.spaces, t.m), t.trace("CCCCC"));
  CHECK(v.value.lo == 0);
  CHECK(v.value.hi == 5);
}

TEST_CASE("compile rejects holes") {
  Tcp t;
  CHECK_THROWS_AS(compile(parse_program("( /<pred>/ )*sum", t.m), t.spaces, t.m), MutationError);
}

TEST_CASE("exact evaluation agrees with the reference on unambiguous programs") {
  testsupport::Rng rng(99);
  int checked = 0;
  for (int i = 0; i < 3000 && checked < 150; ++i) {
    auto w = testsupport::small_world(rng);
    Ast p = testsupport::random_program(rng, w, 3);
    auto trace = testsupport::random_trace(rng, w, 6);
    if (testsupport::ref_decompositions(p, trace, w.spaces, w.manifest) > 1) continue;
    ++checked;
    auto ref = testsupport::ref_outputs(p, trace, w.spaces, w.manifest);
    ExactResult r = eval_exact(compile(p, w.spaces, w.manifest), Example{"x", Label::Positive, trace});
    CAPTURE(print(p, &w.manifest));
    if (ref.empty()) {
      CHECK(r.status == ExactResult::Status::NoMatch);
    } else {
      REQUIRE(r.status == ExactResult::Status::Value);
      CHECK(r.value == *ref.begin());
    }
  }
  CHECK(checked == 150);
}

TEST_CASE("thread count stays bounded on long traces") {
  Tcp t;
  Machine m = compile(parse_program("( ( /_* [ip.type==TCP] _* [ip.type==UDP] _*/ )*sum /_* [ip.type==TCP] _*/ )sum", t.m),
                      t.spaces, t.m);
  std::string letters;
  for (int i = 0; i < 2000; ++i) letters += (i % 3 ? 'C' : 'D');
  EvalStats small, large;
  eval(m, t.trace(letters.substr(0, 200)), &small);
  eval(m, t.trace(letters), &large);
  CHECK(large.steps == 2000);
  CHECK(large.max_threads == small.max_threads);
}

}  // TEST_SUITE
