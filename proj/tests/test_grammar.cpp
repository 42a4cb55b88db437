#include <doctest.h>

#include <random>

#include "brepseq/error.hpp"
#include "brepseq/grammar.hpp"
#include "brepseq/pipeline.hpp"
#include "fixtures.hpp"

using namespace brepseq;

namespace {

constexpr int SOS = 1280, EOS = 1281, FACE = 1282, LOOP = 1283, LINE = 1284, ARC = 1285, COMPLEX = 1286;

std::vector<int> cube_tokens() { return encode_model(fixtures::cube(), nullptr).tokens; }

std::vector<int> ids_of(const std::vector<std::uint8_t>& mask) {
  std::vector<int> out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(static_cast<int>(i));
  return out;
}

}  // namespace

TEST_SUITE("grammar") {
  TEST_CASE("state transitions") {
    const Grammar g;
    GrammarState s;
    s = g.advance(s, SOS);
    CHECK(s.phase == Phase::AwaitFace);
    s = g.advance(s, FACE);
    CHECK(s.phase == Phase::AwaitLoop);
    s = g.advance(g.advance(s, LOOP), 10);
    s = g.advance(g.advance(s, 11), 12);
    CHECK(s.phase == Phase::AwaitEdgeType);
    s = g.advance(s, LINE);
    CHECK(s.phase == Phase::EdgeComplete);
    CHECK(s.vertices == 1);
    CHECK_THROWS_AS(g.advance(s, LOOP), GrammarError);
    CHECK_THROWS_AS(g.advance(s, EOS), GrammarError);
  }

  TEST_CASE("masks at fixed points") {
    const Grammar g;
    CHECK(g.valid_ids(g.run(std::vector<int>{})) == std::vector<int>{SOS});
    CHECK(g.valid_ids(g.run(std::vector<int>{SOS})) == std::vector<int>{FACE});
    CHECK(g.valid_ids(g.run(std::vector<int>{SOS, FACE, LOOP, 1, 2, 3})) == std::vector<int>{LINE, ARC, COMPLEX});

    const std::vector<int> two = {SOS, FACE, LOOP, 1, 2, 3, LINE, 4, 5, 6, LINE};
    const auto ids = g.valid_ids(g.run(two));
    CHECK(ids.size() == 1024 + 3);
    CHECK(ids[1023] == 1023);
    CHECK(ids[1024] == EOS);
    CHECK(ids[1025] == FACE);
    CHECK(ids[1026] == LOOP);

    const std::vector<int> arc = {SOS, FACE, LOOP, 1, 2, 3, ARC};
    CHECK(g.valid_ids(g.run(arc)).size() == 1024);
    const std::vector<int> curve = {SOS, FACE, LOOP, 1, 2, 3, COMPLEX};
    const auto cids = g.valid_ids(g.run(curve));
    CHECK(cids.front() == 1024);
    CHECK(cids.back() == 1279);
  }

  TEST_CASE("loop entity capacity") {
    const Grammar g;
    std::vector<int> t = {SOS, FACE, LOOP};
    for (int v = 0; v < 15; ++v) t.insert(t.end(), {v, v, v, LINE});
    const auto ids = g.valid_ids(g.run(t));
    CHECK(ids == std::vector<int>{EOS, FACE, LOOP});
  }

  TEST_CASE("mask agrees with advance for every id") {
    const Grammar g;
    std::mt19937 rng(3);
    GrammarState s;
    for (int step = 0; step < 400 && s.phase != Phase::Done; ++step) {
      const auto mask = g.valid_next_mask(s);
      for (int id = 0; id < 1287; ++id) {
        bool ok = true;
        try {
          g.advance(s, id);
        } catch (const GrammarError&) {
          ok = false;
        }
        REQUIRE(ok == static_cast<bool>(mask[static_cast<std::size_t>(id)]));
      }
      const auto ids = ids_of(mask);
      s = g.advance(s, ids[rng() % ids.size()]);
    }
  }

  TEST_CASE("structural indices") {
    const auto t = cube_tokens();
    const auto idx = structural_indices(t);
    REQUIRE(idx.size() == t.size());
    CHECK(idx[0] == StructuralIndex{});
    CHECK(idx[1] == StructuralIndex{1, 0, 0, 0, 0});
    CHECK(idx[2] == StructuralIndex{1, 1, 0, 0, 0});
    CHECK(idx[3] == StructuralIndex{1, 1, 1, 1, 1});
    CHECK(idx[5] == StructuralIndex{1, 1, 1, 1, 3});
    CHECK(idx[6] == StructuralIndex{1, 1, 2, 2, 1});
    CHECK(idx[7] == StructuralIndex{1, 1, 1, 3, 1});
    CHECK(idx[19] == StructuralIndex{2, 0, 0, 0, 0});

    const std::vector<int> arc = {SOS, FACE, LOOP, 1, 2, 3, ARC, 7, 8, 9};
    const auto a = structural_indices(arc);
    CHECK(a[6] == StructuralIndex{1, 1, 2, 2, 1});
    CHECK(a[7] == StructuralIndex{1, 1, 2, 2, 2});
    CHECK(a[9] == StructuralIndex{1, 1, 2, 2, 4});
  }

  TEST_CASE("parse of the cube and error positions") {
    const auto t = cube_tokens();
    const WireframeModel m = parse_tokens(t, nullptr);
    REQUIRE(m.faces.size() == 6);
    for (const auto& f : m.faces) {
      REQUIRE(f.loops.size() == 1);
      CHECK(f.loops[0].entries.size() == 4);
      for (const auto& e : f.loops[0].entries) CHECK(e.edge.kind == EdgeKind::Line);
    }

    std::vector<int> cut(t.begin(), t.begin() + 5);
    cut.push_back(EOS);
    try {
      parse_tokens(cut, nullptr);
      FAIL("expected a grammar error");
    } catch (const GrammarError& e) {
      CHECK(e.position() == 5);
    }

    std::vector<int> trunc(t.begin(), t.begin() + 40);
    try {
      parse_tokens(trunc, nullptr);
      FAIL("expected a grammar error");
    } catch (const GrammarError& e) {
      CHECK(e.position() == 40);
    }
  }

  TEST_CASE("constrained rollouts terminate within the length budget and parse") {
    Config c;
    c.max_seq_len = 64;
    const Grammar g(c);
    std::mt19937 rng(8);
    for (int r = 0; r < 200; ++r) {
      GrammarState s;
      std::vector<int> t;
      while (s.phase != Phase::Done) {
        const auto ids = g.valid_ids(s);
        REQUIRE(!ids.empty());
        t.push_back(ids[rng() % ids.size()]);
        s = g.advance(s, t.back());
      }
      CHECK(t.size() <= 64);
      bool has_curve = false;
      for (int x : t) has_curve |= x == COMPLEX;
      if (!has_curve) CHECK_NOTHROW(parse_tokens(t, nullptr, c));
    }
  }
}
