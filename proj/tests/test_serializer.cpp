#include <doctest.h>

#include "brepseq/error.hpp"
#include "brepseq/pipeline.hpp"
#include "brepseq/serializer.hpp"
#include "brepseq/synth.hpp"
#include "fixtures.hpp"

using namespace brepseq;

namespace {

constexpr int SOS = 1280, EOS = 1281, FACE = 1282, LOOP = 1283, LINE = 1284, ARC = 1285;

WireframeModel canonical(const WireframeModel& m) {
  return canonical_order(quantize_vertices(normalize_model(m).model).model);
}

}  // namespace

TEST_SUITE("serializer") {
  TEST_CASE("vocabulary layout") {
    const Vocabulary v;
    CHECK(v.size() == 1287);
    CHECK(v.coord(1023) == 1023);
    CHECK(v.curve(0) == 1024);
    CHECK(v.curve(255) == 1279);
    CHECK(v.special(Special::Sos) == SOS);
    CHECK(v.special(Special::Complex) == 1286);
  }

  TEST_CASE("square face is 18 tokens, 21 with one arc") {
    const auto line = encode_model(fixtures::square(), nullptr).tokens;
    CHECK(line.size() == 20);
    CHECK(line.front() == SOS);
    CHECK(line.back() == EOS);
    CHECK(line[1] == FACE);
    CHECK(line[2] == LOOP);
    CHECK(line[6] == LINE);
    int lines = 0;
    for (int t : line) lines += t == LINE;
    CHECK(lines == 4);

    const auto arc = encode_model(fixtures::square(true), nullptr).tokens;
    CHECK(arc.size() - 2 == 21);
    int arcs = 0;
    for (int t : arc) arcs += t == ARC;
    CHECK(arcs == 1);
  }

  TEST_CASE("plate with a square hole is 35 tokens") {
    const auto t = encode_model(fixtures::plate_with_square_hole(), nullptr).tokens;
    CHECK(t.size() - 2 == 35);
    CHECK(t[19] == LOOP);
  }

  TEST_CASE("cube is 110 tokens, vertex 0 at the min corner") {
    const Encoded enc = encode_model(fixtures::cube(), nullptr);
    CHECK(enc.tokens.size() == 110);
    const Vec3 p0 = enc.canonical.vertices[0].position;
    for (const auto& v : enc.canonical.vertices) {
      CHECK(std::tie(p0.z, p0.y, p0.x) <= std::tie(v.position.z, v.position.y, v.position.x));
    }
  }

  TEST_CASE("canonical order is idempotent and face-order independent") {
    const WireframeModel c = canonical(fixtures::cube());
    CHECK(canonical_order(c) == c);
    WireframeModel shuffled = fixtures::cube();
    std::reverse(shuffled.faces.begin(), shuffled.faces.end());
    std::rotate(shuffled.faces[2].loops[0].entries.begin(), shuffled.faces[2].loops[0].entries.begin() + 1,
                shuffled.faces[2].loops[0].entries.end());
    CHECK(serialize_model(canonical(shuffled)) == serialize_model(c));
  }

  TEST_CASE("faces with the same vertex set tie-break on their tokens") {
    WireframeModel m = fixtures::square();
    Face arc_face = fixtures::square(true).faces[0];
    m.faces.insert(m.faces.begin(), arc_face);
    const WireframeModel c = canonical(m);
    REQUIRE(c.faces.size() == 2);
    const auto a = serialize_face(c.faces[0], c);
    const auto b = serialize_face(c.faces[1], c);
    CHECK(a < b);
    std::swap(m.faces[0], m.faces[1]);
    CHECK(canonical(m) == c);
  }

  TEST_CASE("empty model and token files") {
    CHECK_THROWS_WITH_AS(serialize_model(WireframeModel{}), doctest::Contains("no faces"), Error);
    const TokenSequence t = encode_model(fixtures::cube(), nullptr).tokens;
    CHECK(tokens_from_json(tokens_to_json(t)) == t);
    CHECK_THROWS_AS(tokens_from_json("{\"tokens\":[1,\"x\"]}"), Error);
  }

  TEST_CASE("plate families stay under 47 tokens per face") {
    FamilyMix mix{};
    mix[static_cast<int>(Family::PlateWithHoles)] = 1;
    const auto corpus = generate_corpus(50, mix, 11);
    double tokens = 0, faces = 0;
    for (const auto& s : corpus) {
      const Encoded e = encode_model(s.model, nullptr);
      REQUIRE(e.conflicts.empty());
      tokens += static_cast<double>(e.tokens.size() - 2);
      faces += static_cast<double>(e.canonical.faces.size());
    }
    CHECK(tokens / faces < 47.0);
  }
}
