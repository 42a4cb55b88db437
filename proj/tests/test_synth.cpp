#include <doctest.h>

#include <cmath>
#include <set>

#include "brepseq/error.hpp"
#include "brepseq/pipeline.hpp"
#include "brepseq/quantizer.hpp"
#include "brepseq/synth.hpp"
#include "brepseq/topology.hpp"

using namespace brepseq;

namespace {

BrepGraph merged(const WireframeModel& m) {
  return merge_wireframe(quantize_vertices(normalize_model(m).model).model);
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("unit box") {
    const WireframeModel m = generate_model({Family::Box, {{"sx", 1}, {"sy", 1}, {"sz", 1}}, 0});
    CHECK(m.vertices.size() == 8);
    CHECK(m.faces.size() == 6);
    const BrepGraph g = merged(m);
    CHECK(g.edges.size() == 12);
    for (const auto& e : g.edges) CHECK(e.kind == EdgeKind::Line);
    CHECK(validity_check(g).valid);
  }

  TEST_CASE("plate with one hole") {
    const SynthModel s = generate({Family::PlateWithHoles, {{"holes", 1}}, 4});
    int capped = 0, walls = 0;
    for (const auto& f : s.model.faces) {
      if (f.loops.size() == 2) {
        ++capped;
        REQUIRE(f.loops[1].entries.size() == 2);
        for (const auto& e : f.loops[1].entries) CHECK(e.edge.kind == EdgeKind::Arc);
      }
      int arcs = 0;
      for (const auto& e : f.outer().entries) arcs += e.edge.kind == EdgeKind::Arc;
      walls += arcs == 2 && f.loops.size() == 1;
    }
    CHECK(capped == 2);
    CHECK(walls == 2);
    CHECK(s.model.faces.size() == 8);
    CHECK(s.truth.size() == s.model.faces.size());
    CHECK(validity_check(merged(s.model)).valid);
  }

  TEST_CASE("parameter resolution") {
    const FamilySpec r = resolve_params({Family::FreeformPlate, {}, 9});
    CHECK(r.params.size() == 4);
    CHECK(resolve_params(r).params == r.params);
    CHECK(r.params.at("sides") == std::floor(r.params.at("sides")));
    CHECK_THROWS_AS(resolve_params({Family::Box, {{"sx", 9.0}}, 0}), Error);
    CHECK_THROWS_AS(resolve_params({Family::Box, {{"bogus", 1.0}}, 0}), Error);
    const FamilySpec back = spec_from_json(spec_to_json(r));
    CHECK(back.family == r.family);
    CHECK(back.params == r.params);
    CHECK(back.seed == r.seed);
    for (int f = 0; f < kFamilyCount; ++f)
      CHECK(family_from_string(to_string(static_cast<Family>(f))) == static_cast<Family>(f));
  }

  TEST_CASE("determinism") {
    const FamilySpec spec{Family::CylinderSegment, {}, 77};
    CHECK(generate_model(spec) == generate_model(spec));
    const auto a = generate_corpus(30, default_family_mix(), 7);
    const auto b = generate_corpus(30, default_family_mix(), 7);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].model == b[i].model);
      CHECK(a[i].truth == b[i].truth);
    }
    CHECK_FALSE(generate_corpus(30, default_family_mix(), 8)[0].model == a[0].model);
  }

  TEST_CASE("corpus of 500 is valid and matches the edge mix") {
    const auto corpus = generate_corpus(500, default_family_mix(), 7);
    REQUIRE(corpus.size() == 500);
    const Config c;
    std::set<std::string> families;
    for (const auto& s : corpus) {
      CHECK_NOTHROW(validate_model(s.model, c));
      const ValidityReport r = validity_check(merged(s.model));
      CHECK(r.valid);
      families.insert(s.model.metadata.at("family"));
    }
    CHECK(families.size() == kFamilyCount);
    const auto mix = edge_type_fractions(corpus);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(mix[k] - kTargetEdgeMix[k]) <= 0.10);
  }

  TEST_CASE("perturbation") {
    const WireframeModel m = normalize_model(generate_model({Family::FreeformPlate, {}, 3})).model;
    CHECK(perturb_model(m, 0.0, 1) == m);

    const double sigma = 0.002;
    const WireframeModel p = perturb_model(m, sigma, 1);
    CHECK(perturb_model(m, sigma, 1) == p);
    REQUIRE(p.vertices.size() == m.vertices.size());
    REQUIRE(p.faces.size() == m.faces.size());
    double worst = 0, sq = 0;
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
      const Vec3 d = p.vertices[i].position - m.vertices[i].position;
      for (int c = 0; c < 3; ++c) {
        worst = std::max(worst, std::abs(d[c]));
        sq += d[c] * d[c];
      }
    }
    const double rms = std::sqrt(sq / (3.0 * static_cast<double>(m.vertices.size())));
    CHECK(worst < 6 * sigma);
    CHECK(rms > 0.5 * sigma);
    CHECK(rms < 1.5 * sigma);
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
      REQUIRE(p.faces[f].loops.size() == m.faces[f].loops.size());
      for (std::size_t l = 0; l < m.faces[f].loops.size(); ++l) {
        const auto& a = m.faces[f].loops[l].entries;
        const auto& b = p.faces[f].loops[l].entries;
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
          CHECK(a[k].vertex == b[k].vertex);
          CHECK(a[k].edge.kind == b[k].edge.kind);
          if (a[k].edge.kind == EdgeKind::Complex) {
            CHECK(b[k].edge.samples.front() == p.vertices[static_cast<std::size_t>(b[k].vertex)].position);
          }
        }
      }
    }
  }
}
