#include <doctest.h>

#include <json.hpp>

#include "brepseq/pipeline.hpp"
#include "brepseq/synth.hpp"
#include "fixtures.hpp"

using namespace brepseq;

namespace {

std::vector<WireframeModel> models_of(int count, std::uint64_t seed) {
  std::vector<WireframeModel> out;
  for (auto& s : generate_corpus(count, default_family_mix(), seed)) out.push_back(std::move(s.model));
  return out;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("round trip of the fixtures") {
    for (const auto& m : {fixtures::cube(), fixtures::cube(3.5), fixtures::plate_with_square_hole(), fixtures::square(true)}) {
      const RoundTrip r = roundtrip_model(m, nullptr);
      CHECK(r.conflict_free);
      CHECK(r.isomorphic);
      CHECK(r.max_vertex_error <= 1.0 / 1023 + 1e-12);
    }
    CHECK(roundtrip_model(fixtures::cube(), nullptr).valid);
    CHECK_FALSE(roundtrip_model(fixtures::square(), nullptr).valid);
  }

  TEST_CASE("conflicting models produce no tokens") {
    WireframeModel m = fixtures::cube();
    m.vertices[1].position = {1e-6, 0, 0};
    const Encoded e = encode_model(m, nullptr);
    CHECK_FALSE(e.conflicts.empty());
    CHECK(e.tokens.empty());
    const RoundTrip r = roundtrip_model(m, nullptr);
    CHECK_FALSE(r.conflict_free);
    CHECK_FALSE(r.reason.empty());
  }

  TEST_CASE("corpus round trip with a fitted codebook") {
    const auto models = models_of(40, 12);
    const Codebook book = fit_codebook_for_models(models, 1);
    const auto rows = roundtrip_corpus(models, &book, {}, 2);
    REQUIRE(rows.size() == models.size());
    for (const auto& r : rows) {
      CHECK(r.conflict_free);
      CHECK(r.isomorphic);
      CHECK(r.valid);
      CHECK(r.max_vertex_error <= 1.0 / 1023 + 1e-12);
    }
    const auto j = nlohmann::json::parse(roundtrip_to_json(rows[0]));
    for (const char* k : {"pass", "conflict_free", "isomorphic", "valid", "max_vertex_error", "chamfer", "tokens",
                          "vertices", "edges", "faces"})
      CHECK(j.contains(k));
    CHECK(j.at("pass") == true);

    const auto serial = roundtrip_corpus(models, &book, {}, 1);
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(serial[i].tokens == rows[i].tokens);
  }

  TEST_CASE("complex curves without a codebook fail as rows") {
    const WireframeModel m = generate_model({Family::FreeformPlate, {}, 5});
    const auto rows = roundtrip_corpus(std::vector<WireframeModel>{m}, nullptr);
    REQUIRE(rows.size() == 1);
    CHECK_FALSE(rows[0].isomorphic);
    CHECK_FALSE(rows[0].reason.empty());
  }

  TEST_CASE("corpus metrics of a corpus against itself") {
    const auto models = models_of(6, 2);
    const MetricsReport r = corpus_metrics(models, models, {}, 2, 64);
    CHECK(r.cov_cd == 100.0);
    CHECK(r.cov_emd == 100.0);
    CHECK(r.mmd_cd == 0.0);
    CHECK(r.mmd_emd == 0.0);
    CHECK(r.jsd == 0.0);
    REQUIRE(r.pairs.size() == models.size());
    for (const auto& p : r.pairs) CHECK(p.fscore == 1.0);
    const auto j = nlohmann::json::parse(metrics_to_json(r));
    for (const char* k : {"cov_cd", "cov_emd", "mmd_cd", "mmd_emd", "jsd_cd_proxy", "rows"}) CHECK(j.contains(k));
  }

  TEST_CASE("stress rows degrade with sigma") {
    const auto models = models_of(30, 7);
    const Codebook book = fit_codebook_for_models(models, 1);
    const std::vector<double> sigmas = {0, 0.002, 0.01};
    const auto rows = run_stress(models, &book, sigmas, 7, {}, 2);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].validity_rate == 1.0);
    CHECK(rows[0].mean_chamfer < rows[1].mean_chamfer);
    CHECK(rows[1].mean_chamfer < rows[2].mean_chamfer);
    CHECK(rows[2].validity_rate < rows[0].validity_rate);
    const auto j = nlohmann::json::parse(stress_to_json(rows));
    CHECK(j.at("rows").size() == 3);
  }
}
