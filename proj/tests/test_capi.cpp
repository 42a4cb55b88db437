#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "brepseq/brepseq.h"

using nlohmann::json;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  bs_string_free(s);
  return out;
}

struct Corpus {
  bs_corpus* c = nullptr;
  std::vector<bs_model*> models;
  explicit Corpus(int count, uint64_t seed) {
    REQUIRE(bs_corpus_generate(count, seed, nullptr, nullptr, &c) == BS_OK);
    for (size_t i = 0; i < bs_corpus_size(c); ++i) {
      bs_model* m = nullptr;
      REQUIRE(bs_corpus_model(c, i, &m) == BS_OK);
      models.push_back(m);
    }
  }
  ~Corpus() {
    for (auto* m : models) bs_model_free(m);
    bs_corpus_free(c);
  }
};

}  // namespace

TEST_SUITE("capi") {
  TEST_CASE("status names and errors") {
    CHECK(std::string(bs_status_name(BS_GRAMMAR)) == "grammar error");
    CHECK(std::string(bs_version()).size() > 0);
    bs_model* m = nullptr;
    CHECK(bs_model_from_json("{\"vertices\":[", nullptr, &m) == BS_SCHEMA);
    CHECK(m == nullptr);
    CHECK(std::string(bs_last_error()).size() > 0);
    CHECK(json::parse(bs_last_error_json()).at("code") == BS_SCHEMA);
    CHECK(bs_model_load("/nonexistent/model.json", nullptr, &m) == BS_IO);
    CHECK(bs_model_to_json(nullptr, nullptr) == BS_INVALID_ARGUMENT);
  }

  TEST_CASE("cube encodes to 110 tokens and decodes back") {
    bs_model* m = nullptr;
    REQUIRE(bs_model_load(BREPSEQ_TEST_DATA "/cube.json", nullptr, &m) == BS_OK);
    int32_t* tokens = nullptr;
    size_t count = 0;
    REQUIRE(bs_encode(m, nullptr, nullptr, &tokens, &count) == BS_OK);
    CHECK(count == 110);
    CHECK(tokens[0] == 1280);
    CHECK(tokens[count - 1] == 1281);

    const auto j = json::parse(take([&] {
      char* s = nullptr;
      bs_tokens_to_json(tokens, count, &s);
      return s;
    }()));
    CHECK(j.at("tokens").size() == 110);

    char* idx = nullptr;
    REQUIRE(bs_structural_indices_json(tokens, count, nullptr, &idx) == BS_OK);
    const auto rows = json::parse(take(idx)).at("indices");
    CHECK(rows.size() == 110);
    CHECK(rows[1] == json::array({1, 0, 0, 0, 0}));

    bs_model* back = nullptr;
    REQUIRE(bs_decode(tokens, count, nullptr, nullptr, &back) == BS_OK);
    char* merged = nullptr;
    REQUIRE(bs_merge(back, nullptr, &merged) == BS_OK);
    const auto mj = json::parse(take(merged));
    CHECK(mj.at("validity").at("valid") == true);
    CHECK(mj.at("validity").at("cc") == 6);
    CHECK(mj.at("graph").at("edges").size() == 12);

    tokens[5] = 1281;
    bs_model* bad = nullptr;
    CHECK(bs_decode(tokens, count, nullptr, nullptr, &bad) == BS_GRAMMAR);
    const auto err = json::parse(bs_last_error_json());
    CHECK(err.at("pos") == 5);
    CHECK(err.at("expected").size() == 1024);

    bs_tokens_free(tokens);
    bs_model_free(back);
    bs_model_free(m);
  }

  TEST_CASE("grammar masks and the serve protocol") {
    bs_grammar* g = nullptr;
    REQUIRE(bs_grammar_new(nullptr, &g) == BS_OK);
    auto serve = [&](const char* line) {
      char* out = nullptr;
      REQUIRE(bs_grammar_serve_line(g, line, &out) == BS_OK);
      return json::parse(take(out));
    };
    CHECK(serve("{\"prefix\":[]}") == json::parse("{\"valid_ids\":[1280]}"));
    CHECK(serve("{\"prefix\":[1280]}") == json::parse("{\"valid_ids\":[1282]}"));
    CHECK(serve("{\"prefix\":[1280,1282,1283,1,2,3]}").at("valid_ids") == json::array({1284, 1285, 1286}));
    const auto e = serve("{\"prefix\":[1280,1282,1281]}");
    CHECK(e.at("error").at("pos") == 2);
    CHECK(e.at("error").at("expected") == json::array({1283}));
    CHECK(serve("not json").at("error").at("pos") == -1);
    CHECK(serve("{\"prefix\":[]}").contains("valid_ids"));

    const int32_t prefix[] = {1280, 1282};
    int32_t* ids = nullptr;
    size_t n = 0;
    REQUIRE(bs_grammar_valid_ids(g, prefix, 2, &ids, &n) == BS_OK);
    REQUIRE(n == 1);
    CHECK(ids[0] == 1283);
    bs_tokens_free(ids);
    bs_grammar_free(g);
  }

  TEST_CASE("corpus, codebook, round trip and metrics") {
    Corpus c(12, 5);
    REQUIRE(c.models.size() == 12);
    char* s = nullptr;
    REQUIRE(bs_corpus_spec_json(c.c, 0, &s) == BS_OK);
    CHECK(json::parse(take(s)).contains("family"));
    REQUIRE(bs_corpus_edge_mix_json(c.c, &s) == BS_OK);
    CHECK(json::parse(take(s)).contains("complex"));

    bs_codebook* book = nullptr;
    REQUIRE(bs_codebook_fit(c.models.data(), c.models.size(), 1, nullptr, &book) == BS_OK);
    const auto path = (std::filesystem::temp_directory_path() / "brepseq_capi_book.bin").string();
    REQUIRE(bs_codebook_save(book, path.c_str()) == BS_OK);
    bs_codebook* loaded = nullptr;
    REQUIRE(bs_codebook_load(path.c_str(), &loaded) == BS_OK);

    REQUIRE(bs_roundtrip_corpus(c.models.data(), c.models.size(), loaded, nullptr, 0, &s) == BS_OK);
    const auto rt = json::parse(take(s));
    CHECK(rt.at("passed") == 12);
    CHECK(rt.at("models").size() == 12);

    REQUIRE(bs_metrics(c.models.data(), 4, c.models.data(), 4, nullptr, 2, 64, &s) == BS_OK);
    const auto mj = json::parse(take(s));
    CHECK(mj.at("cov_cd") == 100.0);
    CHECK(mj.at("mmd_emd") == 0.0);

    REQUIRE(bs_prior(c.models[0], nullptr, nullptr, &s) == BS_OK);
    CHECK(json::parse(take(s)).at("faces").size() > 0);

    bs_model* noisy = nullptr;
    REQUIRE(bs_model_perturb(c.models[0], 0.0, 3, &noisy) == BS_OK);
    char* a = nullptr;
    char* b = nullptr;
    bs_model_to_json(noisy, &a);
    bs_model_to_json(c.models[0], &b);
    CHECK(take(a) == take(b));
    bs_model_free(noisy);

    bs_codebook_free(loaded);
    bs_codebook_free(book);
  }
}
