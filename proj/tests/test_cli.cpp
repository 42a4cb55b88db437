#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "brepseq/brepseq.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string("\"") + BREPSEQ_CLI + "\" " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const char* name) {
  const fs::path d = fs::temp_directory_path() / "brepseq_cli_test" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// In-process answer for one prefix, shaped like a serve response.
json expected_response(const bs_grammar* g, const std::vector<int32_t>& prefix) {
  int32_t* ids = nullptr;
  std::size_t n = 0;
  const bs_status s = bs_grammar_valid_ids(g, prefix.data(), prefix.size(), &ids, &n);
  if (s == BS_OK) {
    json out{{"valid_ids", std::vector<int32_t>(ids, ids + n)}};
    bs_tokens_free(ids);
    return out;
  }
  const json e = json::parse(bs_last_error_json());
  return json{{"error", {{"pos", e.at("pos")}, {"expected", e.at("expected")}}}};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit with 2") {
    CHECK(run("").code == 2);
    CHECK(run("frobnicate").code == 2);
    CHECK(run("encode --model /nonexistent.json").code == 2);
    CHECK(run("synth --count 3").code == 2);
    CHECK(run("merge --model " BREPSEQ_TEST_DATA "/cube.json --bogus").code == 2);
  }

  TEST_CASE("encode the cube, decode and merge") {
    const fs::path d = scratch("cube");
    const Run enc = run("encode --model " BREPSEQ_TEST_DATA "/cube.json --out " + (d / "t.json").string() +
                        " --indices " + (d / "i.json").string());
    REQUIRE(enc.code == 0);
    const json tokens = json::parse(slurp(d / "t.json"));
    CHECK(tokens.at("tokens").size() == 110);
    CHECK(json::parse(slurp(d / "i.json")).at("indices").size() == 110);

    REQUIRE(run("decode --tokens " + (d / "t.json").string() + " --out " + (d / "m.json").string()).code == 0);
    const Run merged = run("merge --model " + (d / "m.json").string());
    CHECK(merged.code == 0);

    std::ofstream(d / "bad.json") << "{\"tokens\":[1280,1282,1281]}";
    CHECK(run("decode --tokens " + (d / "bad.json").string()).code == 1);
  }

  TEST_CASE("corpus pipelines are reproducible") {
    const fs::path d = scratch("corpus");
    REQUIRE(run("synth --count 8 --seed 3 --out " + (d / "a").string()).code == 0);
    REQUIRE(run("synth --count 8 --seed 3 --out " + (d / "b").string()).code == 0);
    const json manifest = json::parse(slurp(d / "a" / "manifest.json"));
    REQUIRE(manifest.at("models").size() == 8);
    for (const auto& m : manifest.at("models")) {
      const std::string f = m.at("file");
      CHECK(slurp(d / "a" / f) == slurp(d / "b" / f));
    }

    const Run rt = run("roundtrip --corpus " + (d / "a").string() + " --report " + (d / "rt.json").string());
    CHECK(rt.code == 0);
    CHECK(json::parse(slurp(d / "rt.json")).at("passed") == 8);

    REQUIRE(run("fit-codebook --corpus " + (d / "a").string() + " --seed 1 --out " + (d / "book.bin").string()).code == 0);
    REQUIRE(run("encode --corpus " + (d / "a").string() + " --codebook " + (d / "book.bin").string() + " --out " +
                (d / "tok").string())
                .code == 0);
    REQUIRE(run("prior --corpus " + (d / "a").string() + " --out " + (d / "grids").string()).code == 0);
    CHECK(fs::exists(d / "grids" / "model_00000.grids.json"));

    REQUIRE(run("metrics --generated " + (d / "a").string() + " --reference " + (d / "b").string() +
                " --emd-points 32 --report " + (d / "metrics.json").string())
                .code == 0);
    const json mj = json::parse(slurp(d / "metrics.json"));
    CHECK(mj.at("cov_cd") == 100.0);
    CHECK(mj.at("mmd_cd") == 0.0);
    CHECK(mj.at("jsd_cd_proxy") == 0.0);
  }

  TEST_CASE("grammar-serve agrees with the in-process mask on fuzzed prefixes") {
    bs_grammar* g = nullptr;
    REQUIRE(bs_grammar_new(nullptr, &g) == BS_OK);
    std::mt19937 rng(17);
    std::vector<std::vector<int32_t>> prefixes;
    for (int t = 0; t < 10000; ++t) {
      std::vector<int32_t> p;
      const std::size_t len = rng() % 60;
      while (p.size() < len) {
        int32_t* ids = nullptr;
        std::size_t n = 0;
        if (bs_grammar_valid_ids(g, p.data(), p.size(), &ids, &n) != BS_OK || n == 0) break;
        p.push_back(ids[rng() % n]);
        bs_tokens_free(ids);
      }
      if (!p.empty() && rng() % 2) p[rng() % p.size()] = static_cast<int32_t>(rng() % 1287);
      prefixes.push_back(p);
    }

    const fs::path d = scratch("serve");
    {
      std::ofstream req(d / "req.jsonl");
      for (const auto& p : prefixes) req << json{{"prefix", p}}.dump() << "\n";
      req << "not json\n";
      req << "{\"prefix\":[]}\n";
    }
    const Run r = run("grammar-serve < " + (d / "req.jsonl").string());
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string line;
    std::size_t k = 0, mismatches = 0;
    while (k < prefixes.size() && std::getline(lines, line)) {
      if (json::parse(line) != expected_response(g, prefixes[k])) ++mismatches;
      ++k;
    }
    CHECK(k == prefixes.size());
    CHECK(mismatches == 0);
    REQUIRE(std::getline(lines, line));
    CHECK(json::parse(line).at("error").at("pos") == -1);
    REQUIRE(std::getline(lines, line));
    CHECK(json::parse(line) == json::parse("{\"valid_ids\":[1280]}"));
    bs_grammar_free(g);
  }
}
