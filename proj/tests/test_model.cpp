#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "brepseq/error.hpp"
#include "brepseq/model.hpp"
#include "brepseq/pipeline.hpp"
#include "brepseq/topology.hpp"
#include "fixtures.hpp"

using namespace brepseq;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename Fn>
std::string error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("core-model") {
  TEST_CASE("cube fixture loads with 8 vertices, 6 faces, 12 distinct edges") {
    const WireframeModel m = load_model(BREPSEQ_TEST_DATA "/cube.json");
    CHECK(m.vertices.size() == 8);
    CHECK(m.faces.size() == 6);
    const Encoded enc = encode_model(m, nullptr);
    CHECK(merge_wireframe(enc.canonical).edges.size() == 12);
  }

  TEST_CASE("unknown vertex is rejected") {
    WireframeModel m = fixtures::square();
    m.faces[0].loops[0].entries[2].vertex = 9;
    CHECK(error_of([&] { validate_model(m); }).find("unknown vertex") != std::string::npos);
    CHECK(error_of([&] { model_from_json(model_to_json(m)); }).find("unknown vertex") != std::string::npos);
  }

  TEST_CASE("71 faces exceed the face limit") {
    WireframeModel m = fixtures::square();
    const Face f = m.faces[0];
    m.faces.assign(71, f);
    CHECK(error_of([&] { validate_model(m); }).find("face limit exceeded") != std::string::npos);
    m.faces.resize(70);
    CHECK_NOTHROW(validate_model(m));
  }

  TEST_CASE("JSON round trip, determinism and locality") {
    const WireframeModel m = fixtures::plate_with_square_hole();
    const std::string a = model_to_json(m);
    CHECK(model_from_json(a) == m);
    CHECK(model_to_json(model_from_json(a)) == a);

    const auto dir = std::filesystem::temp_directory_path() / "brepseq_model_test";
    std::filesystem::create_directories(dir);
    save_model(m, (dir / "a.json").string());
    save_model(m, (dir / "b.json").string());
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));

    WireframeModel edited = m;
    edited.vertices[5].position.y = 2.5;
    WireframeModel back = model_from_json(model_to_json(edited));
    CHECK(back.vertices[5].position.y == 2.5);
    back.vertices[5].position.y = 3;
    CHECK(back == m);
  }

  TEST_CASE("normalization maps the bbox into [-1,1]^3 isotropically") {
    WireframeModel m = fixtures::cube(2.0);
    Normalized n = normalize_model(m);
    CHECK(n.transform.scale == doctest::Approx(1.0));
    CHECK(n.transform.offset.x == doctest::Approx(-1.0));
    CHECK(n.transform.offset.y == doctest::Approx(-1.0));
    CHECK(n.transform.offset.z == doctest::Approx(-1.0));
    Aabb b = n.model.bounds();
    CHECK(b.lo.x == doctest::Approx(-1));
    CHECK(b.hi.z == doctest::Approx(1));

    for (auto& v : m.vertices) v.position.x *= 2;  // [0,4]x[0,2]x[0,2]
    b = normalize_model(m).model.bounds();
    CHECK(b.lo.x == doctest::Approx(-1));
    CHECK(b.hi.x == doctest::Approx(1));
    CHECK(b.lo.y == doctest::Approx(-0.5));
    CHECK(b.hi.y == doctest::Approx(0.5));
    CHECK(b.hi.z == doctest::Approx(0.5));

    const Normalized again = normalize_model(normalize_model(fixtures::cube()).model);
    CHECK(again.transform.is_identity());
  }
}
