#include <doctest.h>

#include <json.hpp>

#include "brepseq/grammar.hpp"
#include "brepseq/pipeline.hpp"
#include "brepseq/topology.hpp"
#include "fixtures.hpp"

using namespace brepseq;

namespace {

BrepGraph merged(const WireframeModel& m) {
  return merge_wireframe(quantize_vertices(normalize_model(m).model).model);
}

BrepGraph cube_roundtrip() {
  return merge_wireframe(parse_tokens(encode_model(fixtures::cube(), nullptr).tokens, nullptr));
}

// Two unit squares sharing the edge x = 1, drawn as an arc in both faces with
// midpoints `cells` quantization cells apart.
WireframeModel shared_arc(double cells) {
  WireframeModel m;
  for (Vec3 p : {Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{1, 1, 0}, Vec3{0, 1, 0}, Vec3{2, 0, 0}, Vec3{2, 1, 0}})
    m.vertices.push_back({p * 0.5 - Vec3{0.5, 0.25, 0}, {}});
  const double cell = 2.0 / 1023;
  const Vec3 mid = Vec3{1.2, 0.5, 0} * 0.5 - Vec3{0.5, 0.25, 0};
  m.faces = {fixtures::face_of({fixtures::loop_of({0, 1, 2, 3}, true, {Edge::line(), Edge::arc(mid)})}, {0, 0, 1}),
             fixtures::face_of({fixtures::loop_of({1, 4, 5, 2}, true,
                                                  {Edge::line(), Edge::line(), Edge::line(),
                                                   Edge::arc(mid + Vec3{cells * cell, 0, 0})})},
                               {0, 0, 1})};
  return m;
}

int refs_of_arc(const BrepGraph& g) {
  int arcs = 0;
  for (const auto& e : g.edges) arcs += e.kind == EdgeKind::Arc;
  return arcs;
}

}  // namespace

TEST_SUITE("topology") {
  TEST_CASE("cube round trip: 8 vertices, 12 edges with two references each") {
    const BrepGraph g = cube_roundtrip();
    CHECK(g.vertices.size() == 8);
    REQUIRE(g.edges.size() == 12);
    for (const auto& e : g.edges) CHECK(e.refs.size() == 2);
    CHECK(g.faces.size() == 6);
    const ValidityReport r = validity_check(g);
    CHECK(r.valid);
    CHECK(r.defects.empty());
    CHECK(r.cc == 6);
  }

  TEST_CASE("edge tolerance: one cell merges, ten cells do not") {
    const BrepGraph near = merge_wireframe(quantize_vertices(shared_arc(1)).model);
    CHECK(refs_of_arc(near) == 1);
    CHECK(near.edges.size() == 7);
    const BrepGraph far = merge_wireframe(quantize_vertices(shared_arc(10)).model);
    CHECK(refs_of_arc(far) == 2);
    CHECK(far.edges.size() == 8);
    int single = 0;
    for (const auto& e : far.edges)
      if (e.kind == EdgeKind::Arc) single += e.refs.size() == 1;
    CHECK(single == 2);
  }

  TEST_CASE("deleting a cube face leaves four boundary edges") {
    WireframeModel m = parse_tokens(encode_model(fixtures::cube(), nullptr).tokens, nullptr);
    m.faces.erase(m.faces.begin() + 2);
    const BrepGraph g = merge_wireframe(m);
    const ValidityReport r = validity_check(g);
    CHECK_FALSE(r.valid);
    REQUIRE(r.defects.size() == 4);
    for (const auto& d : r.defects) {
      CHECK(d.kind == "boundary_edge");
      REQUIRE(d.ids.size() == 1);
      CHECK(g.edges[static_cast<std::size_t>(d.ids[0])].refs.size() == 1);
    }
  }

  TEST_CASE("single face is an open shell") {
    const BrepGraph g = merged(fixtures::square());
    const ValidityReport r = validity_check(g);
    CHECK_FALSE(r.valid);
    CHECK(r.defects.size() == 4);
    CHECK(r.cc == 2);
  }

  TEST_CASE("cyclomatic complexity") {
    CHECK(cyclomatic_complexity(cube_roundtrip()) == 6);
    CHECK(cyclomatic_complexity(merged(fixtures::square())) == 2);
    CHECK(cyclomatic_complexity(merged(fixtures::two_squares())) == 4);
  }

  TEST_CASE("validity report JSON") {
    const auto j = nlohmann::json::parse(validity_to_json(validity_check(merged(fixtures::square()))));
    CHECK(j.at("valid") == false);
    CHECK(j.at("cc") == 2);
    CHECK(j.at("defects")[0].at("kind") == "boundary_edge");
    CHECK(j.at("defects")[0].at("ids").is_array());
  }

  TEST_CASE("isomorphism ignores face order and detects changes") {
    WireframeModel m = parse_tokens(encode_model(fixtures::cube(), nullptr).tokens, nullptr);
    const BrepGraph a = merge_wireframe(m);
    std::reverse(m.faces.begin(), m.faces.end());
    CHECK(graphs_isomorphic(a, merge_wireframe(m), 1e-9));
    m.faces.pop_back();
    std::string why;
    CHECK_FALSE(graphs_isomorphic(a, merge_wireframe(m), 1e-9, &why));
    CHECK_FALSE(why.empty());
  }
}
