#pragma once

#include <vector>

#include "brepseq/model.hpp"

namespace fixtures {

using brepseq::Edge;
using brepseq::Face;
using brepseq::Loop;
using brepseq::Vec3;
using brepseq::WireframeModel;

inline Loop loop_of(std::vector<int> ids, bool outer, std::vector<Edge> edges = {}) {
  Loop l;
  l.is_outer = outer;
  for (std::size_t i = 0; i < ids.size(); ++i)
    l.entries.push_back({ids[i], i < edges.size() ? edges[i] : Edge::line()});
  return l;
}

inline Face face_of(std::vector<Loop> loops, Vec3 normal) {
  Face f;
  f.loops = std::move(loops);
  f.normal_hint = normal;
  return f;
}

// Unit cube [0,1]^3, every loop CCW seen from outside.
inline WireframeModel cube(double side = 1.0) {
  WireframeModel m;
  for (int i = 0; i < 8; ++i)
    m.vertices.push_back({{side * (i & 1), side * ((i >> 1) & 1), side * ((i >> 2) & 1)}, {}});
  m.faces = {
      face_of({loop_of({0, 2, 3, 1}, true)}, {0, 0, -1}), face_of({loop_of({4, 5, 7, 6}, true)}, {0, 0, 1}),
      face_of({loop_of({0, 1, 5, 4}, true)}, {0, -1, 0}), face_of({loop_of({2, 6, 7, 3}, true)}, {0, 1, 0}),
      face_of({loop_of({0, 4, 6, 2}, true)}, {-1, 0, 0}), face_of({loop_of({1, 3, 7, 5}, true)}, {1, 0, 0}),
  };
  return m;
}

// One square face in z = 0, optionally with an arc replacing the first edge.
inline WireframeModel square(bool first_edge_arc = false) {
  WireframeModel m;
  m.vertices = {{{0, 0, 0}, {}}, {{1, 0, 0}, {}}, {{1, 1, 0}, {}}, {{0, 1, 0}, {}}};
  std::vector<Edge> edges;
  if (first_edge_arc) edges.push_back(Edge::arc({0.5, -0.2, 0}));
  m.faces = {face_of({loop_of({0, 1, 2, 3}, true, edges)}, {0, 0, 1})};
  return m;
}

inline WireframeModel plate_with_square_hole() {
  WireframeModel m;
  m.vertices = {{{0, 0, 0}, {}},     {{4, 0, 0}, {}},     {{4, 4, 0}, {}},     {{0, 4, 0}, {}},
                {{1, 1, 0}, {}},     {{1, 3, 0}, {}},     {{3, 3, 0}, {}},     {{3, 1, 0}, {}}};
  m.faces = {face_of({loop_of({0, 1, 2, 3}, true), loop_of({4, 5, 6, 7}, false)}, {0, 0, 1})};
  return m;
}

inline WireframeModel two_squares() {
  WireframeModel m;
  for (double x0 : {0.0, 3.0})
    for (Vec3 p : {Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{1, 1, 0}, Vec3{0, 1, 0}})
      m.vertices.push_back({{p.x + x0, p.y, p.z}, {}});
  m.faces = {face_of({loop_of({0, 1, 2, 3}, true)}, {0, 0, 1}), face_of({loop_of({4, 5, 6, 7}, true)}, {0, 0, 1})};
  return m;
}

}  // namespace fixtures
