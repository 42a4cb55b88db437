#pragma once

#include <string>
#include <vector>

#include "brepseq/model.hpp"

namespace brepseq {

struct EdgeRef {
  int face = 0;
  int loop = 0;
  int position = 0;
  bool reversed = false;  // traversed end -> start relative to the merged edge
};

struct GraphEdge {
  int v0 = 0;
  int v1 = 0;
  EdgeKind kind = EdgeKind::Line;
  std::vector<Vec3> samples;  // v0 -> v1
  std::vector<EdgeRef> refs;
};

struct GraphLoop {
  std::vector<int> vertices;
  std::vector<int> edges;
  bool is_outer = false;
};

struct GraphFace {
  std::vector<GraphLoop> loops;
};

/// Global V-E-F structure recovered from a per-face model.
struct BrepGraph {
  std::vector<Vec3> vertices;
  std::vector<QPos> qpos;
  std::vector<GraphEdge> edges;
  std::vector<GraphFace> faces;
  std::vector<std::vector<int>> vertex_edges;
  std::vector<std::vector<int>> edge_faces;
};

/// Merges vertices with identical qpos, then consolidates edge occurrences
/// with the same merged endpoints whose 32-point samples agree within
/// eps_edge (max pointwise distance, either direction). Vertex ids follow
/// (z, y, x) qpos order and edges are sorted, so the result does not depend
/// on face order.
BrepGraph merge_wireframe(const WireframeModel& pre_merge, double eps_edge = 4.0 / 1023.0,
                          int samples = 32);

struct Defect {
  std::string kind;  // boundary_edge, non_manifold_edge, degenerate_edge, open_loop, empty_face
  std::vector<int> ids;

  friend bool operator==(const Defect&, const Defect&) = default;
};

struct ValidityReport {
  bool valid = false;
  std::vector<Defect> defects;
  int cc = 0;
};

ValidityReport validity_check(const BrepGraph& graph);

/// E - V + 2P over the vertex-edge graph.
int cyclomatic_complexity(const BrepGraph& graph);

std::string validity_to_json(const ValidityReport& report);

/// Vertices, edges (endpoints, kind, samples, refs) and face loops.
std::string graph_to_json(const BrepGraph& graph);

/// Same vertex qpos, same edges (endpoints, kind, samples within tol) and the
/// same faces as sets of cyclic vertex sequences.
bool graphs_isomorphic(const BrepGraph& a, const BrepGraph& b, double sample_tol,
                       std::string* why = nullptr);

}  // namespace brepseq
