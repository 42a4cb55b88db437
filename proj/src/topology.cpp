#include "brepseq/topology.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

#include <json.hpp>

#include "brepseq/error.hpp"
#include "brepseq/quantizer.hpp"

namespace brepseq {

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

double max_pointwise(const std::vector<Vec3>& a, const std::vector<Vec3>& b, bool reverse) {
  double m = 0;
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, distance(a[i], b[reverse ? n - 1 - i : i]));
  return m;
}

double edge_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  return std::min(max_pointwise(a, b, false), max_pointwise(a, b, true));
}

bool samples_less(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), [](const Vec3& p, const Vec3& q) {
    return std::tie(p.x, p.y, p.z) < std::tie(q.x, q.y, q.z);
  });
}

struct Occurrence {
  int v0, v1;
  EdgeKind kind;
  std::vector<Vec3> samples;  // v0 -> v1
  EdgeRef ref;
};

}  // namespace

BrepGraph merge_wireframe(const WireframeModel& pre, double eps_edge, int samples) {
  if (!pre.quantized()) throw Error(ErrorCode::kInvalidArgument, "merge: every vertex needs qpos");
  if (samples < 2) throw Error(ErrorCode::kInvalidArgument, "merge: need at least 2 samples");
  BrepGraph g;

  std::vector<QPos> distinct;
  for (const auto& v : pre.vertices) distinct.push_back(*v.qpos);
  std::sort(distinct.begin(), distinct.end(), [](const QPos& a, const QPos& b) {
    return std::tie(a[2], a[1], a[0]) < std::tie(b[2], b[1], b[0]);
  });
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::map<QPos, int> id_of;
  for (std::size_t i = 0; i < distinct.size(); ++i) {
    id_of[distinct[i]] = static_cast<int>(i);
    g.qpos.push_back(distinct[i]);
    g.vertices.push_back(dequantize_point(distinct[i], 10));
  }
  auto merged = [&](int v) { return id_of.at(*pre.vertices[static_cast<std::size_t>(v)].qpos); };

  std::vector<Occurrence> occ;
  for (std::size_t f = 0; f < pre.faces.size(); ++f) {
    const Face& face = pre.faces[f];
    for (std::size_t l = 0; l < face.loops.size(); ++l) {
      const Loop& loop = face.loops[l];
      for (std::size_t k = 0; k < loop.entries.size(); ++k) {
        const auto [a, b] = loop.edge_endpoints(k);
        Occurrence o{merged(a), merged(b), loop.entries[k].edge.kind, {}, {}};
        o.samples = sample_edge_points(loop.entries[k].edge, g.vertices[static_cast<std::size_t>(o.v0)],
                                       g.vertices[static_cast<std::size_t>(o.v1)], samples);
        o.ref = {static_cast<int>(f), static_cast<int>(l), static_cast<int>(k), false};
        if (o.v0 > o.v1) {
          std::swap(o.v0, o.v1);
          std::reverse(o.samples.begin(), o.samples.end());
          o.ref.reversed = true;
        }
        occ.push_back(std::move(o));
      }
    }
  }

  UnionFind uf(occ.size());
  std::map<std::pair<int, int>, std::vector<std::size_t>> by_ends;
  for (std::size_t i = 0; i < occ.size(); ++i) by_ends[{occ[i].v0, occ[i].v1}].push_back(i);
  for (const auto& [ends, members] : by_ends)
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t j = i + 1; j < members.size(); ++j)
        if (edge_distance(occ[members[i]].samples, occ[members[j]].samples) <= eps_edge)
          uf.unite(members[i], members[j]);

  // The representative is the lexicographically smallest member, so edge
  // geometry and ordering do not depend on face order.
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < occ.size(); ++i) groups[uf.find(i)].push_back(i);
  struct Group {
    std::size_t rep;
    std::vector<std::size_t> members;
  };
  std::vector<Group> ordered;
  for (auto& [root, members] : groups) {
    std::size_t rep = members.front();
    for (std::size_t m : members) {
      const auto& a = occ[m];
      const auto& r = occ[rep];
      if (a.kind < r.kind || (a.kind == r.kind && samples_less(a.samples, r.samples))) rep = m;
    }
    ordered.push_back({rep, members});
  }
  std::sort(ordered.begin(), ordered.end(), [&](const Group& x, const Group& y) {
    const auto& a = occ[x.rep];
    const auto& b = occ[y.rep];
    if (std::tie(a.v0, a.v1, a.kind) != std::tie(b.v0, b.v1, b.kind))
      return std::tie(a.v0, a.v1, a.kind) < std::tie(b.v0, b.v1, b.kind);
    return samples_less(a.samples, b.samples);
  });

  std::vector<int> edge_of(occ.size());
  for (std::size_t e = 0; e < ordered.size(); ++e) {
    const auto& rep = occ[ordered[e].rep];
    GraphEdge edge{rep.v0, rep.v1, rep.kind, rep.samples, {}};
    for (std::size_t m : ordered[e].members) {
      edge.refs.push_back(occ[m].ref);
      edge_of[m] = static_cast<int>(e);
    }
    std::sort(edge.refs.begin(), edge.refs.end(), [](const EdgeRef& a, const EdgeRef& b) {
      return std::tie(a.face, a.loop, a.position) < std::tie(b.face, b.loop, b.position);
    });
    g.edges.push_back(std::move(edge));
  }

  std::size_t cursor = 0;
  for (const Face& face : pre.faces) {
    GraphFace gf;
    for (const Loop& loop : face.loops) {
      GraphLoop gl;
      gl.is_outer = loop.is_outer;
      for (const auto& entry : loop.entries) {
        gl.vertices.push_back(merged(entry.vertex));
        gl.edges.push_back(edge_of[cursor++]);
      }
      gf.loops.push_back(std::move(gl));
    }
    g.faces.push_back(std::move(gf));
  }

  g.vertex_edges.assign(g.vertices.size(), {});
  g.edge_faces.assign(g.edges.size(), {});
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto& edge = g.edges[e];
    g.vertex_edges[static_cast<std::size_t>(edge.v0)].push_back(static_cast<int>(e));
    if (edge.v1 != edge.v0) g.vertex_edges[static_cast<std::size_t>(edge.v1)].push_back(static_cast<int>(e));
    for (const auto& r : edge.refs) g.edge_faces[e].push_back(r.face);
  }
  return g;
}

int cyclomatic_complexity(const BrepGraph& g) {
  UnionFind uf(g.vertices.size());
  for (const auto& e : g.edges) uf.unite(static_cast<std::size_t>(e.v0), static_cast<std::size_t>(e.v1));
  int components = 0;
  for (std::size_t v = 0; v < g.vertices.size(); ++v)
    if (uf.find(v) == v) ++components;
  return static_cast<int>(g.edges.size()) - static_cast<int>(g.vertices.size()) + 2 * components;
}

ValidityReport validity_check(const BrepGraph& g) {
  ValidityReport r;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto& edge = g.edges[e];
    const int id = static_cast<int>(e);
    if (edge.refs.size() == 1) r.defects.push_back({"boundary_edge", {id}});
    else if (edge.refs.size() > 2) r.defects.push_back({"non_manifold_edge", {id}});
    if (edge.v0 == edge.v1 && edge.kind != EdgeKind::Complex) r.defects.push_back({"degenerate_edge", {id}});
  }
  for (std::size_t f = 0; f < g.faces.size(); ++f) {
    const auto& face = g.faces[f];
    if (face.loops.empty()) {
      r.defects.push_back({"empty_face", {static_cast<int>(f)}});
      continue;
    }
    for (std::size_t l = 0; l < face.loops.size(); ++l) {
      const auto& loop = face.loops[l];
      bool closed = loop.vertices.size() >= 2;
      for (std::size_t k = 0; closed && k < loop.edges.size(); ++k) {
        const auto& edge = g.edges[static_cast<std::size_t>(loop.edges[k])];
        const int a = loop.vertices[k];
        const int b = loop.vertices[(k + 1) % loop.vertices.size()];
        closed = (edge.v0 == a && edge.v1 == b) || (edge.v0 == b && edge.v1 == a);
      }
      if (!closed) r.defects.push_back({"open_loop", {static_cast<int>(f), static_cast<int>(l)}});
    }
  }
  std::stable_sort(r.defects.begin(), r.defects.end(), [](const Defect& a, const Defect& b) {
    return std::tie(a.kind, a.ids) < std::tie(b.kind, b.ids);
  });
  r.valid = r.defects.empty();
  r.cc = cyclomatic_complexity(g);
  return r;
}

std::string validity_to_json(const ValidityReport& report) {
  nlohmann::json defects = nlohmann::json::array();
  for (const auto& d : report.defects) defects.push_back({{"kind", d.kind}, {"ids", d.ids}});
  return nlohmann::json{{"valid", report.valid}, {"defects", defects}, {"cc", report.cc}}.dump() + "\n";
}

std::string graph_to_json(const BrepGraph& graph) {
  using nlohmann::json;
  auto point = [](const Vec3& p) { return json::array({p.x, p.y, p.z}); };
  json vertices = json::array(), edges = json::array(), faces = json::array();
  for (std::size_t i = 0; i < graph.vertices.size(); ++i)
    vertices.push_back({{"position", point(graph.vertices[i])}, {"qpos", graph.qpos[i]}});
  for (const auto& e : graph.edges) {
    json samples = json::array(), refs = json::array();
    for (const auto& p : e.samples) samples.push_back(point(p));
    for (const auto& r : e.refs)
      refs.push_back({{"face", r.face}, {"loop", r.loop}, {"position", r.position}, {"reversed", r.reversed}});
    edges.push_back({{"v0", e.v0}, {"v1", e.v1}, {"kind", to_string(e.kind)}, {"samples", samples}, {"refs", refs}});
  }
  for (const auto& f : graph.faces) {
    json loops = json::array();
    for (const auto& l : f.loops)
      loops.push_back({{"outer", l.is_outer}, {"vertices", l.vertices}, {"edges", l.edges}});
    faces.push_back({{"loops", loops}});
  }
  return json{{"vertices", vertices}, {"edges", edges}, {"faces", faces}}.dump() + "\n";
}

namespace {

using LoopKey = std::vector<std::pair<int, int>>;

LoopKey loop_key(const GraphLoop& loop, const std::vector<int>& edge_map) {
  const std::size_t n = loop.vertices.size();
  LoopKey best;
  for (std::size_t r = 0; r < n; ++r) {
    LoopKey k;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = (r + i) % n;
      k.emplace_back(loop.vertices[j], edge_map[static_cast<std::size_t>(loop.edges[j])]);
    }
    if (r == 0 || k < best) best = std::move(k);
  }
  return best;
}

using FaceKey = std::pair<LoopKey, std::vector<LoopKey>>;

std::vector<FaceKey> face_keys(const BrepGraph& g, const std::vector<int>& edge_map) {
  std::vector<FaceKey> out;
  for (const auto& face : g.faces) {
    FaceKey k;
    for (std::size_t l = 0; l < face.loops.size(); ++l) {
      if (l == 0) k.first = loop_key(face.loops[l], edge_map);
      else k.second.push_back(loop_key(face.loops[l], edge_map));
    }
    std::sort(k.second.begin(), k.second.end());
    out.push_back(std::move(k));
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool fail(std::string* why, const std::string& msg) {
  if (why) *why = msg;
  return false;
}

}  // namespace

bool graphs_isomorphic(const BrepGraph& a, const BrepGraph& b, double tol, std::string* why) {
  if (a.qpos != b.qpos)
    return fail(why, "vertex sets differ (" + std::to_string(a.qpos.size()) + " vs " +
                         std::to_string(b.qpos.size()) + ")");
  if (a.edges.size() != b.edges.size())
    return fail(why, "edge counts differ (" + std::to_string(a.edges.size()) + " vs " +
                         std::to_string(b.edges.size()) + ")");
  if (a.faces.size() != b.faces.size()) return fail(why, "face counts differ");

  std::vector<int> identity(a.edges.size());
  std::iota(identity.begin(), identity.end(), 0);
  std::vector<int> b_to_a(b.edges.size(), -1);
  std::vector<bool> used(a.edges.size(), false);
  for (std::size_t j = 0; j < b.edges.size(); ++j) {
    const auto& eb = b.edges[j];
    for (std::size_t i = 0; i < a.edges.size(); ++i) {
      const auto& ea = a.edges[i];
      if (used[i] || ea.v0 != eb.v0 || ea.v1 != eb.v1 || ea.kind != eb.kind) continue;
      if (edge_distance(ea.samples, eb.samples) > tol) continue;
      used[i] = true;
      b_to_a[j] = static_cast<int>(i);
      break;
    }
    if (b_to_a[j] < 0)
      return fail(why, "edge " + std::to_string(j) + " (" + std::to_string(eb.v0) + "-" +
                           std::to_string(eb.v1) + ", " + to_string(eb.kind) + ") has no counterpart");
  }
  if (face_keys(a, identity) != face_keys(b, b_to_a)) return fail(why, "face boundaries differ");
  return true;
}

}  // namespace brepseq
