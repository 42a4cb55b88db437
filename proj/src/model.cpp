#include "brepseq/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "brepseq/error.hpp"
#include "brepseq/quantizer.hpp"

namespace brepseq {

using nlohmann::json;

const char* to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Line: return "line";
    case EdgeKind::Arc: return "arc";
    case EdgeKind::Complex: return "complex";
  }
  return "?";
}

std::optional<EdgeKind> edge_kind_from_string(const std::string& s) {
  if (s == "line") return EdgeKind::Line;
  if (s == "arc") return EdgeKind::Arc;
  if (s == "complex") return EdgeKind::Complex;
  return std::nullopt;
}

const char* to_string(Primitive p) {
  switch (p) {
    case Primitive::Plane: return "plane";
    case Primitive::Cylinder: return "cylinder";
    case Primitive::Sphere: return "sphere";
    case Primitive::Complex: return "complex";
  }
  return "?";
}

std::optional<Primitive> primitive_from_string(const std::string& s) {
  if (s == "plane") return Primitive::Plane;
  if (s == "cylinder") return Primitive::Cylinder;
  if (s == "sphere") return Primitive::Sphere;
  if (s == "complex") return Primitive::Complex;
  return std::nullopt;
}

bool operator==(const Vertex& a, const Vertex& b) {
  return a.position == b.position && a.qpos == b.qpos;
}

bool operator==(const WireframeModel& a, const WireframeModel& b) {
  return a.vertices == b.vertices && a.faces == b.faces && a.metadata == b.metadata;
}

bool WireframeModel::quantized() const {
  for (const auto& v : vertices)
    if (!v.qpos) return false;
  return true;
}

Aabb WireframeModel::bounds() const {
  Aabb box;
  for (const auto& v : vertices) box.extend(v.position);
  for (const auto& f : faces)
    for (const auto& l : f.loops)
      for (const auto& e : l.entries) {
        if (e.edge.mid) box.extend(*e.edge.mid);
        for (const auto& p : e.edge.samples) box.extend(p);
      }
  return box;
}

Vec3 vertex_point(const WireframeModel& model, int id, int bits) {
  const Vertex& v = model.vertices.at(static_cast<std::size_t>(id));
  return v.qpos ? dequantize_point(*v.qpos, bits) : v.position;
}

namespace {

std::string where(std::size_t f, std::size_t l) {
  return "face " + std::to_string(f) + " loop " + std::to_string(l);
}

bool finite(const Vec3& p) { return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z); }

void validate_edge(const WireframeModel& m, const Loop& loop, std::size_t f, std::size_t l,
                   std::size_t k, const Config& config) {
  const Edge& e = loop.entries[k].edge;
  const auto [a_id, b_id] = loop.edge_endpoints(k);
  const Vec3 a = m.vertices[static_cast<std::size_t>(a_id)].position;
  const Vec3 b = m.vertices[static_cast<std::size_t>(b_id)].position;
  const std::string ctx = where(f, l) + " entry " + std::to_string(k);
  switch (e.kind) {
    case EdgeKind::Line:
      if (e.mid || !e.samples.empty() || e.curve_tokens)
        throw Error(ErrorCode::kInvariant, ctx + ": line edge carries geometry payload");
      break;
    case EdgeKind::Arc: {
      if (!e.mid) throw Error(ErrorCode::kInvariant, ctx + ": arc edge without midpoint");
      if (!e.samples.empty() || e.curve_tokens)
        throw Error(ErrorCode::kInvariant, ctx + ": arc edge carries curve payload");
      if (!finite(*e.mid)) throw Error(ErrorCode::kInvariant, ctx + ": non-finite arc midpoint");
      if (norm(cross(*e.mid - a, b - a)) * 0.5 <= 1e-12)
        throw Error(ErrorCode::kInvariant, ctx + ": arc midpoint collinear with endpoints");
      break;
    }
    case EdgeKind::Complex: {
      if (e.mid) throw Error(ErrorCode::kInvariant, ctx + ": complex edge with midpoint");
      if (static_cast<int>(e.samples.size()) != config.grid_n)
        throw Error(ErrorCode::kInvariant, ctx + ": complex edge needs " +
                                               std::to_string(config.grid_n) + " samples");
      for (const auto& p : e.samples)
        if (!finite(p)) throw Error(ErrorCode::kInvariant, ctx + ": non-finite curve sample");
      if (distance(e.samples.front(), a) > config.eps_endpoint ||
          distance(e.samples.back(), b) > config.eps_endpoint)
        throw Error(ErrorCode::kInvariant, ctx + ": curve samples do not meet the endpoints");
      if (e.curve_tokens) {
        if (static_cast<int>(e.curve_tokens->size()) != config.curve_tokens)
          throw Error(ErrorCode::kInvariant, ctx + ": wrong curve token count");
        for (int t : *e.curve_tokens)
          if (t < 0 || t >= config.codebook_size)
            throw Error(ErrorCode::kInvariant, ctx + ": curve token out of range");
      }
      break;
    }
  }
}

}  // namespace

void validate_model(const WireframeModel& m, const Config& config) {
  if (static_cast<int>(m.faces.size()) > config.max_faces)
    throw Error(ErrorCode::kCapacity, "face limit exceeded (" + std::to_string(m.faces.size()) +
                                          " > " + std::to_string(config.max_faces) + ")");
  const int levels = config.quant_levels();
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    const Vertex& v = m.vertices[i];
    if (!finite(v.position))
      throw Error(ErrorCode::kInvariant, "vertex " + std::to_string(i) + " is not finite");
    if (v.qpos) {
      for (int c : *v.qpos)
        if (c < 0 || c >= levels)
          throw Error(ErrorCode::kInvariant, "vertex " + std::to_string(i) + " qpos out of range");
      if (quantize_point(v.position, config.bits) != *v.qpos)
        throw Error(ErrorCode::kInvariant,
                    "vertex " + std::to_string(i) + " qpos disagrees with its position");
    }
  }
  for (std::size_t f = 0; f < m.faces.size(); ++f) {
    const Face& face = m.faces[f];
    const std::string fctx = "face " + std::to_string(f);
    if (face.loops.empty()) throw Error(ErrorCode::kInvariant, fctx + " has no loops");
    if (static_cast<int>(face.loops.size()) > config.max_loops)
      throw Error(ErrorCode::kCapacity, fctx + ": loop limit exceeded");
    if (!face.loops.front().is_outer)
      throw Error(ErrorCode::kInvariant, fctx + ": first loop must be the outer loop");
    for (std::size_t l = 1; l < face.loops.size(); ++l)
      if (face.loops[l].is_outer)
        throw Error(ErrorCode::kInvariant, fctx + ": more than one outer loop");
    if (!finite(face.normal_hint))
      throw Error(ErrorCode::kInvariant, fctx + ": non-finite normal hint");
    for (std::size_t l = 0; l < face.loops.size(); ++l) {
      const Loop& loop = face.loops[l];
      if (loop.entries.size() < 2)
        throw Error(ErrorCode::kInvariant, where(f, l) + ": loop needs at least 2 entries");
      if (static_cast<int>(loop.entries.size()) > config.max_loop_entries())
        throw Error(ErrorCode::kCapacity, where(f, l) + ": loop entity limit exceeded");
      for (const auto& entry : loop.entries)
        if (entry.vertex < 0 || static_cast<std::size_t>(entry.vertex) >= m.vertices.size())
          throw Error(ErrorCode::kInvariant,
                      where(f, l) + ": unknown vertex " + std::to_string(entry.vertex));
      for (std::size_t k = 0; k < loop.entries.size(); ++k) validate_edge(m, loop, f, l, k, config);
    }
  }
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

json point_json(const Vec3& p) { return json::array({p.x, p.y, p.z}); }

Vec3 point_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3)
    throw Error(ErrorCode::kSchema, path + ": expected [x, y, z]");
  Vec3 p;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::kSchema, path + ": coordinates must be numbers");
    p[i] = j[i].get<double>();
  }
  return p;
}

const json& field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw Error(ErrorCode::kSchema, path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::kSchema, path + ": missing field '" + key + "'");
  return *it;
}

json edge_json(const Edge& e) {
  json j = {{"kind", to_string(e.kind)}};
  if (e.mid) j["mid"] = point_json(*e.mid);
  if (!e.samples.empty()) {
    json s = json::array();
    for (const auto& p : e.samples) s.push_back(point_json(p));
    j["samples"] = std::move(s);
  }
  if (e.curve_tokens) j["tokens"] = *e.curve_tokens;
  return j;
}

Edge edge_from(const json& j, const std::string& path) {
  const json& kind = field(j, "kind", path);
  if (!kind.is_string()) throw Error(ErrorCode::kSchema, path + ".kind: expected a string");
  auto k = edge_kind_from_string(kind.get<std::string>());
  if (!k) throw Error(ErrorCode::kSchema, path + ".kind: unknown edge kind '" +
                                              kind.get<std::string>() + "'");
  Edge e;
  e.kind = *k;
  if (j.contains("mid")) e.mid = point_from(j["mid"], path + ".mid");
  if (j.contains("samples")) {
    const json& s = j["samples"];
    if (!s.is_array()) throw Error(ErrorCode::kSchema, path + ".samples: expected an array");
    for (std::size_t i = 0; i < s.size(); ++i)
      e.samples.push_back(point_from(s[i], path + ".samples[" + std::to_string(i) + "]"));
  }
  if (j.contains("tokens")) {
    const json& t = j["tokens"];
    if (!t.is_array()) throw Error(ErrorCode::kSchema, path + ".tokens: expected an array");
    std::vector<int> tokens;
    for (const auto& x : t) {
      if (!x.is_number_integer())
        throw Error(ErrorCode::kSchema, path + ".tokens: expected integers");
      tokens.push_back(x.get<int>());
    }
    e.curve_tokens = std::move(tokens);
  }
  return e;
}

}  // namespace

std::string model_to_json(const WireframeModel& m) {
  json vertices = json::array();
  for (const auto& v : m.vertices) vertices.push_back(point_json(v.position));
  json faces = json::array();
  for (const auto& f : m.faces) {
    json loops = json::array();
    for (const auto& l : f.loops) {
      json entries = json::array();
      for (const auto& e : l.entries) entries.push_back({{"v", e.vertex}, {"edge", edge_json(e.edge)}});
      loops.push_back({{"outer", l.is_outer}, {"entries", std::move(entries)}});
    }
    json jf = {{"normal_hint", point_json(f.normal_hint)}, {"loops", std::move(loops)}};
    if (f.primitive) jf["primitive"] = to_string(*f.primitive);
    faces.push_back(std::move(jf));
  }
  json j = {{"vertices", std::move(vertices)}, {"faces", std::move(faces)},
            {"metadata", json(m.metadata)}};
  bool any_q = false;
  for (const auto& v : m.vertices) any_q = any_q || v.qpos.has_value();
  if (any_q) {
    json q = json::array();
    for (const auto& v : m.vertices) q.push_back(v.qpos ? json(*v.qpos) : json(nullptr));
    j["qpos"] = std::move(q);
  }
  return j.dump(1) + "\n";
}

WireframeModel model_from_json(const std::string& text, const Config& config) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kSchema, std::string("model: ") + e.what());
  }
  WireframeModel m;
  const json& vertices = field(j, "vertices", "model");
  if (!vertices.is_array()) throw Error(ErrorCode::kSchema, "vertices: expected an array");
  for (std::size_t i = 0; i < vertices.size(); ++i)
    m.vertices.push_back({point_from(vertices[i], "vertices[" + std::to_string(i) + "]"), {}});
  if (j.contains("qpos")) {
    const json& q = j["qpos"];
    if (!q.is_array() || q.size() != m.vertices.size())
      throw Error(ErrorCode::kSchema, "qpos: expected one entry per vertex");
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (q[i].is_null()) continue;
      if (!q[i].is_array() || q[i].size() != 3)
        throw Error(ErrorCode::kSchema, "qpos[" + std::to_string(i) + "]: expected [i, j, k]");
      QPos p{};
      for (int c = 0; c < 3; ++c) {
        if (!q[i][c].is_number_integer())
          throw Error(ErrorCode::kSchema, "qpos[" + std::to_string(i) + "]: expected integers");
        p[c] = q[i][c].get<int>();
      }
      m.vertices[i].qpos = p;
    }
  }
  const json& faces = field(j, "faces", "model");
  if (!faces.is_array()) throw Error(ErrorCode::kSchema, "faces: expected an array");
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const std::string fp = "faces[" + std::to_string(f) + "]";
    Face face;
    face.normal_hint = point_from(field(faces[f], "normal_hint", fp), fp + ".normal_hint");
    if (faces[f].contains("primitive")) {
      const json& p = faces[f]["primitive"];
      auto prim = p.is_string() ? primitive_from_string(p.get<std::string>()) : std::nullopt;
      if (!prim) throw Error(ErrorCode::kSchema, fp + ".primitive: unknown primitive");
      face.primitive = prim;
    }
    const json& loops = field(faces[f], "loops", fp);
    if (!loops.is_array()) throw Error(ErrorCode::kSchema, fp + ".loops: expected an array");
    for (std::size_t l = 0; l < loops.size(); ++l) {
      const std::string lp = fp + ".loops[" + std::to_string(l) + "]";
      Loop loop;
      const json& outer = field(loops[l], "outer", lp);
      if (!outer.is_boolean()) throw Error(ErrorCode::kSchema, lp + ".outer: expected a bool");
      loop.is_outer = outer.get<bool>();
      const json& entries = field(loops[l], "entries", lp);
      if (!entries.is_array()) throw Error(ErrorCode::kSchema, lp + ".entries: expected an array");
      for (std::size_t k = 0; k < entries.size(); ++k) {
        const std::string ep = lp + ".entries[" + std::to_string(k) + "]";
        const json& v = field(entries[k], "v", ep);
        if (!v.is_number_integer()) throw Error(ErrorCode::kSchema, ep + ".v: expected an integer");
        loop.entries.push_back({v.get<int>(), edge_from(field(entries[k], "edge", ep), ep + ".edge")});
      }
      face.loops.push_back(std::move(loop));
    }
    m.faces.push_back(std::move(face));
  }
  if (j.contains("metadata")) {
    const json& md = j["metadata"];
    if (!md.is_object()) throw Error(ErrorCode::kSchema, "metadata: expected an object");
    for (const auto& [k, v] : md.items()) {
      if (!v.is_string()) throw Error(ErrorCode::kSchema, "metadata." + k + ": expected a string");
      m.metadata[k] = v.get<std::string>();
    }
  }
  validate_model(m, config);
  return m;
}

WireframeModel load_model(const std::string& path, const Config& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read model " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str(), config);
}

void save_model(const WireframeModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write model " + path);
  out << model_to_json(model);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

WireframeModel transform_model(const WireframeModel& model, const SimilarityTransform& t) {
  WireframeModel out = model;
  for (auto& v : out.vertices) {
    v.position = t.apply(v.position);
    v.qpos.reset();
  }
  for (auto& f : out.faces)
    for (auto& l : f.loops)
      for (auto& e : l.entries) {
        if (e.edge.mid) e.edge.mid = t.apply(*e.edge.mid);
        for (auto& p : e.edge.samples) p = t.apply(p);
        e.edge.curve_tokens.reset();
      }
  return out;
}

Normalized normalize_model(const WireframeModel& model) {
  const SimilarityTransform t = unit_cube_transform(model.bounds());
  return {transform_model(model, t), t};
}

}  // namespace brepseq
