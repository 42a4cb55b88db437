#include "brepseq/serializer.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "brepseq/error.hpp"
#include "brepseq/quantizer.hpp"

namespace brepseq {

int Vocabulary::edge_token(EdgeKind k) const {
  switch (k) {
    case EdgeKind::Line: return special(Special::Line);
    case EdgeKind::Arc: return special(Special::Arc);
    case EdgeKind::Complex: return special(Special::Complex);
  }
  return -1;
}

std::string Vocabulary::describe(int id) const {
  if (is_coord(id)) return "COORD(" + std::to_string(id) + ")";
  if (is_curve(id)) return "CURVE(" + std::to_string(id - coord_count) + ")";
  static const char* kNames[kSpecialCount] = {"SOS",        "EOS",  "FACE_START", "LOOP_START",
                                              "LINE",       "ARC",  "COMPLEX"};
  const int s = id - coord_count - curve_count;
  if (s >= 0 && s < kSpecialCount) return kNames[s];
  return "INVALID(" + std::to_string(id) + ")";
}

namespace {

Edge reversed(const Edge& e) {
  Edge r = e;
  std::reverse(r.samples.begin(), r.samples.end());
  return r;
}

Loop reverse_loop(const Loop& loop) {
  const std::size_t n = loop.entries.size();
  Loop out;
  out.is_outer = loop.is_outer;
  out.entries.reserve(n);
  for (std::size_t k = 0; k < n; ++k)
    out.entries.push_back({loop.entries[(n - k) % n].vertex, reversed(loop.entries[(n - k - 1) % n].edge)});
  return out;
}

std::vector<Vec3> loop_polyline(const WireframeModel& model, const Loop& loop) {
  std::vector<Vec3> pts;
  for (std::size_t k = 0; k < loop.entries.size(); ++k) {
    auto s = sample_loop_edge(model, loop, k, 32);
    pts.insert(pts.end(), s.begin(), s.end() - 1);
  }
  return pts;
}

double orientation(const WireframeModel& model, const Loop& loop, const Vec3& hint) {
  const auto pts = loop_polyline(model, loop);
  Vec3 n{};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3& a = pts[i];
    const Vec3& b = pts[(i + 1) % pts.size()];
    n.x += (a.y - b.y) * (a.z + b.z);
    n.y += (a.z - b.z) * (a.x + b.x);
    n.z += (a.x - b.x) * (a.y + b.y);
  }
  return dot(n, hint);
}

void rotate_to_pivot(Loop& loop) {
  auto it = std::min_element(loop.entries.begin(), loop.entries.end(),
                             [](const LoopEntry& a, const LoopEntry& b) { return a.vertex < b.vertex; });
  std::rotate(loop.entries.begin(), it, loop.entries.end());
}

void append_coords(TokenSequence& out, const QPos& q, const Vocabulary& vocab) {
  for (int c : q) out.push_back(vocab.coord(c));
}

/// Total-order key for faces with equal vertex sets. Unencoded complex edges
/// fall back to their quantized samples.
TokenSequence face_order_key(const Face& face, const WireframeModel& model, const Config& config) {
  const Vocabulary vocab = Vocabulary::from(config);
  TokenSequence out;
  for (const auto& loop : face.loops) {
    out.push_back(vocab.special(Special::LoopStart));
    for (const auto& entry : loop.entries) {
      append_coords(out, *model.vertices[static_cast<std::size_t>(entry.vertex)].qpos, vocab);
      out.push_back(vocab.edge_token(entry.edge.kind));
      if (entry.edge.mid) append_coords(out, quantize_point(*entry.edge.mid, config.bits), vocab);
      if (entry.edge.curve_tokens) {
        for (int t : *entry.edge.curve_tokens) out.push_back(vocab.curve(t));
      } else {
        for (const auto& p : entry.edge.samples) append_coords(out, quantize_point(p, config.bits), vocab);
      }
    }
  }
  return out;
}

}  // namespace

WireframeModel canonical_order(const WireframeModel& model) {
  if (!model.quantized()) throw Error(ErrorCode::kInvalidArgument, "canonical_order: missing qpos");
  const std::size_t nv = model.vertices.size();
  std::vector<int> order(nv);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const QPos& qa = *model.vertices[static_cast<std::size_t>(a)].qpos;
    const QPos& qb = *model.vertices[static_cast<std::size_t>(b)].qpos;
    return std::tie(qa[2], qa[1], qa[0]) < std::tie(qb[2], qb[1], qb[0]);
  });
  std::vector<int> new_id(nv);
  WireframeModel out;
  out.metadata = model.metadata;
  for (std::size_t i = 0; i < nv; ++i) {
    new_id[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
    out.vertices.push_back(model.vertices[static_cast<std::size_t>(order[i])]);
  }

  for (const Face& face : model.faces) {
    Face f = face;
    for (Loop& loop : f.loops) {
      for (auto& e : loop.entries) e.vertex = new_id[static_cast<std::size_t>(e.vertex)];
      const double o = orientation(out, loop, f.normal_hint);
      if ((loop.is_outer && o < 0.0) || (!loop.is_outer && o > 0.0)) loop = reverse_loop(loop);
      rotate_to_pivot(loop);
    }
    std::stable_sort(f.loops.begin() + 1, f.loops.end(), [](const Loop& a, const Loop& b) {
      return a.entries.front().vertex < b.entries.front().vertex;
    });
    out.faces.push_back(std::move(f));
  }

  const Config config;
  struct Keyed {
    std::vector<int> vertex_set;
    TokenSequence tokens;
    std::size_t index;
  };
  std::vector<Keyed> keys;
  for (std::size_t i = 0; i < out.faces.size(); ++i) {
    Keyed k{{}, face_order_key(out.faces[i], out, config), i};
    for (const auto& loop : out.faces[i].loops)
      for (const auto& e : loop.entries) k.vertex_set.push_back(e.vertex);
    std::sort(k.vertex_set.begin(), k.vertex_set.end());
    k.vertex_set.erase(std::unique(k.vertex_set.begin(), k.vertex_set.end()), k.vertex_set.end());
    keys.push_back(std::move(k));
  }
  std::stable_sort(keys.begin(), keys.end(), [](const Keyed& a, const Keyed& b) {
    return std::tie(a.vertex_set, a.tokens) < std::tie(b.vertex_set, b.tokens);
  });
  std::vector<Face> faces;
  faces.reserve(keys.size());
  for (const auto& k : keys) faces.push_back(std::move(out.faces[k.index]));
  out.faces = std::move(faces);
  return out;
}

TokenSequence serialize_face(const Face& face, const WireframeModel& model, const Config& config) {
  const Vocabulary vocab = Vocabulary::from(config);
  TokenSequence out{vocab.special(Special::FaceStart)};
  for (std::size_t l = 0; l < face.loops.size(); ++l) {
    const Loop& loop = face.loops[l];
    if (static_cast<int>(loop.entries.size()) > config.max_loop_entries())
      throw Error(ErrorCode::kCapacity, "loop " + std::to_string(l) + ": entry count over N_g");
    out.push_back(vocab.special(Special::LoopStart));
    for (const auto& entry : loop.entries) {
      const auto& q = model.vertices.at(static_cast<std::size_t>(entry.vertex)).qpos;
      if (!q) throw Error(ErrorCode::kInvalidArgument, "serialize: vertex without qpos");
      append_coords(out, *q, vocab);
      out.push_back(vocab.edge_token(entry.edge.kind));
      switch (entry.edge.kind) {
        case EdgeKind::Line: break;
        case EdgeKind::Arc:
          append_coords(out, quantize_point(*entry.edge.mid, config.bits), vocab);
          break;
        case EdgeKind::Complex:
          if (!entry.edge.curve_tokens)
            throw Error(ErrorCode::kInvalidArgument, "serialize: complex edge missing curve tokens");
          if (static_cast<int>(entry.edge.curve_tokens->size()) != config.curve_tokens)
            throw Error(ErrorCode::kInvalidArgument, "serialize: wrong curve token count");
          for (int t : *entry.edge.curve_tokens) out.push_back(vocab.curve(t));
          break;
      }
    }
  }
  return out;
}

TokenSequence serialize_model(const WireframeModel& model, const Config& config) {
  if (model.faces.empty()) throw Error(ErrorCode::kInvalidArgument, "serialize: no faces");
  if (static_cast<int>(model.faces.size()) > config.max_faces)
    throw Error(ErrorCode::kCapacity, "serialize: face limit exceeded");
  const Vocabulary vocab = Vocabulary::from(config);
  TokenSequence out{vocab.special(Special::Sos)};
  for (const auto& face : model.faces) {
    if (static_cast<int>(face.loops.size()) > config.max_loops)
      throw Error(ErrorCode::kCapacity, "serialize: loop limit exceeded");
    const auto s = serialize_face(face, model, config);
    out.insert(out.end(), s.begin(), s.end());
  }
  out.push_back(vocab.special(Special::Eos));
  if (static_cast<int>(out.size()) > config.max_seq_len)
    throw Error(ErrorCode::kCapacity, "serialize: sequence over budget (" + std::to_string(out.size()) +
                                          " > " + std::to_string(config.max_seq_len) + " tokens)");
  return out;
}

std::string tokens_to_json(const TokenSequence& tokens) {
  return nlohmann::json{{"tokens", tokens}}.dump() + "\n";
}

TokenSequence tokens_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kSchema, std::string("token file: ") + e.what());
  }
  if (!j.is_object() || !j.contains("tokens") || !j["tokens"].is_array())
    throw Error(ErrorCode::kSchema, "token file: missing 'tokens' array");
  TokenSequence out;
  for (const auto& t : j["tokens"]) {
    if (!t.is_number_integer()) throw Error(ErrorCode::kSchema, "token file: tokens must be integers");
    out.push_back(t.get<int>());
  }
  return out;
}

}  // namespace brepseq
