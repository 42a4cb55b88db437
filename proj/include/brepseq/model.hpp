#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "brepseq/config.hpp"
#include "brepseq/geometry.hpp"

namespace brepseq {

using QPos = std::array<int, 3>;

struct Vertex {
  Vec3 position;
  std::optional<QPos> qpos;  // set by quantize_vertices
};

enum class EdgeKind { Line, Arc, Complex };

const char* to_string(EdgeKind kind);
std::optional<EdgeKind> edge_kind_from_string(const std::string& s);

/// Geometry of one edge occurrence inside a loop. The endpoints are implicit:
/// entry k's edge runs from entry k's vertex to entry k+1's (wrapping).
struct Edge {
  EdgeKind kind = EdgeKind::Line;
  std::optional<Vec3> mid;                         // Arc only
  std::vector<Vec3> samples;                       // Complex only, grid_n points
  std::optional<std::vector<int>> curve_tokens;    // Complex only, after encoding

  static Edge line() { return {}; }
  static Edge arc(const Vec3& mid) {
    Edge e;
    e.kind = EdgeKind::Arc;
    e.mid = mid;
    return e;
  }
  static Edge complex(std::vector<Vec3> samples) {
    Edge e;
    e.kind = EdgeKind::Complex;
    e.samples = std::move(samples);
    return e;
  }

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct LoopEntry {
  int vertex = 0;
  Edge edge;

  friend bool operator==(const LoopEntry&, const LoopEntry&) = default;
};

struct Loop {
  std::vector<LoopEntry> entries;
  bool is_outer = false;

  std::size_t size() const { return entries.size(); }
  /// (start, end) vertex ids of the k-th edge.
  std::pair<int, int> edge_endpoints(std::size_t k) const {
    return {entries[k].vertex, entries[(k + 1) % entries.size()].vertex};
  }

  friend bool operator==(const Loop&, const Loop&) = default;
};

enum class Primitive { Plane, Cylinder, Sphere, Complex };

const char* to_string(Primitive p);
std::optional<Primitive> primitive_from_string(const std::string& s);

struct Face {
  std::vector<Loop> loops;  // outer first
  Vec3 normal_hint{0, 0, 1};
  std::optional<Primitive> primitive;

  const Loop& outer() const { return loops.front(); }

  friend bool operator==(const Face&, const Face&) = default;
};

struct WireframeModel {
  std::vector<Vertex> vertices;
  std::vector<Face> faces;
  std::map<std::string, std::string> metadata;

  bool quantized() const;
  Aabb bounds() const;  // vertices, arc mids and complex samples
};

bool operator==(const Vertex& a, const Vertex& b);
bool operator==(const WireframeModel& a, const WireframeModel& b);

/// Checks every structural and capacity invariant; throws Error naming the
/// offending face/loop (kInvariant or kCapacity).
void validate_model(const WireframeModel& model, const Config& config = {});

/// JSON interchange. Keys are emitted in sorted order so equal models
/// serialize to identical bytes.
std::string model_to_json(const WireframeModel& model);
WireframeModel model_from_json(const std::string& text, const Config& config = {});

WireframeModel load_model(const std::string& path, const Config& config = {});
void save_model(const WireframeModel& model, const std::string& path);

struct Normalized {
  WireframeModel model;
  SimilarityTransform transform;  // model coords -> normalized coords
};

/// Isotropic normalization about the bbox center into [-1,1]^3 with the
/// longest axis spanning exactly [-1,1]. Clears qpos and curve tokens.
Normalized normalize_model(const WireframeModel& model);

/// Applies `t` to every coordinate of the model (vertices, mids, samples).
WireframeModel transform_model(const WireframeModel& model, const SimilarityTransform& t);

/// Dequantized position when qpos is set, raw position otherwise.
Vec3 vertex_point(const WireframeModel& model, int id, int bits = 10);

}  // namespace brepseq
