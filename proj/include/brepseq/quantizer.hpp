#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "brepseq/config.hpp"
#include "brepseq/geometry.hpp"
#include "brepseq/model.hpp"

namespace brepseq {

// ---------------------------------------------------------------------------
// Coordinate grid
// ---------------------------------------------------------------------------

/// round_half_up((x + 1) * (2^bits - 1) / 2). Inputs outside [-1,1] are
/// clamped and reported through warn().
int quantize_coord(double x, int bits = 10);
double dequantize_coord(int q, int bits = 10);

QPos quantize_point(const Vec3& p, int bits = 10);
Vec3 dequantize_point(const QPos& q, int bits = 10);

struct QuantizeConflict {
  enum class Kind { ZeroLengthEdge, DuplicateLoopVertex };
  Kind kind;
  int face;
  int loop;
  int entry;
};

struct QuantizedModel {
  WireframeModel model;
  std::vector<QuantizeConflict> conflicts;
  int merged = 0;  // vertices removed by merging
};

/// Assigns qpos to every vertex and merges vertices sharing a grid cell.
/// Survivors keep the lowest original id's position; complex samples are
/// snapped at their ends to the surviving vertex.
QuantizedModel quantize_vertices(const WireframeModel& model, int bits = 10);

// ---------------------------------------------------------------------------
// Edge geometry
// ---------------------------------------------------------------------------

struct Circle {
  Vec3 center;
  double radius = 0.0;
  Vec3 normal;  // right-handed with the a -> mid -> b sweep
};

/// Circle through a, mid, b. Throws Error(kGeometry, "collinear ...") when
/// the triangle area is below 1e-12.
Circle arc_from_three_points(const Vec3& a, const Vec3& mid, const Vec3& b);

/// `count` points from a to b along the arc through mid, uniform in angle.
std::vector<Vec3> sample_arc(const Vec3& a, const Vec3& mid, const Vec3& b, int count);

/// grid_n samples of an edge running start -> end.
std::vector<Vec3> sample_edge_points(const Edge& edge, const Vec3& start, const Vec3& end,
                                     int count = 32);

/// Samples the k-th edge of `loop` using the model's vertex points.
std::vector<Vec3> sample_loop_edge(const WireframeModel& model, const Loop& loop, std::size_t k,
                                   int count = 32);

// ---------------------------------------------------------------------------
// Residual-quantization curve codec
// ---------------------------------------------------------------------------

/// One shared code book indexed by every residual level. Code 0 is the zero
/// vector so a residual is never made worse by a further level.
struct Codebook {
  int levels = 3;
  int size = 256;
  int dim = 24;
  std::uint64_t seed = 0;
  std::vector<double> codes;  // size x dim, row-major

  std::span<const double> code(int k) const {
    return {codes.data() + static_cast<std::size_t>(k) * dim, static_cast<std::size_t>(dim)};
  }
  int segments_per_curve(int curve_points) const { return curve_points * 3 / dim; }

  void validate() const;
  std::vector<std::uint8_t> to_bytes() const;
  static Codebook from_bytes(std::span<const std::uint8_t> bytes);
  void save(const std::string& path) const;
  static Codebook load(const std::string& path);

  friend bool operator==(const Codebook&, const Codebook&) = default;
};

struct CodebookFitOptions {
  int size = 256;
  int levels = 3;
  int points_per_segment = 8;
  int max_iterations = 50;
};

/// Fits the shared book with seeded k-means++ initialization and Lloyd
/// iterations over the pooled per-level residuals. Curves must already be in
/// the canonical frame (see canonicalize_curve).
Codebook fit_curve_codebook(std::span<const std::vector<Vec3>> curves, std::uint64_t seed,
                            const CodebookFitOptions& options = {});

/// Greedy nearest-code encoding: segment-major, `levels` tokens per segment.
std::vector<int> rq_encode_curve(std::span<const Vec3> samples, const Codebook& book);

/// Sum of the first `use_levels` codes per segment (all levels when < 0),
/// clamped to [-1,1]^3.
std::vector<Vec3> rq_decode_curve(std::span<const int> tokens, const Codebook& book,
                                  int use_levels = -1);

/// Similarity placing a curve in the canonical frame: chord midpoint at the
/// origin, chord along +x, largest |coordinate| equal to 1.
std::vector<Vec3> canonicalize_curve(std::span<const Vec3> samples);

/// Same, but rotated by the inverse of the shortest arc taking +x onto
/// `frame_chord`, so the roll is reproducible from the endpoints alone.
std::vector<Vec3> canonicalize_curve(std::span<const Vec3> samples, const Vec3& frame_chord);

/// Decode-then-scale: maps `canonical` so its first/last points land on the
/// targets (translation, shortest-arc rotation of the chord, uniform scale,
/// zero roll). Throws Error(kGeometry,
/// "edge below resolution") when the target chord is shorter than 2/1024.
std::vector<Vec3> align_decoded_curve(std::span<const Vec3> canonical, const Vec3& target_start,
                                      const Vec3& target_end);

inline constexpr double kMinEdgeLength = 2.0 / 1024.0;

/// Sets curve_tokens on every Complex edge. Tokens describe the curve running
/// from the lexicographically smaller (x, y, z) endpoint qpos to the larger,
/// so both face copies of a shared edge carry identical tokens.
WireframeModel encode_complex_edges(const WireframeModel& model, const Codebook& book);

/// Canonical-frame curves of every Complex edge (direction as in
/// encode_complex_edges), for codebook fitting.
std::vector<std::vector<Vec3>> collect_canonical_curves(const WireframeModel& model);

/// True when a -> b is already the canonical curve direction.
bool canonical_direction(const QPos& a, const QPos& b);

}  // namespace brepseq
