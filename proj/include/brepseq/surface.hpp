#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brepseq/geometry.hpp"
#include "brepseq/model.hpp"

namespace brepseq {

/// The eight symmetries of the square index domain. Rotations are
/// counter-clockwise quarter turns; the Flip* variants transpose first.
enum class D4 { Identity = 0, Rot90, Rot180, Rot270, Transpose, FlipRot90, AntiTranspose, FlipRot270 };

D4 compose(D4 second, D4 first);  // apply `first`, then `second`

/// N x N x 3 surface samples. Row i, column j is points[i * n + j].
struct FaceGrid {
  int n = 32;
  std::vector<Vec3> points;
  SimilarityTransform transform;  // world -> normalized
  D4 d4 = D4::Identity;

  const Vec3& at(int i, int j) const { return points[static_cast<std::size_t>(i) * n + j]; }
  Vec3& at(int i, int j) { return points[static_cast<std::size_t>(i) * n + j]; }
};

FaceGrid apply_d4(const FaceGrid& grid, D4 op);

struct LocalBasis {
  Vec3 origin;
  Vec3 u;
  Vec3 v;
  Vec3 n;

  Vec3 to_local(const Vec3& p) const;
  Vec3 to_world(double a, double b, double w) const { return origin + u * a + v * b + n * w; }
};

/// w = a u^2 + b uv + c v^2 + d u + e v + f
struct QuadCoeffs {
  double a = 0, b = 0, c = 0, d = 0, e = 0, f = 0;
  double rms_residual = 0;

  double eval(double u, double v) const { return a * u * u + b * u * v + c * v * v + d * u + e * v + f; }
};

/// Unnormalized Newell normal of a closed polygon. Throws
/// Error(kGeometry, "degenerate loop") for a zero result or < 3 points.
Vec3 newell_normal(std::span<const Vec3> loop);

/// Newell normal plus in-plane PCA axes. Sign of u points toward the sample
/// of largest |projection|; exact ties fall back to a positive dominant world
/// component. Isotropic spreads use the lexicographically smallest extreme
/// point as the u direction.
LocalBasis local_basis(std::span<const Vec3> boundary);
LocalBasis local_basis(std::span<const Vec3> boundary, const Vec3& normal);

QuadCoeffs fit_quadratic(std::span<const Vec3> boundary, const LocalBasis& basis,
                         double ridge = 1e-8);

/// Boundary samples of a face: grid_n points per edge (vertices included).
std::vector<Vec3> face_boundary_samples(const Face& face, const WireframeModel& model,
                                        bool outer_only = false, int per_edge = 32);

struct PriorDetail {
  LocalBasis basis;
  QuadCoeffs quad;
  double umin = 0, umax = 0, vmin = 0, vmax = 0;
};

/// Analytic prior: Newell/PCA basis from the outer loop, quadratic fit to all
/// boundary samples, N x N samples over the outer loop's (u, v) bbox, then
/// isotropic normalization into [-1,1]^3. Interior voids are not excluded.
FaceGrid generate_prior_grid(const Face& face, const WireframeModel& model, int n = 32,
                             PriorDetail* detail = nullptr);

/// Selects among the eight symmetries the one minimizing
/// (-L1 energy of the upper-left quadrant, quadrant centroids UL,UR,LL,LR,
/// whole array), all on 10-bit quantized coordinates, and applies it.
FaceGrid canonicalize_d4(const FaceGrid& grid, int bits = 10);

struct PrimitiveFit {
  Primitive type = Primitive::Complex;
  double plane_rms = 0, cylinder_rms = 0, sphere_rms = 0;
  Vec3 plane_normal;
  double plane_offset = 0;
  Vec3 sphere_center;
  double sphere_radius = 0;
  Vec3 cylinder_axis;
  Vec3 cylinder_point;
  double cylinder_radius = 0;
};

inline constexpr double kPrimitiveRmsThreshold = 0.01;

PrimitiveFit classify_primitive(const FaceGrid& grid, double threshold = kPrimitiveRmsThreshold);

/// Cubic tensor-product B-spline over clamped uniform knots.
struct BSplineSurface {
  int degree = 3;
  int count_u = 8;
  int count_v = 8;
  std::vector<double> knots_u;
  std::vector<double> knots_v;
  std::vector<Vec3> control;  // count_u x count_v, row-major
  double max_error = 0;
  double rms_error = 0;

  Vec3 eval(double u, double v) const;
};

/// Least-squares fit with grid parameters (i/(n-1), j/(n-1)).
BSplineSurface fit_bspline(const FaceGrid& grid, int control = 8);

/// Cox-de Boor basis values N_{i,p}(t) for all i.
std::vector<double> bspline_basis(std::span<const double> knots, int degree, int count, double t);
std::vector<double> clamped_uniform_knots(int count, int degree);

std::string grid_to_json(const FaceGrid& grid);
FaceGrid grid_from_json(const std::string& text);

}  // namespace brepseq
