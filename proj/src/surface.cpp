#include "brepseq/surface.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <tuple>

#include <Eigen/Dense>
#include <json.hpp>

#include "brepseq/error.hpp"
#include "brepseq/quantizer.hpp"

namespace brepseq {

namespace {

// Source index read by output (i, j) under `op` on an n x n domain.
std::pair<int, int> d4_source(D4 op, int i, int j, int n) {
  const int m = n - 1;
  switch (op) {
    case D4::Identity: return {i, j};
    case D4::Rot90: return {j, m - i};
    case D4::Rot180: return {m - i, m - j};
    case D4::Rot270: return {m - j, i};
    case D4::Transpose: return {j, i};
    case D4::FlipRot90: return {m - i, j};
    case D4::AntiTranspose: return {m - j, m - i};
    case D4::FlipRot270: return {i, m - j};
  }
  return {i, j};
}

constexpr int kGridProbe = 3;

std::array<int, kGridProbe * kGridProbe> probe(D4 op, const std::array<int, kGridProbe * kGridProbe>& in) {
  std::array<int, kGridProbe * kGridProbe> out{};
  for (int i = 0; i < kGridProbe; ++i)
    for (int j = 0; j < kGridProbe; ++j) {
      const auto [si, sj] = d4_source(op, i, j, kGridProbe);
      out[static_cast<std::size_t>(i * kGridProbe + j)] = in[static_cast<std::size_t>(si * kGridProbe + sj)];
    }
  return out;
}

}  // namespace

D4 compose(D4 second, D4 first) {
  std::array<int, kGridProbe * kGridProbe> base{};
  for (int k = 0; k < kGridProbe * kGridProbe; ++k) base[static_cast<std::size_t>(k)] = k;
  const auto target = probe(second, probe(first, base));
  for (int k = 0; k < 8; ++k)
    if (probe(static_cast<D4>(k), base) == target) return static_cast<D4>(k);
  return D4::Identity;
}

FaceGrid apply_d4(const FaceGrid& grid, D4 op) {
  FaceGrid out = grid;
  for (int i = 0; i < grid.n; ++i)
    for (int j = 0; j < grid.n; ++j) {
      const auto [si, sj] = d4_source(op, i, j, grid.n);
      out.at(i, j) = grid.at(si, sj);
    }
  out.d4 = compose(op, grid.d4);
  return out;
}

Vec3 LocalBasis::to_local(const Vec3& p) const {
  const Vec3 d = p - origin;
  return {dot(d, u), dot(d, v), dot(d, n)};
}

Vec3 newell_normal(std::span<const Vec3> loop) {
  if (loop.size() < 3) throw Error(ErrorCode::kGeometry, "degenerate loop");
  Vec3 n{};
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Vec3& a = loop[i];
    const Vec3& b = loop[(i + 1) % loop.size()];
    n.x += (a.y - b.y) * (a.z + b.z);
    n.y += (a.z - b.z) * (a.x + b.x);
    n.z += (a.x - b.x) * (a.y + b.y);
  }
  if (!(norm(n) > 1e-14)) throw Error(ErrorCode::kGeometry, "degenerate loop");
  return n;
}

LocalBasis local_basis(std::span<const Vec3> boundary) {
  return local_basis(boundary, newell_normal(boundary));
}

LocalBasis local_basis(std::span<const Vec3> boundary, const Vec3& normal) {
  if (boundary.empty() || !(norm(normal) > 0)) throw Error(ErrorCode::kGeometry, "degenerate loop");
  LocalBasis b;
  b.n = normalized(normal);
  Vec3 c{};
  for (const auto& p : boundary) c += p;
  b.origin = c / static_cast<double>(boundary.size());

  const Vec3 axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  int least = 0;
  for (int k = 1; k < 3; ++k)
    if (std::abs(dot(b.n, axes[k])) < std::abs(dot(b.n, axes[least]))) least = k;
  const Vec3 e1 = normalized(cross(b.n, axes[least]));
  const Vec3 e2 = cross(b.n, e1);

  std::vector<Vec3> proj;
  proj.reserve(boundary.size());
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& p : boundary) {
    const Vec3 d = p - b.origin;
    const Vec3 q = d - b.n * dot(d, b.n);
    proj.push_back(q);
    const double x = dot(q, e1), y = dot(q, e2);
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double tr = sxx + syy;
  const double disc = std::sqrt(std::max(0.0, (sxx - syy) * (sxx - syy) / 4 + sxy * sxy));
  const double scale = std::max(tr, 1e-300);

  Vec3 u;
  if (disc <= 1e-12 * scale) {
    // Isotropic spread: direction of the lexicographically smallest extreme point.
    double far = 0;
    for (const auto& q : proj) far = std::max(far, norm(q));
    const Vec3* pick = nullptr;
    for (const auto& q : proj) {
      if (norm(q) < far * (1 - 1e-9)) continue;
      if (!pick || std::tie(q.x, q.y, q.z) < std::tie(pick->x, pick->y, pick->z)) pick = &q;
    }
    u = (pick && far > 0) ? normalized(*pick) : e1;
  } else {
    const double lambda = tr / 2 + disc;
    double x = sxy, y = lambda - sxx;
    if (std::abs(x) + std::abs(y) < 1e-300 * scale) {
      x = lambda - syy;
      y = sxy;
    }
    u = normalized(e1 * x + e2 * y);
    double best = -1, best_signed = 0;
    bool tie = false;
    for (const auto& q : proj) {
      const double s = dot(q, u);
      if (std::abs(s) > best * (1 + 1e-12) + 1e-15) {
        best = std::abs(s);
        best_signed = s;
        tie = false;
      } else if (std::abs(std::abs(s) - best) <= 1e-12 * std::max(best, 1e-300) + 1e-15 &&
                 (s > 0) != (best_signed > 0)) {
        tie = true;
      }
    }
    if (tie) {
      int dom = 0;
      for (int k = 1; k < 3; ++k)
        if (std::abs(u[k]) > std::abs(u[dom]) + 1e-12) dom = k;
      if (u[dom] < 0) u = -u;
    } else if (best_signed < 0) {
      u = -u;
    }
  }
  b.u = u;
  b.v = cross(b.n, b.u);
  return b;
}

QuadCoeffs fit_quadratic(std::span<const Vec3> boundary, const LocalBasis& basis, double ridge) {
  const Eigen::Index m = static_cast<Eigen::Index>(boundary.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + 3, 6);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 3);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Vec3 l = basis.to_local(boundary[static_cast<std::size_t>(r)]);
    a.row(r) << l.x * l.x, l.x * l.y, l.y * l.y, l.x, l.y, 1.0;
    rhs(r) = l.z;
  }
  const double s = std::sqrt(ridge);
  for (int k = 0; k < 3; ++k) a(m + k, k) = s;
  const Eigen::VectorXd x = a.completeOrthogonalDecomposition().solve(rhs);
  QuadCoeffs q{x(0), x(1), x(2), x(3), x(4), x(5), 0};
  double ss = 0;
  for (Eigen::Index r = 0; r < m; ++r) {
    const Vec3 l = basis.to_local(boundary[static_cast<std::size_t>(r)]);
    const double d = q.eval(l.x, l.y) - l.z;
    ss += d * d;
  }
  q.rms_residual = m > 0 ? std::sqrt(ss / static_cast<double>(m)) : 0;
  return q;
}

std::vector<Vec3> face_boundary_samples(const Face& face, const WireframeModel& model, bool outer_only,
                                        int per_edge) {
  std::vector<Vec3> out;
  for (std::size_t l = 0; l < face.loops.size(); ++l) {
    if (outer_only && l > 0) break;
    const Loop& loop = face.loops[l];
    for (std::size_t k = 0; k < loop.entries.size(); ++k) {
      auto s = sample_loop_edge(model, loop, k, per_edge);
      out.insert(out.end(), s.begin(), s.end() - 1);
    }
  }
  return out;
}

FaceGrid generate_prior_grid(const Face& face, const WireframeModel& model, int n, PriorDetail* detail) {
  if (face.loops.empty()) throw Error(ErrorCode::kGeometry, "degenerate loop");
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "grid size must be at least 2");
  const auto outer = face_boundary_samples(face, model, true);
  const auto all = face_boundary_samples(face, model, false);
  PriorDetail d;
  d.basis = local_basis(outer, newell_normal(outer));
  d.quad = fit_quadratic(all, d.basis);
  d.umin = d.vmin = std::numeric_limits<double>::infinity();
  d.umax = d.vmax = -std::numeric_limits<double>::infinity();
  for (const auto& p : outer) {
    const Vec3 l = d.basis.to_local(p);
    d.umin = std::min(d.umin, l.x);
    d.umax = std::max(d.umax, l.x);
    d.vmin = std::min(d.vmin, l.y);
    d.vmax = std::max(d.vmax, l.y);
  }
  FaceGrid g;
  g.n = n;
  g.points.resize(static_cast<std::size_t>(n) * n);
  Aabb box;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double u = d.umin + (d.umax - d.umin) * i / (n - 1);
      const double v = d.vmin + (d.vmax - d.vmin) * j / (n - 1);
      const Vec3 p = d.basis.to_world(u, v, d.quad.eval(u, v));
      g.at(i, j) = p;
      box.extend(p);
    }
  g.transform = unit_cube_transform(box);
  for (auto& p : g.points) p = g.transform.apply(p);
  if (detail) *detail = d;
  return g;
}

namespace {

struct D4Key {
  long long neg_energy = 0;
  std::array<long long, 12> centroids{};
  std::vector<int> values;

  bool operator<(const D4Key& o) const {
    return std::tie(neg_energy, centroids, values) < std::tie(o.neg_energy, o.centroids, o.values);
  }
};

int quantize_silent(double x, int levels) {
  const double q = std::floor((x + 1.0) * (levels - 1) / 2.0 + 0.5);
  return static_cast<int>(std::clamp(q, 0.0, static_cast<double>(levels - 1)));
}

D4Key d4_key(const FaceGrid& g, int bits) {
  const int levels = 1 << bits;
  const int h = g.n / 2;
  D4Key k;
  k.values.reserve(g.points.size() * 3);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) {
      const int quad = (i < h ? 0 : 2) + (j < h ? 0 : 1);
      const Vec3& p = g.at(i, j);
      for (int c = 0; c < 3; ++c) {
        const int q = quantize_silent(p[c], levels);
        k.values.push_back(q);
        k.centroids[static_cast<std::size_t>(quad * 3 + c)] += q;
        if (quad == 0) k.neg_energy -= std::abs(2 * q - (levels - 1));
      }
    }
  return k;
}

}  // namespace

FaceGrid canonicalize_d4(const FaceGrid& grid, int bits) {
  if (grid.n % 2 != 0) throw Error(ErrorCode::kInvalidArgument, "D4 canonicalization needs an even grid");
  FaceGrid best = grid;
  D4Key best_key = d4_key(grid, bits);
  for (int k = 1; k < 8; ++k) {
    FaceGrid cand = apply_d4(grid, static_cast<D4>(k));
    D4Key key = d4_key(cand, bits);
    if (key < best_key) {
      best_key = std::move(key);
      best = std::move(cand);
    }
  }
  return best;
}

namespace {

double plane_fit(const std::vector<Vec3>& pts, PrimitiveFit& fit) {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const auto& p : pts) c += Eigen::Vector3d(p.x, p.y, p.z);
  c /= static_cast<double>(pts.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) {
    const Eigen::Vector3d d = Eigen::Vector3d(p.x, p.y, p.z) - c;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const Eigen::Vector3d n = es.eigenvectors().col(0);
  fit.plane_normal = {n.x(), n.y(), n.z()};
  fit.plane_offset = n.dot(c);
  double ss = 0;
  for (const auto& p : pts) {
    const double r = n.dot(Eigen::Vector3d(p.x, p.y, p.z)) - fit.plane_offset;
    ss += r * r;
  }
  return std::sqrt(ss / static_cast<double>(pts.size()));
}

double sphere_fit(const std::vector<Vec3>& pts, PrimitiveFit& fit) {
  const Eigen::Index m = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd a(m, 4);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Vec3& p = pts[static_cast<std::size_t>(r)];
    a.row(r) << p.x, p.y, p.z, 1.0;
    rhs(r) = -(p.x * p.x + p.y * p.y + p.z * p.z);
  }
  const Eigen::VectorXd x = a.completeOrthogonalDecomposition().solve(rhs);
  const Vec3 center{-x(0) / 2, -x(1) / 2, -x(2) / 2};
  const double r2 = dot(center, center) - x(3);
  if (!(r2 > 0) || !std::isfinite(r2)) return std::numeric_limits<double>::infinity();
  fit.sphere_center = center;
  fit.sphere_radius = std::sqrt(r2);
  double ss = 0;
  for (const auto& p : pts) {
    const double r = distance(p, center) - fit.sphere_radius;
    ss += r * r;
  }
  return std::sqrt(ss / static_cast<double>(m));
}

double cylinder_fit(const FaceGrid& g, PrimitiveFit& fit) {
  const int n = g.n;
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec3 du = g.at(std::min(i + 1, n - 1), j) - g.at(std::max(i - 1, 0), j);
      const Vec3 dv = g.at(i, std::min(j + 1, n - 1)) - g.at(i, std::max(j - 1, 0));
      const Vec3 nn = cross(du, dv);
      const double len = norm(nn);
      if (!(len > 1e-14)) continue;
      const Eigen::Vector3d e(nn.x / len, nn.y / len, nn.z / len);
      m += e * e.transpose();
    }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
  const Eigen::Vector3d ax = es.eigenvectors().col(0);
  const Vec3 axis = normalized(Vec3{ax.x(), ax.y(), ax.z()});
  const Vec3 helper = std::abs(axis.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  const Vec3 e1 = normalized(cross(axis, helper));
  const Vec3 e2 = cross(axis, e1);

  const Eigen::Index cnt = static_cast<Eigen::Index>(g.points.size());
  Eigen::MatrixXd a(cnt, 3);
  Eigen::VectorXd rhs(cnt);
  for (Eigen::Index r = 0; r < cnt; ++r) {
    const Vec3& p = g.points[static_cast<std::size_t>(r)];
    const double x = dot(p, e1), y = dot(p, e2);
    a.row(r) << x, y, 1.0;
    rhs(r) = -(x * x + y * y);
  }
  const Eigen::VectorXd s = a.completeOrthogonalDecomposition().solve(rhs);
  const double cx = -s(0) / 2, cy = -s(1) / 2;
  const double r2 = cx * cx + cy * cy - s(2);
  if (!(r2 > 0) || !std::isfinite(r2)) return std::numeric_limits<double>::infinity();
  fit.cylinder_axis = axis;
  fit.cylinder_point = e1 * cx + e2 * cy;
  fit.cylinder_radius = std::sqrt(r2);
  double ss = 0;
  for (const auto& p : g.points) {
    const double x = dot(p, e1) - cx, y = dot(p, e2) - cy;
    const double r = std::hypot(x, y) - fit.cylinder_radius;
    ss += r * r;
  }
  return std::sqrt(ss / static_cast<double>(cnt));
}

}  // namespace

PrimitiveFit classify_primitive(const FaceGrid& grid, double threshold) {
  if (grid.points.size() < 4) throw Error(ErrorCode::kInvalidArgument, "grid too small to classify");
  PrimitiveFit fit;
  fit.plane_rms = plane_fit(grid.points, fit);
  fit.sphere_rms = sphere_fit(grid.points, fit);
  fit.cylinder_rms = cylinder_fit(grid, fit);
  // Simplest first: plane, sphere, cylinder.
  const std::array<std::pair<Primitive, double>, 3> order{
      {{Primitive::Plane, fit.plane_rms}, {Primitive::Sphere, fit.sphere_rms}, {Primitive::Cylinder, fit.cylinder_rms}}};
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [type, rms] : order) best = std::min(best, rms);
  fit.type = Primitive::Complex;
  if (best < threshold)
    for (const auto& [type, rms] : order)
      if (rms <= best + 1e-6) {
        fit.type = type;
        break;
      }
  return fit;
}

std::vector<double> clamped_uniform_knots(int count, int degree) {
  if (count <= degree) throw Error(ErrorCode::kInvalidArgument, "B-spline needs more control points than its degree");
  std::vector<double> k(static_cast<std::size_t>(count + degree + 1));
  const int spans = count - degree;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const int t = static_cast<int>(i) - degree;
    k[i] = std::clamp(static_cast<double>(t) / spans, 0.0, 1.0);
  }
  return k;
}

std::vector<double> bspline_basis(std::span<const double> knots, int degree, int count, double t) {
  // Cox-de Boor on the span containing t; t = 1 belongs to the last span.
  std::vector<double> out(static_cast<std::size_t>(count), 0.0);
  int span = degree;
  while (span < count - 1 && t >= knots[static_cast<std::size_t>(span + 1)]) ++span;
  std::vector<double> nb(static_cast<std::size_t>(degree + 1), 0.0);
  std::vector<double> left(static_cast<std::size_t>(degree + 1)), right(static_cast<std::size_t>(degree + 1));
  nb[0] = 1.0;
  for (int j = 1; j <= degree; ++j) {
    left[static_cast<std::size_t>(j)] = t - knots[static_cast<std::size_t>(span + 1 - j)];
    right[static_cast<std::size_t>(j)] = knots[static_cast<std::size_t>(span + j)] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const double tmp = denom != 0.0 ? nb[static_cast<std::size_t>(r)] / denom : 0.0;
      nb[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * tmp;
      saved = left[static_cast<std::size_t>(j - r)] * tmp;
    }
    nb[static_cast<std::size_t>(j)] = saved;
  }
  for (int j = 0; j <= degree; ++j) out[static_cast<std::size_t>(span - degree + j)] = nb[static_cast<std::size_t>(j)];
  return out;
}

Vec3 BSplineSurface::eval(double u, double v) const {
  const auto bu = bspline_basis(knots_u, degree, count_u, u);
  const auto bv = bspline_basis(knots_v, degree, count_v, v);
  Vec3 p{};
  for (int i = 0; i < count_u; ++i) {
    if (bu[static_cast<std::size_t>(i)] == 0.0) continue;
    for (int j = 0; j < count_v; ++j)
      p += control[static_cast<std::size_t>(i * count_v + j)] * (bu[static_cast<std::size_t>(i)] * bv[static_cast<std::size_t>(j)]);
  }
  return p;
}

BSplineSurface fit_bspline(const FaceGrid& grid, int control) {
  const int n = grid.n;
  BSplineSurface s;
  s.count_u = s.count_v = control;
  s.knots_u = s.knots_v = clamped_uniform_knots(control, s.degree);
  Eigen::MatrixXd b(n, control);
  for (int i = 0; i < n; ++i) {
    const auto row = bspline_basis(s.knots_u, s.degree, control, static_cast<double>(i) / (n - 1));
    for (int k = 0; k < control; ++k) b(i, k) = row[static_cast<std::size_t>(k)];
  }
  const Eigen::MatrixXd pinv = b.completeOrthogonalDecomposition().pseudoInverse();
  s.control.assign(static_cast<std::size_t>(control) * control, Vec3{});
  for (int c = 0; c < 3; ++c) {
    Eigen::MatrixXd p(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) p(i, j) = grid.at(i, j)[c];
    const Eigen::MatrixXd ctrl = pinv * p * pinv.transpose();
    for (int i = 0; i < control; ++i)
      for (int j = 0; j < control; ++j) s.control[static_cast<std::size_t>(i * control + j)][c] = ctrl(i, j);
  }
  double ss = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double err = distance(s.eval(static_cast<double>(i) / (n - 1), static_cast<double>(j) / (n - 1)), grid.at(i, j));
      s.max_error = std::max(s.max_error, err);
      ss += err * err;
    }
  s.rms_error = std::sqrt(ss / (static_cast<double>(n) * n));
  return s;
}

std::string grid_to_json(const FaceGrid& grid) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : grid.points) pts.push_back({p.x, p.y, p.z});
  nlohmann::json j{{"n", grid.n},
                   {"points", pts},
                   {"transform",
                    {{"scale", grid.transform.scale},
                     {"offset", {grid.transform.offset.x, grid.transform.offset.y, grid.transform.offset.z}}}},
                   {"d4", static_cast<int>(grid.d4)}};
  return j.dump() + "\n";
}

FaceGrid grid_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kSchema, std::string("grid file: ") + e.what());
  }
  try {
    FaceGrid g;
    g.n = j.at("n").get<int>();
    const auto& pts = j.at("points");
    if (g.n < 2 || pts.size() != static_cast<std::size_t>(g.n) * g.n)
      throw Error(ErrorCode::kSchema, "grid file: points must hold n*n entries");
    for (const auto& p : pts) {
      if (!p.is_array() || p.size() != 3) throw Error(ErrorCode::kSchema, "grid file: points need 3 coordinates");
      g.points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    }
    if (j.contains("transform")) {
      const auto& t = j["transform"];
      g.transform.scale = t.at("scale").get<double>();
      const auto& o = t.at("offset");
      g.transform.offset = {o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()};
    }
    const int d4 = j.value("d4", 0);
    if (d4 < 0 || d4 > 7) throw Error(ErrorCode::kSchema, "grid file: d4 must be in 0..7");
    g.d4 = static_cast<D4>(d4);
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("grid file: ") + e.what());
  }
}

}  // namespace brepseq
