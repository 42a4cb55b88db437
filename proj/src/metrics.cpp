#include "brepseq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "brepseq/error.hpp"
#include "brepseq/quantizer.hpp"
#include "rng.hpp"

namespace brepseq {

namespace {

double squared(const Vec3& a, const Vec3& b) {
  const Vec3 d = a - b;
  return dot(d, d);
}

// Mean over a of the squared distance to the nearest point of b.
double one_way(std::span<const Vec3> a, std::span<const Vec3> b) {
  double sum = 0;
  for (const auto& p : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b) best = std::min(best, squared(p, q));
    sum += best;
  }
  return sum / static_cast<double>(a.size());
}

void require_nonempty(std::span<const Vec3> a, std::span<const Vec3> b, const char* what) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": empty point set");
}

// Minimum-cost perfect assignment, O(n^3) with row/column potentials.
std::vector<int> hungarian(const std::vector<double>& cost, int n) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1)), v(static_cast<std::size_t>(n + 1));
  std::vector<int> p(static_cast<std::size_t>(n + 1)), way(static_cast<std::size_t>(n + 1));
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost[static_cast<std::size_t>((i0 - 1) * n + (j - 1))] - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> match(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) match[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return match;
}

}  // namespace

double chamfer(std::span<const Vec3> a, std::span<const Vec3> b) {
  require_nonempty(a, b, "chamfer");
  return 0.5 * (one_way(a, b) + one_way(b, a));
}

double emd(std::span<const Vec3> a, std::span<const Vec3> b) {
  require_nonempty(a, b, "emd");
  if (a.size() != b.size()) throw Error(ErrorCode::kInvalidArgument, "emd: point sets must have equal size");
  if (a.size() > 512) throw Error(ErrorCode::kInvalidArgument, "emd: at most 512 points");
  const int n = static_cast<int>(a.size());
  std::vector<double> cost(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cost[static_cast<std::size_t>(i * n + j)] = distance(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)]);
  const auto match = hungarian(cost, n);
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += cost[static_cast<std::size_t>(i * n + match[static_cast<std::size_t>(i)])];
  return sum / n;
}

PointSet resample(std::span<const Vec3> points, std::size_t count, std::uint64_t seed) {
  if (points.empty()) throw Error(ErrorCode::kInvalidArgument, "resample: empty point set");
  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), 0);
  SplitMix rng(seed);
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.next() % i]);
  PointSet out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(points[idx[k % idx.size()]]);
  return out;
}

double emd_resampled(std::span<const Vec3> a, std::span<const Vec3> b, std::size_t count, std::uint64_t seed) {
  return emd(resample(a, count, seed), resample(b, count, seed));
}

double fscore(std::span<const Vec3> a, std::span<const Vec3> b, double tau) {
  require_nonempty(a, b, "fscore");
  auto share = [tau](std::span<const Vec3> x, std::span<const Vec3> y) {
    std::size_t hit = 0;
    for (const auto& p : x) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : y) best = std::min(best, squared(p, q));
      if (std::sqrt(best) < tau) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(x.size());
  };
  const double precision = share(a, b);
  const double recall = share(b, a);
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

double jsd_voxel(std::span<const PointSet> a, std::span<const PointSet> b, int resolution) {
  if (resolution < 1) throw Error(ErrorCode::kInvalidArgument, "jsd: resolution must be positive");
  const std::size_t cells = static_cast<std::size_t>(resolution) * resolution * resolution;
  auto histogram = [&](std::span<const PointSet> sets) {
    std::vector<double> h(cells, 0.0);
    double total = 0;
    auto cell = [resolution](double x) {
      return std::clamp(static_cast<int>(std::floor((x + 1.0) / 2.0 * resolution)), 0, resolution - 1);
    };
    for (const auto& s : sets)
      for (const auto& p : s) {
        const std::size_t k = (static_cast<std::size_t>(cell(p.x)) * resolution + cell(p.y)) * resolution + cell(p.z);
        h[k] += 1;
        total += 1;
      }
    if (total == 0) throw Error(ErrorCode::kInvalidArgument, "jsd: empty collection");
    for (auto& x : h) x /= total;
    return h;
  };
  const auto p = histogram(a);
  const auto q = histogram(b);
  double js = 0;
  for (std::size_t k = 0; k < cells; ++k) {
    const double m = 0.5 * (p[k] + q[k]);
    if (p[k] > 0) js += 0.5 * p[k] * std::log2(p[k] / m);
    if (q[k] > 0) js += 0.5 * q[k] * std::log2(q[k] / m);
  }
  return std::max(0.0, js);
}

CoverageMmd coverage_mmd_from_matrix(const std::vector<double>& dist, std::size_t generated, std::size_t reference) {
  if (generated == 0 || reference == 0 || dist.size() != generated * reference)
    throw Error(ErrorCode::kInvalidArgument, "coverage: distance matrix shape mismatch");
  std::set<std::size_t> covered;
  for (std::size_t g = 0; g < generated; ++g) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < reference; ++r)
      if (dist[g * reference + r] < dist[g * reference + best]) best = r;
    covered.insert(best);
  }
  double mmd = 0;
  for (std::size_t r = 0; r < reference; ++r) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < generated; ++g) best = std::min(best, dist[g * reference + r]);
    mmd += best;
  }
  return {100.0 * static_cast<double>(covered.size()) / static_cast<double>(reference),
          mmd / static_cast<double>(reference)};
}

CoverageMmd coverage_mmd(std::span<const PointSet> generated, std::span<const PointSet> reference,
                         SetDistance distance, std::size_t emd_points) {
  std::vector<double> dist(generated.size() * reference.size());
  for (std::size_t g = 0; g < generated.size(); ++g)
    for (std::size_t r = 0; r < reference.size(); ++r)
      dist[g * reference.size() + r] = distance == SetDistance::Chamfer
                                           ? chamfer(generated[g], reference[r])
                                           : emd_resampled(generated[g], reference[r], emd_points);
  return coverage_mmd_from_matrix(dist, generated.size(), reference.size());
}

PointSet sample_model_points(const WireframeModel& model, int per_edge) {
  PointSet out;
  for (const auto& face : model.faces)
    for (const auto& loop : face.loops)
      for (std::size_t k = 0; k < loop.entries.size(); ++k) {
        auto s = sample_loop_edge(model, loop, k, per_edge);
        out.insert(out.end(), s.begin(), s.end());
      }
  return out;
}

}  // namespace brepseq
