#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "brepseq/error.hpp"
#include "brepseq/metrics.hpp"

using namespace brepseq;

namespace {

PointSet random_set(std::mt19937_64& rng, std::size_t n, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  PointSet s(n);
  for (auto& p : s) p = {u(rng), u(rng), u(rng)};
  return s;
}

double brute_emd(const PointSet& a, const PointSet& b) {
  std::vector<int> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += distance(a[i], b[static_cast<std::size_t>(perm[i])]);
    best = std::min(best, s / static_cast<double>(a.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Direct transcription of the histogram definition.
double oracle_jsd(const std::vector<PointSet>& a, const std::vector<PointSet>& b) {
  const int r = 32;
  auto hist = [&](const std::vector<PointSet>& sets) {
    std::vector<double> h(r * r * r, 0.0);
    double total = 0;
    for (const auto& s : sets)
      for (const auto& p : s) {
        int idx[3];
        for (int c = 0; c < 3; ++c) idx[c] = std::clamp(static_cast<int>(std::floor((p[c] + 1) / 2 * r)), 0, r - 1);
        h[(idx[0] * r + idx[1]) * r + idx[2]] += 1;
        total += 1;
      }
    for (auto& x : h) x /= total;
    return h;
  };
  const auto p = hist(a), q = hist(b);
  double j = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = (p[i] + q[i]) / 2;
    if (p[i] > 0) j += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0) j += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return j;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("chamfer") {
    const PointSet o = {{0, 0, 0}}, x = {{1, 0, 0}};
    CHECK(chamfer(o, x) == 1.0);
    std::mt19937_64 rng(1);
    const PointSet a = random_set(rng, 50);
    CHECK(chamfer(a, a) == 0.0);
    CHECK_THROWS_AS(chamfer(PointSet{}, a), Error);

    // Dropping points from a copy costs at most the largest squared gap to a kept point.
    PointSet sub(a.begin(), a.begin() + 25);
    double gap = 0;
    for (const auto& p : a) {
      double m = std::numeric_limits<double>::infinity();
      for (const auto& s : sub) m = std::min(m, squared_distance(p, s));
      gap = std::max(gap, m);
    }
    CHECK(chamfer(a, sub) <= gap);
  }

  TEST_CASE("earth mover's distance") {
    const PointSet a = {{0, 0, 0}, {1, 0, 0}}, b = {{0, 0, 0}, {2, 0, 0}};
    CHECK(emd(a, b) == doctest::Approx(0.5));
    CHECK_THROWS_AS(emd(a, PointSet{{0, 0, 0}}), Error);

    std::mt19937_64 rng(2);
    for (int t = 0; t < 30; ++t) {
      const PointSet p = random_set(rng, 6), q = random_set(rng, 6);
      CHECK(emd(p, q) == doctest::Approx(brute_emd(p, q)).epsilon(1e-12));
      Vec3 cp{}, cq{};
      for (std::size_t i = 0; i < p.size(); ++i) {
        cp += p[i] / 6.0;
        cq += q[i] / 6.0;
      }
      CHECK(emd(p, q) >= distance(cp, cq) - 1e-12);
      PointSet shuffled = p;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      CHECK(emd(p, shuffled) == doctest::Approx(0.0).epsilon(1e-12));
    }
    const PointSet big = random_set(rng, 1000);
    CHECK(emd_resampled(big, big, 256) == 0.0);
    CHECK(resample(big, 256, 4) == resample(big, 256, 4));
    CHECK(resample(big, 256, 4).size() == 256);
    CHECK(resample(PointSet(big.begin(), big.begin() + 10), 256, 4).size() == 256);
  }

  TEST_CASE("F-score") {
    std::mt19937_64 rng(3);
    const PointSet a = random_set(rng, 40);
    CHECK(fscore(a, a, 0.02) == 1.0);
    CHECK(fscore(a, random_set(rng, 40, 5, 6), 0.02) == 0.0);
    const PointSet half = {{0, 0, 0}, {10, 0, 0}}, b = {{0, 0, 0}};
    CHECK(fscore(half, b, 0.1) == doctest::Approx(2.0 / 3.0));
    CHECK(fscore(b, half, 0.1) == doctest::Approx(2.0 / 3.0));
  }

  TEST_CASE("voxel JSD") {
    std::mt19937_64 rng(4);
    std::vector<PointSet> a = {random_set(rng, 500, -1, 0), random_set(rng, 300, -1, 0)};
    CHECK(jsd_voxel(a, a) == 0.0);
    std::vector<PointSet> far = {random_set(rng, 400, 0.01, 1)};
    CHECK(jsd_voxel(a, far) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<PointSet> wide = {random_set(rng, 2000, -1, 0.5)};
    std::vector<PointSet> shifted = wide;
    for (auto& p : shifted[0]) p.x += 0.5;
    const double j = jsd_voxel(wide, shifted);
    CHECK(j > 0.0);
    CHECK(j < 1.0);
    CHECK(j == doctest::Approx(oracle_jsd(wide, shifted)).epsilon(1e-12));
    CHECK(jsd_voxel(shifted, wide) == doctest::Approx(j).epsilon(1e-12));
  }

  TEST_CASE("coverage and minimum matching distance") {
    std::mt19937_64 rng(5);
    std::vector<PointSet> ref;
    for (int i = 0; i < 6; ++i) ref.push_back(random_set(rng, 30));
    for (auto d : {SetDistance::Chamfer, SetDistance::Emd}) {
      const CoverageMmd self = coverage_mmd(ref, ref, d, 30);
      CHECK(self.cov == 100.0);
      CHECK(self.mmd == 0.0);
    }
    const std::vector<PointSet> one = {ref[2]};
    CHECK(coverage_mmd(one, ref, SetDistance::Chamfer).cov == doctest::Approx(100.0 / 6));

    std::vector<PointSet> gen;
    double last = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 8; ++i) {
      gen.push_back(random_set(rng, 30));
      const double mmd = coverage_mmd(gen, ref, SetDistance::Chamfer).mmd;
      CHECK(mmd <= last);
      last = mmd;
    }

    const std::vector<double> dist = {0.1, 0.5, 0.2,  //
                                      0.3, 0.4, 0.05};
    const CoverageMmd m = coverage_mmd_from_matrix(dist, 2, 3);
    CHECK(m.cov == doctest::Approx(200.0 / 3));
    CHECK(m.mmd == doctest::Approx((0.1 + 0.4 + 0.05) / 3));
  }

  TEST_CASE("symmetry and permutation invariance under fuzzing") {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 20; ++t) {
      const PointSet a = random_set(rng, 40), b = random_set(rng, 40);
      PointSet ap = a, bp = b;
      std::shuffle(ap.begin(), ap.end(), rng);
      std::shuffle(bp.begin(), bp.end(), rng);
      CHECK(chamfer(a, b) == doctest::Approx(chamfer(b, a)).epsilon(1e-12));
      CHECK(chamfer(a, b) == doctest::Approx(chamfer(ap, bp)).epsilon(1e-12));
      CHECK(emd(a, b) == doctest::Approx(emd(b, a)).epsilon(1e-9));
      CHECK(emd(a, b) == doctest::Approx(emd(ap, bp)).epsilon(1e-9));
      CHECK(fscore(a, b, 0.3) == doctest::Approx(fscore(bp, ap, 0.3)).epsilon(1e-12));
      const std::vector<PointSet> sa = {a}, sb = {b}, sab = {a, b}, sba = {bp, ap};
      CHECK(jsd_voxel(sa, sb) == doctest::Approx(jsd_voxel(sb, sa)).epsilon(1e-12));
      CHECK(jsd_voxel(sab, sa) == doctest::Approx(jsd_voxel(sba, sa)).epsilon(1e-12));
      const double j = jsd_voxel(sa, sb);
      CHECK(j >= 0.0);
      CHECK(j <= 1.0);

      std::vector<PointSet> g = {a, b, random_set(rng, 40)}, r = {b, random_set(rng, 40)};
      const CoverageMmd x = coverage_mmd(g, r, SetDistance::Chamfer);
      std::reverse(g.begin(), g.end());
      std::reverse(r.begin(), r.end());
      const CoverageMmd y = coverage_mmd(g, r, SetDistance::Chamfer);
      CHECK(x.cov == y.cov);
      CHECK(x.mmd == doctest::Approx(y.mmd).epsilon(1e-12));
      CHECK(x.cov >= 0.0);
      CHECK(x.cov <= 100.0);
    }
  }
}
