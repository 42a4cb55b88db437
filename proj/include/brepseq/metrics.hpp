#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "brepseq/geometry.hpp"
#include "brepseq/model.hpp"

namespace brepseq {

using PointSet = std::vector<Vec3>;

/// 1/2 (mean_a min_b |a-b|^2 + mean_b min_a |a-b|^2).
double chamfer(std::span<const Vec3> a, std::span<const Vec3> b);

/// Mean Euclidean cost of the optimal perfect matching. Sizes must agree and
/// be at most 512.
double emd(std::span<const Vec3> a, std::span<const Vec3> b);

/// Deterministic resampling to `count` points (subset without replacement
/// when larger, cyclic repetition of a shuffle when smaller).
PointSet resample(std::span<const Vec3> points, std::size_t count, std::uint64_t seed);

/// emd after resampling both sides to `count` points.
double emd_resampled(std::span<const Vec3> a, std::span<const Vec3> b, std::size_t count = 256,
                     std::uint64_t seed = 0);

/// Harmonic mean of precision (share of a within tau of b) and recall.
double fscore(std::span<const Vec3> a, std::span<const Vec3> b, double tau);

/// Jensen-Shannon divergence (base 2) of the pooled 32^3 occupancy
/// histograms over [-1,1]^3.
double jsd_voxel(std::span<const PointSet> a, std::span<const PointSet> b, int resolution = 32);

enum class SetDistance { Chamfer, Emd };

struct CoverageMmd {
  double cov = 0;  // percent
  double mmd = 0;
};

CoverageMmd coverage_mmd(std::span<const PointSet> generated, std::span<const PointSet> reference,
                         SetDistance distance, std::size_t emd_points = 256);

/// Same from a precomputed |generated| x |reference| distance matrix.
CoverageMmd coverage_mmd_from_matrix(const std::vector<double>& dist, std::size_t generated,
                                     std::size_t reference);

/// Points along every edge occurrence of the model (per_edge each).
PointSet sample_model_points(const WireframeModel& model, int per_edge = 32);

}  // namespace brepseq
