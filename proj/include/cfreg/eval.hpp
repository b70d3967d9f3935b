#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cfreg/point_set.hpp"

namespace cfreg {

enum class CorrespondenceMode { GroundTruth, NearestNeighbor };

struct Correspondence {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;  // (deformed, target)
  CorrespondenceMode mode = CorrespondenceMode::GroundTruth;
};

/// Index-identity pairing; both sets must have the same size.
Correspondence identity_pairs(const PointSet& deformed, const PointSet& target);

/// Exact Euclidean nearest target for every deformed point, ties to the lowest index.
Correspondence nearest_neighbor_pairs(const PointSet& deformed, const PointSet& target);

/// sqrt(sum over pairs |t - x|^2 / #pairs).
double rmse(const PointSet& deformed, const PointSet& target, const Correspondence& corr);

PointSet add_noise(const PointSet& ps, double sigma, std::uint64_t seed);

struct Occlusion {
  PointSet kept;
  std::vector<Eigen::Index> kept_indices;  // original index of each kept point
};

/// Drops round(fraction * P) uniformly chosen points; order of the rest is kept.
Occlusion occlude(const PointSet& ps, double fraction, std::uint64_t seed);

struct SyntheticWarp {
  PointSet warped;
  Correspondence truth;
};

/// Displaces every point by a sum of `bumps` random Gaussian RBFs, rescaled so
/// that the largest displacement norm equals `magnitude`.
SyntheticWarp synthetic_warp(const PointSet& ps, double magnitude, double bandwidth,
                             std::uint64_t seed, int bumps = 5);

/// Built-in fixture shapes, already normalized.
PointSet make_ring(Eigen::Index count);
PointSet make_grid(Eigen::Index count);
PointSet make_sphere(Eigen::Index count);

}  // namespace cfreg
