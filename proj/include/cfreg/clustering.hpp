#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "cfreg/point_set.hpp"

namespace cfreg {

struct KMeansResult {
  Eigen::MatrixXd centroids;            // k x n
  std::vector<Eigen::Index> assignment;  // cluster index per point
  double quantization_error = 0.0;      // sum of squared point-to-centroid distances
  Eigen::Index max_cluster_size = 0;
  int iterations = 0;
  bool converged = false;
  /// Point-to-centroid distance evaluations after seeding.
  std::int64_t distance_evaluations = 0;
  /// Quantization error after each assignment step.
  std::vector<double> error_trace;
};

/// k-means++ seeding from a 64-bit Mersenne Twister. Exposed so both k-means
/// variants start from bitwise-identical centroids.
Eigen::MatrixXd kmeans_plus_plus(const Eigen::MatrixXd& pts, Eigen::Index k, std::uint64_t seed);

/// Elkan's triangle-inequality accelerated k-means. Exact: produces the same
/// iterates as Lloyd's algorithm from the same seeding.
///
/// Ties between equidistant centroids go to the lowest index. An empty cluster
/// is re-seeded at the point farthest from its own centroid. Iteration stops
/// when no assignment changes or after `max_iters` assignment passes.
KMeansResult kmeans_elkan(const PointSet& pts, Eigen::Index k, std::uint64_t seed,
                          int max_iters = 100);

/// Plain Lloyd iteration with the same contract; the reference for Elkan.
KMeansResult kmeans_lloyd_reference(const PointSet& pts, Eigen::Index k, std::uint64_t seed,
                                    int max_iters = 100);

}  // namespace cfreg
