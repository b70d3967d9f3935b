#include "cfreg/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cfreg/error.hpp"
#include "cfreg/rng.hpp"

namespace cfreg {
namespace {

using Index = Eigen::Index;

double squared_distance(const Eigen::MatrixXd& a, Index i, const Eigen::MatrixXd& b, Index j) {
  double acc = 0.0;
  for (Index k = 0; k < a.cols(); ++k) {
    const double diff = a(i, k) - b(j, k);
    acc += diff * diff;
  }
  return acc;
}

void check_k(const PointSet& pts, Index k, int max_iters) {
  if (k < 1 || k > pts.size()) {
    throw Error(ErrorKind::InvalidK, "k must lie in [1, " + std::to_string(pts.size()) + "], got " +
                                         std::to_string(k));
  }
  if (max_iters < 1) {
    throw Error(ErrorKind::InvalidArgument, "max_iters must be at least 1");
  }
}

/// Means of the current clusters. An empty cluster takes the point farthest
/// from its own (new) centroid; points already used for a repair are skipped.
void update_centroids(const Eigen::MatrixXd& pts, const std::vector<Index>& assignment,
                      Eigen::MatrixXd& centroids) {
  const Index k = centroids.rows();
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, pts.cols());
  std::vector<Index> counts(static_cast<size_t>(k), 0);
  for (Index i = 0; i < pts.rows(); ++i) {
    const Index c = assignment[static_cast<size_t>(i)];
    sums.row(c) += pts.row(i);
    ++counts[static_cast<size_t>(c)];
  }
  std::vector<Index> empty;
  for (Index c = 0; c < k; ++c) {
    if (counts[static_cast<size_t>(c)] > 0) {
      centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<size_t>(c)]);
    } else {
      empty.push_back(c);
    }
  }
  if (empty.empty()) return;

  std::vector<bool> used(static_cast<size_t>(pts.rows()), false);
  for (const Index c : empty) {
    Index farthest = -1;
    double best = -1.0;
    for (Index i = 0; i < pts.rows(); ++i) {
      if (used[static_cast<size_t>(i)]) continue;
      const double d2 = squared_distance(pts, i, centroids, assignment[static_cast<size_t>(i)]);
      if (d2 > best) {
        best = d2;
        farthest = i;
      }
    }
    used[static_cast<size_t>(farthest)] = true;
    centroids.row(c) = pts.row(farthest);
  }
}

void finalize(const Eigen::MatrixXd& pts, KMeansResult& result) {
  const Index k = result.centroids.rows();
  std::vector<Index> counts(static_cast<size_t>(k), 0);
  double q = 0.0;
  for (Index i = 0; i < pts.rows(); ++i) {
    const Index c = result.assignment[static_cast<size_t>(i)];
    q += squared_distance(pts, i, result.centroids, c);
    ++counts[static_cast<size_t>(c)];
  }
  result.quantization_error = q;
  result.max_cluster_size = *std::max_element(counts.begin(), counts.end());
}

// Bound comparisons run on square roots that were shifted by centroid drift;
// a pruning decision must hold with room to spare so that the surviving
// candidates are exactly the ones Lloyd's exhaustive scan could pick.
struct Margin {
  double absolute;
  bool clearly_greater(double lo, double hi) const { return lo > hi * (1.0 + 1e-9) + absolute; }
};

}  // namespace

Eigen::MatrixXd kmeans_plus_plus(const Eigen::MatrixXd& pts, Index k, std::uint64_t seed) {
  const Index count = pts.rows();
  Rng rng(seed);
  Eigen::MatrixXd centroids(k, pts.cols());
  std::vector<bool> chosen(static_cast<size_t>(count), false);

  Index first = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(count)));
  centroids.row(0) = pts.row(first);
  chosen[static_cast<size_t>(first)] = true;

  Eigen::VectorXd nearest(count);
  for (Index i = 0; i < count; ++i) nearest(i) = squared_distance(pts, i, centroids, 0);

  for (Index c = 1; c < k; ++c) {
    const double total = nearest.sum();
    Index pick = -1;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double running = 0.0;
      for (Index i = 0; i < count; ++i) {
        running += nearest(i);
        if (nearest(i) > 0.0 && running > target) {
          pick = i;
          break;
        }
      }
      if (pick < 0) {
        // Rounding pushed the target past the running sum; take the last positive weight.
        for (Index i = count - 1; i >= 0; --i) {
          if (nearest(i) > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Every remaining point duplicates a chosen centre.
      for (Index i = 0; i < count; ++i) {
        if (!chosen[static_cast<size_t>(i)]) {
          pick = i;
          break;
        }
      }
    }
    centroids.row(c) = pts.row(pick);
    chosen[static_cast<size_t>(pick)] = true;
    for (Index i = 0; i < count; ++i) {
      nearest(i) = std::min(nearest(i), squared_distance(pts, i, centroids, c));
    }
  }
  return centroids;
}

KMeansResult kmeans_lloyd_reference(const PointSet& input, Index k, std::uint64_t seed,
                                    int max_iters) {
  check_k(input, k, max_iters);
  const auto& pts = input.points();
  const Index count = pts.rows();

  KMeansResult result;
  result.centroids = kmeans_plus_plus(pts, k, seed);
  result.assignment.assign(static_cast<size_t>(count), -1);

  for (int it = 1; it <= max_iters; ++it) {
    Index changes = 0;
    double q = 0.0;
    for (Index i = 0; i < count; ++i) {
      Index best = 0;
      double best_d2 = squared_distance(pts, i, result.centroids, 0);
      for (Index c = 1; c < k; ++c) {
        const double d2 = squared_distance(pts, i, result.centroids, c);
        if (d2 < best_d2) {
          best_d2 = d2;
          best = c;
        }
      }
      result.distance_evaluations += k;
      q += best_d2;
      auto& slot = result.assignment[static_cast<size_t>(i)];
      if (slot != best) {
        slot = best;
        ++changes;
      }
    }
    result.error_trace.push_back(q);
    result.iterations = it;
    if (changes == 0) {
      result.converged = true;
      break;
    }
    update_centroids(pts, result.assignment, result.centroids);
  }
  finalize(pts, result);
  return result;
}

KMeansResult kmeans_elkan(const PointSet& input, Index k, std::uint64_t seed, int max_iters) {
  check_k(input, k, max_iters);
  const auto& pts = input.points();
  const Index count = pts.rows();
  const Margin margin{1e-12 * (1.0 + pts.cwiseAbs().maxCoeff())};

  KMeansResult result;
  result.centroids = kmeans_plus_plus(pts, k, seed);
  auto& centroids = result.centroids;
  auto& assignment = result.assignment;
  assignment.assign(static_cast<size_t>(count), 0);

  Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(count, k);  // point x centroid
  Eigen::VectorXd upper(count);
  Eigen::MatrixXd centre_dist(k, k);
  Eigen::VectorXd half_nearest(k);

  auto refresh_centre_distances = [&] {
    for (Index a = 0; a < k; ++a) {
      centre_dist(a, a) = 0.0;
      for (Index b = a + 1; b < k; ++b) {
        const double d = std::sqrt(squared_distance(centroids, a, centroids, b));
        centre_dist(a, b) = d;
        centre_dist(b, a) = d;
      }
    }
    for (Index a = 0; a < k; ++a) {
      double m = std::numeric_limits<double>::infinity();
      for (Index b = 0; b < k; ++b) {
        if (b != a) m = std::min(m, centre_dist(a, b));
      }
      half_nearest(a) = 0.5 * m;
    }
  };

  auto distance = [&](Index i, Index c, double& d2) {
    ++result.distance_evaluations;
    d2 = squared_distance(pts, i, centroids, c);
    return std::sqrt(d2);
  };

  // First pass: full assignment, pruned only by centre-centre distances.
  refresh_centre_distances();
  for (Index i = 0; i < count; ++i) {
    Index best = 0;
    double best_d2 = 0.0;
    double best_d = distance(i, 0, best_d2);
    lower(i, 0) = best_d;
    for (Index c = 1; c < k; ++c) {
      if (margin.clearly_greater(0.5 * centre_dist(best, c), best_d)) {
        lower(i, c) = std::max(0.0, centre_dist(best, c) - best_d);
        continue;
      }
      double d2 = 0.0;
      const double d = distance(i, c, d2);
      lower(i, c) = d;
      if (d2 < best_d2) {
        best = c;
        best_d2 = d2;
        best_d = d;
      }
    }
    assignment[static_cast<size_t>(i)] = best;
    upper(i) = best_d;
  }
  result.iterations = 1;

  Eigen::MatrixXd previous(k, pts.cols());
  Eigen::VectorXd drift(k);
  bool changed = true;
  for (int it = 2; it <= max_iters && changed; ++it) {
    previous = centroids;
    update_centroids(pts, assignment, centroids);
    for (Index c = 0; c < k; ++c) {
      drift(c) = std::sqrt(squared_distance(previous, c, centroids, c));
    }
    for (Index i = 0; i < count; ++i) {
      for (Index c = 0; c < k; ++c) lower(i, c) = std::max(0.0, lower(i, c) - drift(c));
      upper(i) += drift(assignment[static_cast<size_t>(i)]);
    }
    refresh_centre_distances();

    changed = false;
    for (Index i = 0; i < count; ++i) {
      Index a = assignment[static_cast<size_t>(i)];
      if (margin.clearly_greater(half_nearest(a), upper(i))) continue;
      bool stale = true;
      double a_d2 = 0.0;
      for (Index c = 0; c < k; ++c) {
        if (c == a) continue;
        if (margin.clearly_greater(lower(i, c), upper(i)) ||
            margin.clearly_greater(0.5 * centre_dist(a, c), upper(i))) {
          continue;
        }
        if (stale) {
          upper(i) = distance(i, a, a_d2);
          lower(i, a) = upper(i);
          stale = false;
          if (margin.clearly_greater(lower(i, c), upper(i)) ||
              margin.clearly_greater(0.5 * centre_dist(a, c), upper(i))) {
            continue;
          }
        }
        double d2 = 0.0;
        const double d = distance(i, c, d2);
        lower(i, c) = d;
        if (d2 < a_d2 || (d2 == a_d2 && c < a)) {
          a = c;
          a_d2 = d2;
          upper(i) = d;
        }
      }
      if (a != assignment[static_cast<size_t>(i)]) {
        assignment[static_cast<size_t>(i)] = a;
        changed = true;
      }
    }
    result.iterations = it;
  }
  result.converged = !changed;
  // Lloyd's loop ends every unconverged pass with a centroid update; mirror it.
  if (changed) update_centroids(pts, assignment, centroids);
  finalize(pts, result);
  return result;
}

}  // namespace cfreg
