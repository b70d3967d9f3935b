#include "cfreg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
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

}  // namespace

Correspondence identity_pairs(const PointSet& deformed, const PointSet& target) {
  if (deformed.size() != target.size()) {
    throw Error(ErrorKind::DimensionMismatch, "identity pairing needs equal point counts");
  }
  Correspondence corr;
  corr.mode = CorrespondenceMode::GroundTruth;
  corr.pairs.reserve(static_cast<size_t>(deformed.size()));
  for (Index i = 0; i < deformed.size(); ++i) corr.pairs.emplace_back(i, i);
  return corr;
}

Correspondence nearest_neighbor_pairs(const PointSet& deformed, const PointSet& target) {
  if (deformed.dim() != target.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "nearest neighbour search across dimensions");
  }
  const auto& q = deformed.points();
  const auto& t = target.points();

  // Sweep over targets sorted on the first coordinate; stop once the gap along
  // that axis alone exceeds the best distance found.
  std::vector<Index> order(static_cast<size_t>(t.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return t(a, 0) < t(b, 0); });
  std::vector<double> keys(order.size());
  for (size_t r = 0; r < order.size(); ++r) keys[r] = t(order[r], 0);

  Correspondence corr;
  corr.mode = CorrespondenceMode::NearestNeighbor;
  corr.pairs.reserve(static_cast<size_t>(q.rows()));
  for (Index i = 0; i < q.rows(); ++i) {
    const double x0 = q(i, 0);
    const auto start = static_cast<std::ptrdiff_t>(
        std::lower_bound(keys.begin(), keys.end(), x0) - keys.begin());
    Index best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    auto consider = [&](std::ptrdiff_t r) {
      const Index j = order[static_cast<size_t>(r)];
      const double d2 = squared_distance(q, i, t, j);
      if (d2 < best_d2 || (d2 == best_d2 && j < best)) {
        best_d2 = d2;
        best = j;
      }
    };
    const auto size = static_cast<std::ptrdiff_t>(keys.size());
    for (std::ptrdiff_t r = start; r < size; ++r) {
      const double gap = keys[static_cast<size_t>(r)] - x0;
      if (gap * gap > best_d2) break;
      consider(r);
    }
    for (std::ptrdiff_t r = start - 1; r >= 0; --r) {
      const double gap = x0 - keys[static_cast<size_t>(r)];
      if (gap * gap > best_d2) break;
      consider(r);
    }
    corr.pairs.emplace_back(i, best);
  }
  return corr;
}

double rmse(const PointSet& deformed, const PointSet& target, const Correspondence& corr) {
  if (corr.pairs.empty()) {
    throw Error(ErrorKind::EmptyCorrespondence, "no point pairs to evaluate");
  }
  if (deformed.dim() != target.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "rmse across dimensions");
  }
  double total = 0.0;
  for (const auto& [a, b] : corr.pairs) {
    if (a < 0 || a >= deformed.size() || b < 0 || b >= target.size()) {
      throw Error(ErrorKind::InvalidArgument, "correspondence index out of range");
    }
    total += squared_distance(deformed.points(), a, target.points(), b);
  }
  return std::sqrt(total / static_cast<double>(corr.pairs.size()));
}

PointSet add_noise(const PointSet& ps, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "noise sigma must be non-negative");
  }
  if (sigma == 0.0) return PointSet(ps.points());
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  Eigen::MatrixXd out = ps.points();
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index k = 0; k < out.cols(); ++k) out(i, k) += noise(rng);
  }
  return PointSet(std::move(out));
}

Occlusion occlude(const PointSet& ps, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "occlusion fraction must lie in [0, 1)");
  }
  const Index count = ps.size();
  const Index removed = std::min<Index>(
      static_cast<Index>(std::llround(fraction * static_cast<double>(count))), count - 1);

  std::vector<Index> order(static_cast<size_t>(count));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  for (Index i = 0; i < removed; ++i) {
    const Index j = i + static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(count - i)));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
  std::vector<bool> drop(static_cast<size_t>(count), false);
  for (Index i = 0; i < removed; ++i) drop[static_cast<size_t>(order[static_cast<size_t>(i)])] = true;

  Occlusion out{PointSet(ps.points()), {}};
  Eigen::MatrixXd kept(count - removed, ps.dim());
  Index row = 0;
  for (Index i = 0; i < count; ++i) {
    if (drop[static_cast<size_t>(i)]) continue;
    kept.row(row++) = ps.point(i);
    out.kept_indices.push_back(i);
  }
  out.kept = PointSet(std::move(kept));
  return out;
}

SyntheticWarp synthetic_warp(const PointSet& ps, double magnitude, double bandwidth,
                             std::uint64_t seed, int bumps) {
  if (!(magnitude >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "warp magnitude must be non-negative");
  }
  if (!(bandwidth > 0.0) || bumps < 1) {
    throw Error(ErrorKind::InvalidArgument, "warp bandwidth and bump count must be positive");
  }
  const auto& p = ps.points();
  const Index n = ps.dim();
  const Eigen::RowVectorXd lo = p.colwise().minCoeff();
  const Eigen::RowVectorXd hi = p.colwise().maxCoeff();

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd centres(bumps, n);
  Eigen::MatrixXd weights(bumps, n);
  for (int b = 0; b < bumps; ++b) {
    for (Index k = 0; k < n; ++k) centres(b, k) = lo(k) + uniform01(rng) * (hi(k) - lo(k));
    for (Index k = 0; k < n; ++k) weights(b, k) = normal(rng);
  }

  Eigen::MatrixXd field = Eigen::MatrixXd::Zero(p.rows(), n);
  const double inv_two_bw2 = 1.0 / (2.0 * bandwidth * bandwidth);
  for (Index i = 0; i < p.rows(); ++i) {
    for (int b = 0; b < bumps; ++b) {
      const double r2 = (p.row(i) - centres.row(b)).squaredNorm();
      field.row(i) += std::exp(-r2 * inv_two_bw2) * weights.row(b);
    }
  }
  const double peak = field.rowwise().norm().maxCoeff();
  Eigen::MatrixXd warped = p;
  if (magnitude > 0.0 && peak > 0.0) warped += field * (magnitude / peak);

  PointSet out(std::move(warped));
  Correspondence truth = identity_pairs(ps, out);
  return {std::move(out), std::move(truth)};
}

PointSet make_ring(Index count) {
  if (count < 3) throw Error(ErrorKind::InvalidArgument, "ring needs at least 3 points");
  // Closed curve with a lobed, asymmetric radius profile.
  Eigen::MatrixXd pts(count, 2);
  for (Index i = 0; i < count; ++i) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
    const double r = 1.0 + 0.25 * std::cos(3.0 * theta) + 0.1 * std::sin(2.0 * theta + 0.5);
    pts(i, 0) = r * std::cos(theta);
    pts(i, 1) = r * std::sin(theta);
  }
  return normalize(PointSet(std::move(pts)));
}

PointSet make_grid(Index count) {
  if (count < 2) throw Error(ErrorKind::InvalidArgument, "grid needs at least 2 points");
  const auto side = static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(count))));
  Eigen::MatrixXd pts(count, 2);
  for (Index i = 0; i < count; ++i) {
    pts(i, 0) = static_cast<double>(i % side);
    pts(i, 1) = static_cast<double>(i / side);
  }
  return normalize(PointSet(std::move(pts)));
}

PointSet make_sphere(Index count) {
  if (count < 4) throw Error(ErrorKind::InvalidArgument, "sphere needs at least 4 points");
  // Fibonacci lattice on the unit sphere.
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  Eigen::MatrixXd pts(count, 3);
  for (Index i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
    const double r = std::sqrt(1.0 - z * z);
    const double phi = golden * static_cast<double>(i);
    pts(i, 0) = r * std::cos(phi);
    pts(i, 1) = r * std::sin(phi);
    pts(i, 2) = z;
  }
  return normalize(PointSet(std::move(pts)));
}

}  // namespace cfreg
