#pragma once

#include <optional>

#include <Eigen/Core>

namespace cfreg {

/// Maps normalized coordinates back with p * scale + centroid.
struct NormalizationTransform {
  Eigen::RowVectorXd centroid;
  double scale = 1.0;
};

/// Ordered, immutable set of points stored one per row (P x n).
class PointSet {
 public:
  /// Throws DegenerateInput for an empty matrix or non-finite coordinates.
  explicit PointSet(Eigen::MatrixXd points,
                    std::optional<NormalizationTransform> norm = std::nullopt);

  const Eigen::MatrixXd& points() const noexcept { return points_; }
  Eigen::Index size() const noexcept { return points_.rows(); }
  Eigen::Index dim() const noexcept { return points_.cols(); }
  auto point(Eigen::Index i) const { return points_.row(i); }

  const std::optional<NormalizationTransform>& norm() const noexcept { return norm_; }

 private:
  Eigen::MatrixXd points_;
  std::optional<NormalizationTransform> norm_;
};

/// Centers on the mean and divides by the RMS distance to it (a single scale,
/// so aspect ratio is preserved). The transform is recorded on the result.
PointSet normalize(const PointSet& ps);

PointSet denormalize(const PointSet& ps, const NormalizationTransform& t);

}  // namespace cfreg
