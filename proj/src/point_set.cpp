#include "cfreg/point_set.hpp"

#include <cmath>
#include <utility>

#include "cfreg/error.hpp"

namespace cfreg {

PointSet::PointSet(Eigen::MatrixXd points, std::optional<NormalizationTransform> norm)
    : points_(std::move(points)), norm_(std::move(norm)) {
  if (points_.rows() < 1 || points_.cols() < 1) {
    throw Error(ErrorKind::DegenerateInput, "point set must hold at least one point");
  }
  if (!points_.allFinite()) {
    throw Error(ErrorKind::DegenerateInput, "point coordinates must be finite");
  }
  if (norm_) {
    if (norm_->centroid.size() != points_.cols()) {
      throw Error(ErrorKind::DimensionMismatch, "normalization centroid dimension");
    }
    if (!(norm_->scale > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "normalization scale must be positive");
    }
  }
}

PointSet normalize(const PointSet& ps) {
  const Eigen::RowVectorXd centroid = ps.points().colwise().mean();
  Eigen::MatrixXd centered = ps.points().rowwise() - centroid;
  const double scale = std::sqrt(centered.squaredNorm() / static_cast<double>(ps.size()));
  if (!(scale > 0.0)) {
    throw Error(ErrorKind::DegenerateInput, "all points coincide; cannot normalize");
  }
  centered /= scale;
  return PointSet(std::move(centered), NormalizationTransform{centroid, scale});
}

PointSet denormalize(const PointSet& ps, const NormalizationTransform& t) {
  if (t.centroid.size() != ps.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "transform dimension does not match points");
  }
  Eigen::MatrixXd out = (ps.points() * t.scale).rowwise() + t.centroid;
  return PointSet(std::move(out));
}

}  // namespace cfreg
