#include "cfreg/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "cfreg/clustering.hpp"
#include "cfreg/error.hpp"
#include "cfreg/kernels.hpp"
#include "cfreg/rng.hpp"

namespace cfreg {
namespace {

using Index = Eigen::Index;

constexpr double kJitterScale = 1e-8;
// Eigenvalues below this fraction of the largest are treated as zero when W is inverted for audits.
constexpr double kPseudoInverseCutoff = 1e-12;

void check_system(Index rows, const Eigen::VectorXd& d, const Eigen::MatrixXd& rhs) {
  if (d.size() != rows || rhs.rows() != rows) {
    throw Error(ErrorKind::DimensionMismatch, "regularized_solve shapes disagree");
  }
  if (!(d.array() > 0.0).all()) {
    throw Error(ErrorKind::InvalidArgument, "regularizer diagonal must be positive");
  }
}

struct SymmetricInverse {
  Eigen::MatrixXd inverse;
  bool pseudo = false;
};

SymmetricInverse invert_symmetric(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularSystem, "eigendecomposition of W failed");
  }
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double cutoff = kPseudoInverseCutoff * std::max(values.cwiseAbs().maxCoeff(), 1.0);
  Eigen::VectorXd inv_values(values.size());
  bool pseudo = false;
  for (Index i = 0; i < values.size(); ++i) {
    if (values(i) > cutoff) {
      inv_values(i) = 1.0 / values(i);
    } else {
      inv_values(i) = 0.0;
      pseudo = true;
    }
  }
  const Eigen::MatrixXd& vecs = eig.eigenvectors();
  return {vecs * inv_values.asDiagonal() * vecs.transpose(), pseudo};
}

}  // namespace

Index landmark_count(Index c, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "approximation ratio must lie in (0, 1]");
  }
  const auto rounded = static_cast<Index>(std::llround(ratio * static_cast<double>(c)));
  return std::clamp<Index>(rounded, 1, c);
}

NystromFactor build_nystrom_from_landmarks(const KernelSpec& spec, const PointSet& source,
                                           const Eigen::MatrixXd& landmarks) {
  if (landmarks.rows() < 1 || landmarks.cols() != source.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "landmarks must be a non-empty C' x n matrix");
  }
  NystromFactor f;
  f.landmarks = landmarks;
  f.E = cross_gram(spec, source.points(), landmarks);
  f.W = cross_gram(spec, landmarks, landmarks);
  const auto rank = static_cast<double>(landmarks.rows());
  f.jitter = kJitterScale * f.W.trace() / rank;
  Eigen::MatrixXd jittered = f.W;
  jittered.diagonal().array() += f.jitter;
  const Eigen::LLT<Eigen::MatrixXd> chol(jittered);
  if (chol.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularSystem, "landmark kernel matrix W is not positive definite");
  }
  // G^T = R^-1 E^T with R the lower Cholesky factor.
  f.G = chol.matrixL().solve(f.E.transpose()).transpose();
  return f;
}

NystromFactor build_nystrom(const KernelSpec& spec, const PointSet& source, double ratio,
                            std::uint64_t seed) {
  spec.validate();
  const Index k = landmark_count(source.size(), ratio);
  const KMeansResult km = kmeans_elkan(source, k, seed);
  return build_nystrom_from_landmarks(spec, source, km.centroids);
}

Eigen::MatrixXd random_landmarks(const PointSet& source, Index count, std::uint64_t seed) {
  if (count < 1 || count > source.size()) {
    throw Error(ErrorKind::InvalidK, "landmark count out of range");
  }
  // Partial Fisher-Yates over the point indices.
  std::vector<Index> order(static_cast<size_t>(source.size()));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  for (Index i = 0; i < count; ++i) {
    const auto remaining = static_cast<std::uint64_t>(source.size() - i);
    const Index j = i + static_cast<Index>(uniform_index(rng, remaining));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
  Eigen::MatrixXd out(count, source.dim());
  for (Index i = 0; i < count; ++i) out.row(i) = source.point(order[static_cast<size_t>(i)]);
  return out;
}

Eigen::MatrixXd regularized_solve(const Eigen::MatrixXd& gram, const Eigen::VectorXd& d,
                                  const Eigen::MatrixXd& rhs) {
  check_system(gram.rows(), d, rhs);
  Eigen::MatrixXd system = gram;
  system.diagonal() += d;
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() == Eigen::Success) return llt.solve(rhs);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
  if (ldlt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularSystem, "dense regularized system could not be factorized");
  }
  return ldlt.solve(rhs);
}

Eigen::MatrixXd regularized_solve(const NystromFactor& factor, const Eigen::VectorXd& d,
                                  const Eigen::MatrixXd& rhs) {
  check_system(factor.rows(), d, rhs);
  const Eigen::VectorXd d_inv = d.cwiseInverse();
  const Eigen::MatrixXd scaled_g = d_inv.asDiagonal() * factor.G;  // D^-1 G
  // I + G^T D^-1 G as a symmetric rank-C' update of the lower triangle.
  const Eigen::MatrixXd half_scaled = d_inv.cwiseSqrt().asDiagonal() * factor.G;
  Eigen::MatrixXd inner = Eigen::MatrixXd::Identity(factor.rank(), factor.rank());
  inner.selfadjointView<Eigen::Lower>().rankUpdate(half_scaled.transpose());
  const Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(inner);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularSystem, "inner C' x C' system could not be factorized");
  }
  const Eigen::MatrixXd correction = llt.solve(scaled_g.transpose() * rhs);
  if (!correction.allFinite()) {
    throw Error(ErrorKind::SingularSystem, "inner C' x C' solve produced non-finite values");
  }
  return d_inv.asDiagonal() * rhs - scaled_g * correction;
}

Eigen::MatrixXd apply_gram(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& c) {
  return gram * c;
}

Eigen::MatrixXd apply_gram(const NystromFactor& factor, const Eigen::MatrixXd& c) {
  const Eigen::MatrixXd projected = factor.G.transpose() * c;
  return factor.G * projected;
}

Eigen::MatrixXd nystrom_reconstruction(const NystromFactor& factor) {
  const SymmetricInverse w_inv = invert_symmetric(factor.W);
  return factor.E * w_inv.inverse * factor.E.transpose();
}

double approximation_error(const Eigen::MatrixXd& gram, const NystromFactor& factor) {
  if (gram.rows() != factor.rows() || gram.cols() != factor.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "Gram matrix does not match factor");
  }
  return (gram - nystrom_reconstruction(factor)).norm();
}

BoundReport audit_bound(const KernelSpec& spec, const PointSet& source, double ratio,
                        std::uint64_t seed) {
  spec.validate();
  if (spec.family != KernelFamily::Laplacian) {
    throw Error(ErrorKind::UnsupportedKernel, "the approximation bound covers the Laplacian kernel only");
  }
  constexpr Index kAuditLimit = 2000;
  if (source.size() > kAuditLimit) {
    throw Error(ErrorKind::InvalidArgument,
                "audit needs the dense Gram matrix; C must not exceed " + std::to_string(kAuditLimit));
  }
  const Index k = landmark_count(source.size(), ratio);
  const KMeansResult km = kmeans_elkan(source, k, seed);
  const NystromFactor factor = build_nystrom_from_landmarks(spec, source, km.centroids);

  // The bound is stated for nearest-centroid clusters; recompute them rather
  // than trusting an assignment that may predate the last centroid update.
  const auto& pts = source.points();
  std::vector<Index> sizes(static_cast<size_t>(k), 0);
  double q = 0.0;
  for (Index j = 0; j < pts.rows(); ++j) {
    Index best = 0;
    double best_d2 = (pts.row(j) - km.centroids.row(0)).squaredNorm();
    for (Index i = 1; i < k; ++i) {
      const double d2 = (pts.row(j) - km.centroids.row(i)).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = i;
      }
    }
    q += best_d2;
    ++sizes[static_cast<size_t>(best)];
  }
  const auto t = static_cast<double>(*std::max_element(sizes.begin(), sizes.end()));

  const SymmetricInverse w_inv = invert_symmetric(factor.W);
  const Eigen::MatrixXd gram = gram_matrix(spec, source);

  BoundReport report;
  report.landmarks = k;
  report.quantization_error = q;
  report.max_cluster_size = static_cast<Index>(t);
  report.w_inverse_norm = w_inv.inverse.norm();
  report.used_pseudo_inverse = w_inv.pseudo;
  report.epsilon = (gram - factor.E * w_inv.inverse * factor.E.transpose()).norm();
  const double c_prime = static_cast<double>(k);
  const double g = spec.gamma;
  report.bound = 4.0 * std::sqrt(2.0) * std::pow(t, 1.5) * g * std::sqrt(c_prime * q) +
                 2.0 * c_prime * g * g * t * q * report.w_inverse_norm;
  report.slack = report.bound - report.epsilon;
  return report;
}

}  // namespace cfreg
