#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "cfreg/kernel_spec.hpp"
#include "cfreg/point_set.hpp"

namespace cfreg {

/// Nystrom surrogate L ~ E W^-1 E^T built from C' landmarks.
///
/// E is C x C' with e_ij = K(y_i, z_j) and W is C' x C' with w_ij = K(z_i, z_j).
/// W is stored without jitter. Solves go through the whitened factor
/// G = E R^-T, where R R^T = W + jitter * I, so that E (W + jitter I)^-1 E^T = G G^T.
struct NystromFactor {
  Eigen::MatrixXd landmarks;  // C' x n
  Eigen::MatrixXd E;
  Eigen::MatrixXd W;
  double jitter = 0.0;
  Eigen::MatrixXd G;

  Eigen::Index rows() const noexcept { return E.rows(); }
  Eigen::Index rank() const noexcept { return E.cols(); }
};

/// C' = max(1, round(ratio * C)), clamped to C. Throws InvalidArgument unless 0 < ratio <= 1.
Eigen::Index landmark_count(Eigen::Index c, double ratio);

/// Landmarks are the Elkan k-means centroids of `source`.
NystromFactor build_nystrom(const KernelSpec& spec, const PointSet& source, double ratio,
                            std::uint64_t seed);

/// Factor over caller-chosen landmarks. Jitter is 1e-8 * trace(W) / C'.
NystromFactor build_nystrom_from_landmarks(const KernelSpec& spec, const PointSet& source,
                                           const Eigen::MatrixXd& landmarks);

/// `count` distinct source points drawn uniformly; the classic Nystrom baseline.
Eigen::MatrixXd random_landmarks(const PointSet& source, Eigen::Index count, std::uint64_t seed);

/// Solves (L + diag(d)) c = B with L dense. Throws SingularSystem on failure.
Eigen::MatrixXd regularized_solve(const Eigen::MatrixXd& gram, const Eigen::VectorXd& d,
                                  const Eigen::MatrixXd& rhs);

/// Same system with L replaced by E W^-1 E^T = G G^T, through the matrix-inversion identity
///   (D + G G^T)^-1 = D^-1 - D^-1 G (I + G^T D^-1 G)^-1 G^T D^-1.
/// The inner matrix has eigenvalues >= 1 however small D gets. Cost O(C C'^2 + C'^3);
/// nothing C x C is formed.
Eigen::MatrixXd regularized_solve(const NystromFactor& factor, const Eigen::VectorXd& d,
                                  const Eigen::MatrixXd& rhs);

/// L c for the dense Gram matrix or E (W^-1 (E^T c)) = G (G^T c) for the factor.
Eigen::MatrixXd apply_gram(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& c);
Eigen::MatrixXd apply_gram(const NystromFactor& factor, const Eigen::MatrixXd& c);

/// Dense E W^+ E^T, using the same inverse as the error audit. Audit scale only.
Eigen::MatrixXd nystrom_reconstruction(const NystromFactor& factor);

/// |L - E W^+ E^T|_F with W^+ the (pseudo-)inverse of the unjittered W.
double approximation_error(const Eigen::MatrixXd& gram, const NystromFactor& factor);

struct BoundReport {
  double epsilon = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  Eigen::Index landmarks = 0;
  double quantization_error = 0.0;
  Eigen::Index max_cluster_size = 0;
  double w_inverse_norm = 0.0;
  /// W was too ill-conditioned to invert; W^+ stands in for W^-1.
  bool used_pseudo_inverse = false;
};

/// Exact Frobenius error of the clustered factor against the dense Gram matrix,
/// next to 4 sqrt(2) T^1.5 gamma sqrt(C' q) + 2 C' gamma^2 T q |W^-1|_F.
/// Laplacian kernel only (UnsupportedKernel otherwise); C <= 2000.
BoundReport audit_bound(const KernelSpec& spec, const PointSet& source, double ratio,
                        std::uint64_t seed);

}  // namespace cfreg
