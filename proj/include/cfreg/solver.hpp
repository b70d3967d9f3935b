#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "cfreg/kernel_spec.hpp"
#include "cfreg/lowrank.hpp"
#include "cfreg/point_set.hpp"

namespace cfreg {

struct RegistrationConfig {
  double lambda = 0.5;       // entropy weight
  double zeta = 0.1;         // Tikhonov trade-off
  KernelSpec kernel{};       // Laplacian, gamma = 2
  double approx_ratio = 0.3; // Nystrom landmark fraction; 1 means exact Gram matrix
  int max_iters = 100;
  double tol = 1e-5;         // relative sigma^2 change
  std::uint64_t seed = 0;    // k-means++ seeding only

  void validate() const;
};

struct RegistrationResult {
  PointSet deformed;  // in the target's original frame
  Eigen::MatrixXd coefficients;
  std::vector<double> sigma2_trace;
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
  double wall_time = 0.0;
};

inline constexpr double kSigma2Floor = 1e-8;
inline constexpr double kDegenerateColumnMass = 1e-12;
inline constexpr double kMaxRegularizer = 1e12;

/// Row-stochastic M x C fuzzy membership matrix.
struct MembershipMatrix {
  Eigen::MatrixXd U;
  /// Sum over rows of log(sum_j alpha_j exp(-d_ij / lambda)); -lambda times this
  /// is the entropy-regularized clustering loss evaluated at U.
  double log_partition = 0.0;
  /// Rows that underflowed entirely and fell back to a nearest-centroid one-hot.
  Eigen::Index fallback_rows = 0;
};

/// Dense Gram matrix or its Nystrom surrogate; fixed for a whole run.
using GramOperator = std::variant<Eigen::MatrixXd, NystromFactor>;

/// U_ij proportional to alpha_j exp(-|x_i - t_j|^2 / (sigma2 lambda)), rows
/// normalized. Evaluated with a per-row max shift.
MembershipMatrix update_membership(const Eigen::MatrixXd& X, const Eigen::MatrixXd& T,
                                   double sigma2, const Eigen::VectorXd& alpha, double lambda);

/// Column means of U.
Eigen::VectorXd update_alpha(const Eigen::MatrixXd& U);

/// sum_ij u_ij |x_i - t_j|^2 / (n M), floored at kSigma2Floor.
double update_sigma2(const Eigen::MatrixXd& X, const Eigen::MatrixXd& T, const Eigen::MatrixXd& U);

struct CoefficientUpdate {
  Eigen::MatrixXd coefficients;
  /// Columns whose mass fell below kDegenerateColumnMass; their regularizer was clamped.
  Eigen::Index degenerate_columns = 0;
};

/// Solves (L + zeta sigma2 diag(s)^-1) c = diag(s)^-1 U^T X - Y, s = U^T 1.
CoefficientUpdate update_coefficients(const GramOperator& gram, const Eigen::MatrixXd& U,
                                      const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                      double zeta, double sigma2);

/// T = Y + L c.
Eigen::MatrixXd apply_deformation(const Eigen::MatrixXd& Y, const GramOperator& gram,
                                  const Eigen::MatrixXd& c);

/// Mean squared distance over all (target, source) pairs divided by n.
double initial_sigma2(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

/// Builds the dense Gram matrix when ratio == 1, otherwise the clustered factor.
GramOperator build_gram_operator(const KernelSpec& spec, const PointSet& source, double ratio,
                                 std::uint64_t seed);

/// Deforms `source` toward `target`. Both are normalized independently; the
/// result is mapped back with the target's transform.
RegistrationResult register_point_sets(const PointSet& source, const PointSet& target,
                                       const RegistrationConfig& cfg = {});

}  // namespace cfreg
