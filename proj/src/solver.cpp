#include "cfreg/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "cfreg/error.hpp"
#include "cfreg/kernels.hpp"

namespace cfreg {
namespace {

using Index = Eigen::Index;

Index operator_size(const GramOperator& gram) {
  return std::visit([](const auto& g) -> Index { return g.rows(); }, gram);
}

Eigen::VectorXd column_sums(const Eigen::MatrixXd& U) {
  Eigen::VectorXd sums(U.cols());
  for (Index j = 0; j < U.cols(); ++j) {
    double acc = 0.0;
    for (Index i = 0; i < U.rows(); ++i) acc += U(i, j);
    sums(j) = acc;
  }
  return sums;
}

Eigen::VectorXd row_sums(const Eigen::MatrixXd& U) {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(U.rows());
  for (Index j = 0; j < U.cols(); ++j) {
    for (Index i = 0; i < U.rows(); ++i) sums(i) += U(i, j);
  }
  return sums;
}

}  // namespace

void RegistrationConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::InvalidArgument, std::string(name) + " must be positive");
    }
  };
  positive(lambda, "lambda");
  positive(zeta, "zeta");
  positive(tol, "tol");
  kernel.validate();
  if (!(approx_ratio > 0.0 && approx_ratio <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "approx_ratio must lie in (0, 1]");
  }
  if (max_iters < 1) {
    throw Error(ErrorKind::InvalidArgument, "max_iters must be at least 1");
  }
}

MembershipMatrix update_membership(const Eigen::MatrixXd& X, const Eigen::MatrixXd& T,
                                   double sigma2, const Eigen::VectorXd& alpha, double lambda) {
  if (X.cols() != T.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "target and deformed source dimensions differ");
  }
  if (alpha.size() != T.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "alpha must have one weight per source point");
  }
  if (!(sigma2 > 0.0) || !(lambda > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "sigma2 and lambda must be positive");
  }
  const Index m = X.rows();
  const Index c = T.rows();
  const Index n = X.cols();
  const double inv_temperature = 1.0 / (lambda * sigma2);

  MembershipMatrix out;
  Eigen::MatrixXd& U = out.U;
  U.resize(m, c);
  Eigen::VectorXd row_max = Eigen::VectorXd::Constant(m, -std::numeric_limits<double>::infinity());

  // Logits -d_ij / lambda + log alpha_j, column by column.
  for (Index j = 0; j < c; ++j) {
    const double log_alpha = std::log(alpha(j));
    for (Index i = 0; i < m; ++i) {
      double d2 = 0.0;
      for (Index k = 0; k < n; ++k) {
        const double diff = X(i, k) - T(j, k);
        d2 += diff * diff;
      }
      const double logit = log_alpha - d2 * inv_temperature;
      U(i, j) = logit;
      if (logit > row_max(i)) row_max(i) = logit;
    }
  }

  Eigen::VectorXd partition = Eigen::VectorXd::Zero(m);
  for (Index j = 0; j < c; ++j) {
    for (Index i = 0; i < m; ++i) {
      const double v = std::isfinite(row_max(i)) ? std::exp(U(i, j) - row_max(i)) : 0.0;
      U(i, j) = v;
      partition(i) += v;
    }
  }

  double log_partition = 0.0;
  for (Index i = 0; i < m; ++i) {
    if (std::isfinite(row_max(i)) && partition(i) > 0.0 && std::isfinite(partition(i))) {
      const double inv = 1.0 / partition(i);
      for (Index j = 0; j < c; ++j) U(i, j) *= inv;
      log_partition += row_max(i) + std::log(partition(i));
      continue;
    }
    // Whole row lost: hard-assign to the nearest centroid.
    ++out.fallback_rows;
    Index best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < c; ++j) {
      const double d2 = (X.row(i) - T.row(j)).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = j;
      }
    }
    for (Index j = 0; j < c; ++j) U(i, j) = j == best ? 1.0 : 0.0;
    log_partition += -best_d2 * inv_temperature;
  }
  out.log_partition = log_partition;
  return out;
}

Eigen::VectorXd update_alpha(const Eigen::MatrixXd& U) {
  return column_sums(U) / static_cast<double>(U.rows());
}

double update_sigma2(const Eigen::MatrixXd& X, const Eigen::MatrixXd& T, const Eigen::MatrixXd& U) {
  if (U.rows() != X.rows() || U.cols() != T.rows() || X.cols() != T.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "update_sigma2 shapes disagree");
  }
  // tr(X^T diag(U 1) X) - 2 tr((U^T X)^T T) + tr(T^T diag(U^T 1) T)
  const Eigen::VectorXd r = row_sums(U);
  const Eigen::VectorXd s = column_sums(U);
  const Eigen::MatrixXd ux = U.transpose() * X;
  const double target_term = (r.asDiagonal() * X).cwiseProduct(X).sum();
  const double cross_term = ux.cwiseProduct(T).sum();
  const double source_term = (s.asDiagonal() * T).cwiseProduct(T).sum();
  const double sigma2 = (target_term - 2.0 * cross_term + source_term) /
                        static_cast<double>(X.cols() * X.rows());
  return std::isfinite(sigma2) ? std::max(sigma2, kSigma2Floor) : kSigma2Floor;
}

CoefficientUpdate update_coefficients(const GramOperator& gram, const Eigen::MatrixXd& U,
                                      const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                      double zeta, double sigma2) {
  const Index c = Y.rows();
  if (U.cols() != c || U.rows() != X.rows() || X.cols() != Y.cols() || operator_size(gram) != c) {
    throw Error(ErrorKind::DimensionMismatch, "update_coefficients shapes disagree");
  }
  if (!(zeta > 0.0) || !(sigma2 > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "zeta and sigma2 must be positive");
  }
  const Eigen::VectorXd s = column_sums(U);
  Eigen::MatrixXd rhs = U.transpose() * X;
  Eigen::VectorXd d(c);
  CoefficientUpdate out;
  for (Index j = 0; j < c; ++j) {
    if (s(j) < kDegenerateColumnMass) {
      // No mass on this centroid: pin its coefficient near zero.
      ++out.degenerate_columns;
      d(j) = kMaxRegularizer;
      rhs.row(j).setZero();
    } else {
      d(j) = zeta * sigma2 / s(j);
      rhs.row(j) = rhs.row(j) / s(j) - Y.row(j);
    }
  }
  out.coefficients =
      std::visit([&](const auto& g) { return regularized_solve(g, d, rhs); }, gram);
  return out;
}

Eigen::MatrixXd apply_deformation(const Eigen::MatrixXd& Y, const GramOperator& gram,
                                  const Eigen::MatrixXd& c) {
  if (c.rows() != Y.rows() || c.cols() != Y.cols() || operator_size(gram) != Y.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "apply_deformation shapes disagree");
  }
  return Y + std::visit([&](const auto& g) { return apply_gram(g, c); }, gram);
}

double initial_sigma2(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  if (X.cols() != Y.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "initial_sigma2 dimensions differ");
  }
  // Row-by-row accumulation; the M x N distance matrix is never formed.
  double total = 0.0;
  for (Index j = 0; j < Y.rows(); ++j) {
    double block = 0.0;
    for (Index i = 0; i < X.rows(); ++i) {
      double d2 = 0.0;
      for (Index k = 0; k < X.cols(); ++k) {
        const double diff = X(i, k) - Y(j, k);
        d2 += diff * diff;
      }
      block += d2;
    }
    total += block;
  }
  return total / static_cast<double>(X.cols() * X.rows() * Y.rows());
}

GramOperator build_gram_operator(const KernelSpec& spec, const PointSet& source, double ratio,
                                 std::uint64_t seed) {
  if (ratio == 1.0) return gram_matrix(spec, source);
  return build_nystrom(spec, source, ratio, seed);
}

RegistrationResult register_point_sets(const PointSet& source, const PointSet& target,
                                       const RegistrationConfig& cfg) {
  cfg.validate();
  if (source.dim() != target.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "source and target dimensions differ");
  }
  const auto start = std::chrono::steady_clock::now();

  const PointSet target_n = normalize(target);
  const PointSet source_n = normalize(source);
  const Eigen::MatrixXd& X = target_n.points();
  const Eigen::MatrixXd& Y = source_n.points();
  const Index c = Y.rows();

  const GramOperator gram = build_gram_operator(cfg.kernel, source_n, cfg.approx_ratio, cfg.seed);

  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(c, 1.0 / static_cast<double>(c));
  Eigen::MatrixXd coefficients = Eigen::MatrixXd::Zero(c, Y.cols());
  Eigen::MatrixXd T = Y;
  double sigma2 = std::max(initial_sigma2(X, Y), kSigma2Floor);

  std::vector<double> sigma2_trace;
  std::vector<double> objective_trace;
  bool converged = false;
  int iterations = 0;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const MembershipMatrix membership = update_membership(X, T, sigma2, alpha, cfg.lambda);
    objective_trace.push_back(-cfg.lambda * membership.log_partition);
    alpha = update_alpha(membership.U);
    coefficients = update_coefficients(gram, membership.U, X, Y, cfg.zeta, sigma2).coefficients;
    T = apply_deformation(Y, gram, coefficients);
    const double next = update_sigma2(X, T, membership.U);
    sigma2_trace.push_back(next);
    iterations = it;
    const double change = std::abs(next - sigma2) / sigma2;
    sigma2 = next;
    if (change < cfg.tol) {
      converged = true;
      break;
    }
  }

  const NormalizationTransform& frame = *target_n.norm();
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return RegistrationResult{denormalize(PointSet(T), frame), std::move(coefficients),
                            std::move(sigma2_trace),        std::move(objective_trace),
                            iterations,                     converged,
                            seconds};
}

}  // namespace cfreg
