#pragma once

#include <cmath>

#include <Eigen/Core>

#include "cfreg/error.hpp"
#include "cfreg/kernel_spec.hpp"
#include "cfreg/point_set.hpp"

namespace cfreg {

namespace detail {

template <typename A, typename B>
double kernel_distance(KernelFamily family, const Eigen::MatrixBase<A>& a,
                       const Eigen::MatrixBase<B>& b) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double diff = a(k) - b(k);
    acc += family == KernelFamily::Laplacian ? std::abs(diff) : diff * diff;
  }
  return acc;
}

}  // namespace detail

/// K(a, b) for two n-vectors (row or column). Symmetric in its arguments.
template <typename A, typename B>
double kernel_eval(const KernelSpec& spec, const Eigen::MatrixBase<A>& a,
                   const Eigen::MatrixBase<B>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::DimensionMismatch, "kernel arguments differ in dimension");
  }
  return std::exp(-spec.gamma * detail::kernel_distance(spec.family, a, b));
}

/// Dense P x P Gram matrix over the rows of `pts`.
Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const PointSet& pts);

/// R x S matrix with entry (i, j) = K(rows_i, cols_j).
Eigen::MatrixXd cross_gram(const KernelSpec& spec, const Eigen::MatrixXd& rows,
                           const Eigen::MatrixXd& cols);
Eigen::MatrixXd cross_gram(const KernelSpec& spec, const PointSet& rows, const PointSet& cols);

}  // namespace cfreg
