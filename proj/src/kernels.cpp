#include "cfreg/kernels.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace cfreg {

void KernelSpec::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorKind::InvalidArgument, "kernel bandwidth gamma must be positive");
  }
}

std::string_view to_string(KernelFamily family) noexcept {
  return family == KernelFamily::Laplacian ? "laplacian" : "gaussian";
}

KernelFamily parse_kernel_family(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "laplacian") return KernelFamily::Laplacian;
  if (lower == "gaussian") return KernelFamily::Gaussian;
  throw Error(ErrorKind::InvalidArgument, "unknown kernel '" + std::string(name) + "'");
}

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const PointSet& pts) {
  spec.validate();
  const auto& p = pts.points();
  const Eigen::Index count = p.rows();
  Eigen::MatrixXd gram(count, count);
  for (Eigen::Index j = 0; j < count; ++j) {
    gram(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < count; ++i) {
      const double v = std::exp(-spec.gamma * detail::kernel_distance(spec.family, p.row(i), p.row(j)));
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  return gram;
}

Eigen::MatrixXd cross_gram(const KernelSpec& spec, const Eigen::MatrixXd& rows,
                           const Eigen::MatrixXd& cols) {
  spec.validate();
  if (rows.cols() != cols.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "cross_gram point dimensions differ");
  }
  Eigen::MatrixXd out(rows.rows(), cols.rows());
  for (Eigen::Index j = 0; j < cols.rows(); ++j) {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      out(i, j) = std::exp(-spec.gamma * detail::kernel_distance(spec.family, rows.row(i), cols.row(j)));
    }
  }
  return out;
}

Eigen::MatrixXd cross_gram(const KernelSpec& spec, const PointSet& rows, const PointSet& cols) {
  return cross_gram(spec, rows.points(), cols.points());
}

}  // namespace cfreg
