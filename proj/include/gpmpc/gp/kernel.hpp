#pragma once

#include <cmath>
#include <stdexcept>

#include "gpmpc/gp/hyperparams.hpp"

namespace gpmpc::gp {

/// Anisotropic squared-exponential kernel
///   k(x, x') = sigma^2 exp(-1/2 sum_i ((x_i - x'_i) / ell_i)^2).
inline double kernel_eval(const VectorXd& x, const VectorXd& x2, const Hyperparams& h) {
  if (x.size() != h.dim() || x2.size() != h.dim())
    throw std::invalid_argument("kernel_eval: dimension mismatch");
  double r2 = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double u = (x[i] - x2[i]) / h.lengthscales[i];
    r2 += u * u;
  }
  return h.signal_std * h.signal_std * std::exp(-0.5 * r2);
}

/// Gram matrix over the rows of X. Only the upper triangle is evaluated and
/// mirrored, so the result is exactly symmetric.
inline MatrixXd kernel_matrix(const MatrixXd& X, const Hyperparams& h) {
  if (X.cols() != h.dim()) throw std::invalid_argument("kernel_matrix: dimension mismatch");
  if (!X.allFinite()) throw std::invalid_argument("kernel_matrix: non-finite input");
  const Index n = X.rows();
  const double s2 = h.signal_std * h.signal_std;
  const MatrixXd Z = (X * h.lengthscales.cwiseInverse().asDiagonal()).transpose();  // d x n
  MatrixXd K(n, n);
  for (Index j = 0; j < n; ++j) {
    K(j, j) = s2;
    for (Index i = 0; i < j; ++i) {
      const double v = s2 * std::exp(-0.5 * (Z.col(i) - Z.col(j)).squaredNorm());
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

}  // namespace gpmpc::gp
