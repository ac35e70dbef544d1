#pragma once

#include <cmath>
#include <numbers>

#include "gpmpc/gp/posterior.hpp"

namespace gpmpc::gp {

struct LmlResult {
  double value = 0.0;
  /// Gradient w.r.t. the packed coordinates of Hyperparams::to_log_params().
  VectorXd gradient;
  double jitter = 0.0;
};

/// Log marginal likelihood of the data under h, and its gradient.
///
/// The diagonal jitter is proportional to sigma^2 and is differentiated as
/// such, so the gradient is exact for the matrix that was actually factored.
inline LmlResult log_marginal_likelihood(const Dataset& data, const Hyperparams& h) {
  h.validate();
  data.validate();
  const Index n = data.size();
  const Index d = h.dim();
  if (n < 1) throw std::invalid_argument("log_marginal_likelihood: empty dataset");
  if (data.dim() != d) throw std::invalid_argument("log_marginal_likelihood: dimension mismatch");

  const double s2 = h.signal_std * h.signal_std;
  const double noise_var = h.noise_std * h.noise_std;
  const MatrixXd Kf = kernel_matrix(data.X, h);
  const auto chol = detail::jittered_cholesky(Kf, s2, noise_var);
  const auto L = chol.L.triangularView<Eigen::Lower>();

  VectorXd r(n);
  for (Index i = 0; i < n; ++i) r[i] = data.y[i] - h.mean(data.X.row(i).transpose());
  VectorXd alpha = L.solve(r);
  const double quad = alpha.squaredNorm();
  chol.L.transpose().triangularView<Eigen::Upper>().solveInPlace(alpha);

  LmlResult out;
  out.jitter = chol.jitter;
  out.value = -0.5 * quad - chol.L.diagonal().array().log().sum() -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

  // W = alpha alpha^T - K_y^{-1}; dLML/dp = 1/2 tr(W dK_y/dp).
  const MatrixXd Linv = L.solve(MatrixXd::Identity(n, n));
  MatrixXd W = -(Linv.transpose() * Linv);
  W.noalias() += alpha * alpha.transpose();
  const double trW = W.trace();

  out.gradient = VectorXd::Zero(log_param_count(d));
  out.gradient[0] = (W.array() * Kf.array()).sum() + chol.jitter * trW;
  for (Index j = 0; j < d; ++j) {
    const double inv_l2 = 1.0 / (h.lengthscales[j] * h.lengthscales[j]);
    double acc = 0.0;
    for (Index b = 0; b < n; ++b) {
      const double xb = data.X(b, j);
      for (Index a = 0; a < b; ++a) {
        const double diff = data.X(a, j) - xb;
        acc += W(a, b) * Kf(a, b) * diff * diff;
      }
    }
    out.gradient[1 + j] = acc * inv_l2;  // symmetric pairs counted once, times 2 * 1/2
  }
  out.gradient[d + 1] = noise_var * trW;
  out.gradient.segment(d + 2, d) = data.X.transpose() * alpha;
  out.gradient[2 * d + 2] = alpha.sum();
  return out;
}

}  // namespace gpmpc::gp
