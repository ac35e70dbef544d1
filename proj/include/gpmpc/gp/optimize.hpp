#pragma once

#include <algorithm>
#include <cmath>

#include "gpmpc/gp/likelihood.hpp"
#include "gpmpc/numeric/lbfgs.hpp"

namespace gpmpc::gp {

struct TrainingReport {
  Hyperparams hyperparams;
  double lml = 0.0;
  double initial_lml = 0.0;
  int iterations = 0;
  int evaluations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
  /// Set when the line search gave up; hyperparams is then the best iterate.
  bool line_search_failed = false;
};

/// Maximize the log marginal likelihood with L-BFGS over log sigma, log ell,
/// log sigma_eps (positivity by construction) and the mean parameters A, b.
/// No priors are placed on the hyperparameters.
inline TrainingReport optimize_hyperparams(const Dataset& data, const Hyperparams& h0, int max_iters,
                                           double gradient_tol = 1e-5) {
  h0.validate();
  auto objective = [&data](const VectorXd& p, VectorXd& g) {
    const auto r = log_marginal_likelihood(data, Hyperparams::from_log_params(p));
    g = -r.gradient;
    return -r.value;
  };
  numeric::LbfgsOptions opt;
  opt.max_iterations = max_iters;
  opt.gradient_tol = gradient_tol;
  const auto res = numeric::minimize_lbfgs(objective, h0.to_log_params(), opt);

  TrainingReport rep;
  rep.hyperparams = Hyperparams::from_log_params(res.x);
  rep.lml = -res.f;
  rep.iterations = res.iterations;
  rep.evaluations = res.evaluations;
  rep.gradient_norm = res.gradient.size() ? res.gradient.lpNorm<Eigen::Infinity>() : 0.0;
  rep.converged = res.converged;
  rep.line_search_failed = res.line_search_failed;
  if (res.iterations == 0) rep.hyperparams = h0;
  rep.initial_lml = res.iterations == 0 ? rep.lml : log_marginal_likelihood(data, h0).value;
  return rep;
}

/// Data-driven starting point: least-squares linear mean, per-feature
/// lengthscales from the feature spread, noise at a tenth of the residual.
inline Hyperparams initial_hyperparams(const Dataset& data) {
  const Index n = data.size();
  const Index d = data.dim();
  Hyperparams h = Hyperparams::isotropic(d, 1.0, 1.0, 0.1);
  if (n == 0) return h;
  MatrixXd Phi(n, d + 1);
  Phi.leftCols(d) = data.X;
  Phi.col(d).setOnes();
  const VectorXd beta = Phi.colPivHouseholderQr().solve(data.y);
  h.mean_slope = beta.head(d);
  h.mean_offset = beta[d];
  const VectorXd resid = data.y - Phi * beta;
  const double rstd = std::sqrt(resid.squaredNorm() / std::max<Index>(1, n));
  h.signal_std = std::max(rstd, 1e-3);
  h.noise_std = std::max(0.1 * rstd, 1e-4);
  for (Index j = 0; j < d; ++j) {
    const auto col = data.X.col(j).array();
    const double sd = std::sqrt((col - col.mean()).square().mean());
    h.lengthscales[j] = sd > 1e-9 ? sd : 1.0;
  }
  return h;
}

}  // namespace gpmpc::gp
