#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace gpmpc::numeric {

struct BoxQnOptions {
  double kkt_tol = 1e-6;
  int max_iterations = 300;
  double armijo = 1e-4;
  int max_backtracks = 40;
  double binding_eps = 1e-3;  // width of the band in which a bound counts as binding
  double initial_step = 10.0; // infinity-norm of the first trial step
};

struct BoxQnResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  int evaluations = 0;
  double kkt = 0.0;
  bool converged = false;
};

/// ||P(x - g) - x||_inf, the first-order optimality residual on a box.
inline double box_kkt_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                               const Eigen::VectorXd& hi) {
  return ((x - g).cwiseMax(lo).cwiseMin(hi) - x).lpNorm<Eigen::Infinity>();
}

/// Two-metric projected quasi-Newton method for min f(x) on lo <= x <= hi.
/// Free variables take a BFGS step, variables sitting at a bound with the
/// gradient pushing outward take a scaled gradient step; both are projected
/// and the step length is chosen by Armijo backtracking along the arc.
/// fn(x, g) returns f and writes the gradient.
inline BoxQnResult minimize_box(const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& fn,
                                const Eigen::VectorXd& x0, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                const BoxQnOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  if (lo.size() != n || hi.size() != n) throw std::invalid_argument("minimize_box: bound size mismatch");
  if ((lo.array() > hi.array()).any()) throw std::invalid_argument("minimize_box: lo > hi");
  auto project = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return v.cwiseMax(lo).cwiseMin(hi); };

  BoxQnResult r;
  r.x = project(x0);
  r.gradient.resize(n);
  r.f = fn(r.x, r.gradient);
  r.evaluations = 1;
  if (!std::isfinite(r.f)) throw std::runtime_error("minimize_box: objective not finite at the start point");

  Eigen::MatrixXd B;  // Hessian approximation
  auto scaled_identity = [&](const Eigen::VectorXd& g) {
    const double gn = g.lpNorm<Eigen::Infinity>();
    return Eigen::MatrixXd::Identity(n, n) * (gn > 0.0 ? gn / opt.initial_step : 1.0);
  };
  B = scaled_identity(r.gradient);
  bool fresh = true;

  Eigen::VectorXd g_new(n), d(n), x_new(n);
  std::vector<Eigen::Index> free_idx;
  while (true) {
    r.kkt = box_kkt_residual(r.x, r.gradient, lo, hi);
    if (r.kkt <= opt.kkt_tol) {
      r.converged = true;
      break;
    }
    if (r.iterations >= opt.max_iterations) break;

    const double eps = std::min(opt.binding_eps, r.kkt);
    free_idx.clear();
    d.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lo = r.x[i] <= lo[i] + eps && r.gradient[i] > 0.0;
      const bool at_hi = r.x[i] >= hi[i] - eps && r.gradient[i] < 0.0;
      if (at_lo || at_hi)
        d[i] = -r.gradient[i] / B(i, i);
      else
        free_idx.push_back(i);
    }
    // Newton step on the free variables with the reduced Hessian block.
    const auto nf = static_cast<Eigen::Index>(free_idx.size());
    if (nf > 0) {
      Eigen::MatrixXd Bf(nf, nf);
      Eigen::VectorXd gf(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        gf[a] = r.gradient[free_idx[a]];
        for (Eigen::Index b = 0; b < nf; ++b) Bf(a, b) = B(free_idx[a], free_idx[b]);
      }
      const Eigen::VectorXd df = -Bf.ldlt().solve(gf);
      for (Eigen::Index a = 0; a < nf; ++a) d[free_idx[a]] = df[a];
    }

    double alpha = 1.0;
    bool accepted = false;
    double f_new = 0.0;
    for (int k = 0; k < opt.max_backtracks; ++k) {
      x_new = project(r.x + alpha * d);
      const Eigen::VectorXd step = x_new - r.x;
      double predicted = 0.0;  // first-order decrease along the arc
      for (Eigen::Index i = 0; i < n; ++i) predicted += r.gradient[i] * step[i];
      if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
      f_new = fn(x_new, g_new);
      ++r.evaluations;
      if (std::isfinite(f_new) && f_new <= r.f + opt.armijo * std::min(predicted, 0.0) && f_new < r.f) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (fresh) break;  // even a gradient step failed
      B = scaled_identity(r.gradient);
      fresh = true;
      continue;
    }

    // Damped BFGS update keeps B positive definite without a curvature test.
    const Eigen::VectorXd s = x_new - r.x;
    Eigen::VectorXd y = g_new - r.gradient;
    if (fresh) {
      const double sy0 = s.dot(y);
      if (sy0 > 0.0) B = Eigen::MatrixXd::Identity(n, n) * (y.squaredNorm() / sy0);
    }
    const Eigen::VectorXd Bs = B * s;
    const double sBs = s.dot(Bs);
    if (sBs > 0.0) {
      const double sy = s.dot(y);
      if (sy < 0.2 * sBs) {
        const double t = 0.8 * sBs / (sBs - sy);
        y = t * y + (1.0 - t) * Bs;
      }
      B += (y * y.transpose()) / s.dot(y) - (Bs * Bs.transpose()) / sBs;
      fresh = false;
    }
    r.x = x_new;
    r.f = f_new;
    r.gradient = g_new;
    ++r.iterations;
  }
  return r;
}

}  // namespace gpmpc::numeric
