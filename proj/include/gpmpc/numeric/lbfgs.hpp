#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace gpmpc::numeric {

using Eigen::VectorXd;

struct LbfgsOptions {
  int max_iterations = 200;
  int memory = 8;
  /// Stop when the infinity norm of the gradient drops below this.
  double gradient_tol = 1e-5;
  int max_line_search = 40;
  double c1 = 1e-4;
  double c2 = 0.9;
};

struct LbfgsResult {
  VectorXd x;
  double f = 0.0;
  VectorXd gradient;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool line_search_failed = false;
};

namespace detail {

struct TrialPoint {
  double step = 0.0;
  double f = 0.0;
  double slope = 0.0;
  VectorXd x;
  VectorXd g;
};

template <class Fn>
bool evaluate(Fn& fn, const VectorXd& x, double& f, VectorXd& g) {
  try {
    f = fn(x, g);
  } catch (const std::exception&) {
    f = std::numeric_limits<double>::infinity();
  }
  return std::isfinite(f) && g.allFinite();
}

// Strong Wolfe line search (bracketing + zoom with safeguarded quadratic steps).
template <class Fn>
bool wolfe_search(Fn& fn, const VectorXd& x, double f0, const VectorXd& g0, const VectorXd& p, double step0,
                  const LbfgsOptions& opt, TrialPoint& out, int& evals) {
  const double d0 = g0.dot(p);
  auto trial = [&](double a) {
    TrialPoint t;
    t.step = a;
    t.x = x + a * p;
    t.g.resize(x.size());
    ++evals;
    if (!evaluate(fn, t.x, t.f, t.g)) {
      t.f = std::numeric_limits<double>::infinity();
      t.slope = std::numeric_limits<double>::infinity();
    } else {
      t.slope = t.g.dot(p);
    }
    return t;
  };
  auto sufficient = [&](const TrialPoint& t) { return t.f <= f0 + opt.c1 * t.step * d0; };
  auto curvature = [&](const TrialPoint& t) { return std::abs(t.slope) <= -opt.c2 * d0; };

  TrialPoint best;
  best.f = f0;
  bool have_best = false;
  auto remember = [&](const TrialPoint& t) {
    if (std::isfinite(t.f) && sufficient(t) && t.f < best.f) {
      best = t;
      have_best = true;
    }
  };

  TrialPoint lo;
  lo.step = 0.0;
  lo.f = f0;
  lo.slope = d0;
  TrialPoint hi;
  bool bracketed = false;
  double a = step0;
  int budget = opt.max_line_search;
  while (budget-- > 0) {
    TrialPoint t = trial(a);
    remember(t);
    if (!sufficient(t) || t.f >= lo.f) {
      hi = t;
      bracketed = true;
      break;
    }
    if (curvature(t)) {
      out = std::move(t);
      return true;
    }
    if (t.slope >= 0.0) {
      hi = lo;
      lo = t;
      bracketed = true;
      break;
    }
    lo = t;
    a *= 2.0;
  }
  while (bracketed && budget-- > 0) {
    const double width = hi.step - lo.step;
    double a_j = 0.5 * (lo.step + hi.step);
    if (std::isfinite(hi.f)) {
      const double denom = 2.0 * (hi.f - lo.f - lo.slope * width);
      if (denom > 0.0) a_j = lo.step - lo.slope * width * width / denom;
      const double lo_b = lo.step + 0.1 * width;
      const double hi_b = hi.step - 0.1 * width;
      a_j = std::clamp(a_j, std::min(lo_b, hi_b), std::max(lo_b, hi_b));
    }
    TrialPoint t = trial(a_j);
    remember(t);
    if (!sufficient(t) || t.f >= lo.f) {
      hi = std::move(t);
    } else {
      if (curvature(t)) {
        out = std::move(t);
        return true;
      }
      if (t.slope * (hi.step - lo.step) >= 0.0) hi = lo;
      lo = std::move(t);
    }
    if (std::abs(hi.step - lo.step) < 1e-16 * std::max(1.0, std::abs(lo.step))) break;
  }
  if (have_best) {
    out = std::move(best);
    return true;
  }
  return false;
}

}  // namespace detail

/// Limited-memory BFGS for smooth unconstrained minimization.
/// `fn(x, grad)` returns f(x) and writes the gradient; throwing or returning
/// a non-finite value marks the point as infeasible for the line search.
/// The returned point never has a larger objective than x0.
template <class Fn>
LbfgsResult minimize_lbfgs(Fn&& fn, VectorXd x0, const LbfgsOptions& opt = {}) {
  LbfgsResult res;
  res.x = std::move(x0);
  res.gradient.resize(res.x.size());
  ++res.evaluations;
  if (!detail::evaluate(fn, res.x, res.f, res.gradient)) {
    res.line_search_failed = true;
    return res;
  }
  std::deque<VectorXd> S, Y;
  std::deque<double> rho;
  if (res.gradient.lpNorm<Eigen::Infinity>() <= opt.gradient_tol) {
    res.converged = true;
    return res;
  }
  bool retried = false;
  while (res.iterations < opt.max_iterations) {
    // two-loop recursion
    VectorXd q = res.gradient;
    std::vector<double> a(S.size());
    for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
      a[i] = rho[i] * S[i].dot(q);
      q -= a[i] * Y[i];
    }
    if (!S.empty()) q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
    for (std::size_t i = 0; i < S.size(); ++i) {
      const double b = rho[i] * Y[i].dot(q);
      q += (a[i] - b) * S[i];
    }
    VectorXd p = -q;
    if (p.dot(res.gradient) >= 0.0) {
      S.clear();
      Y.clear();
      rho.clear();
      p = -res.gradient;
    }
    const double step0 = S.empty() ? std::min(1.0, 1.0 / p.lpNorm<Eigen::Infinity>()) : 1.0;

    detail::TrialPoint t;
    if (!detail::wolfe_search(fn, res.x, res.f, res.gradient, p, step0, opt, t, res.evaluations)) {
      if (!S.empty() && !retried) {
        S.clear();
        Y.clear();
        rho.clear();
        retried = true;
        continue;
      }
      res.line_search_failed = true;
      break;
    }
    retried = false;
    VectorXd s = t.x - res.x;
    VectorXd y = t.g - res.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opt.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    res.x = std::move(t.x);
    res.f = t.f;
    res.gradient = std::move(t.g);
    ++res.iterations;
    if (res.gradient.lpNorm<Eigen::Infinity>() <= opt.gradient_tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace gpmpc::numeric
