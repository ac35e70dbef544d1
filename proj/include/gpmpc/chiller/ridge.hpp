#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gpmpc/chiller/chiller.hpp"
#include "gpmpc/errors.hpp"

namespace gpmpc::chiller {

struct ChillerSample {
  double T_out = 0.0;
  double Theta = 0.0;
  double Q = 0.0;
};

struct RidgeFit {
  PolySurface2 surface;
  double residual_norm = 0.0;  // weighted 2-norm of Q - fit
};

/// Polynomial ridge regression of Q on the monomials of (T_out, Theta) up to
/// the given total degree (1..3). The penalty acts on standardized monomials
/// and leaves the constant free. Optional non-negative per-sample weights.
inline RidgeFit fit_ridge(const std::vector<ChillerSample>& samples, int degree, double lambda,
                          const std::vector<double>& weights = {}) {
  if (degree < 1 || degree > 3) throw std::invalid_argument("fit_ridge: degree must be 1, 2 or 3");
  if (!(lambda >= 0.0)) throw std::invalid_argument("fit_ridge: lambda must be >= 0");
  if (!weights.empty() && weights.size() != samples.size())
    throw std::invalid_argument("fit_ridge: one weight per sample required");

  std::vector<int> cols;
  for (int j = 0; j < 9; ++j)
    if (PolySurface2::kDegree[j] <= degree) cols.push_back(j);
  const auto p = static_cast<Eigen::Index>(cols.size());
  if (samples.size() < cols.size() + 1)
    throw std::invalid_argument("fit_ridge: need at least " + std::to_string(cols.size() + 1) + " samples");

  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd Z(n, p);
  Eigen::VectorXd q(n), w = Eigen::VectorXd::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    const auto m = PolySurface2::monomials(s.T_out, s.Theta);
    for (Eigen::Index j = 0; j < p; ++j) Z(i, j) = m[static_cast<std::size_t>(cols[j])];
    q[i] = s.Q;
    if (!weights.empty()) {
      w[i] = weights[static_cast<std::size_t>(i)];
      if (!(w[i] >= 0.0)) throw std::invalid_argument("fit_ridge: weights must be >= 0");
    }
  }
  const double wsum = w.sum();
  if (!(wsum > 0.0)) throw std::invalid_argument("fit_ridge: weights sum to zero");

  // Weighted centring removes the intercept; scaling gives unit weighted variance.
  const Eigen::RowVectorXd mu = (w.asDiagonal() * Z).colwise().sum() / wsum;
  const double qmu = w.dot(q) / wsum;
  Eigen::MatrixXd Zc = Z.rowwise() - mu;
  Eigen::VectorXd scale(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    scale[j] = std::sqrt(w.dot(Zc.col(j).cwiseAbs2()) / wsum);
    if (!(scale[j] > 0.0)) scale[j] = 1.0;
    Zc.col(j) /= scale[j];
  }
  const Eigen::VectorXd sw = w.cwiseSqrt();
  Eigen::MatrixXd A(n + p, p);
  A.topRows(n) = sw.asDiagonal() * Zc;
  A.bottomRows(p) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(p, p);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + p);
  rhs.head(n) = sw.cwiseProduct(q.array().matrix() - Eigen::VectorXd::Constant(n, qmu));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < p)
    throw NumericalError("fit_ridge: design matrix is rank deficient; use lambda > 0");
  const Eigen::VectorXd beta = qr.solve(rhs);

  RidgeFit out;
  double constant = qmu;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double c = beta[j] / scale[j];
    out.surface.coeffs[static_cast<std::size_t>(cols[j])] = c;
    constant -= c * mu[j];
  }
  out.surface.coeffs[9] = constant;
  double r2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    const double r = s.Q - out.surface(s.T_out, s.Theta);
    r2 += w[i] * r * r;
  }
  out.residual_norm = std::sqrt(r2);
  return out;
}

inline RidgeFit fit_ridge(const std::vector<ChillerSample>& samples) { return fit_ridge(samples, 3, 1e-3); }

/// Appends zero-flow rows (T_out, 0, 0) for each grid temperature.
inline std::vector<ChillerSample> augment_zero_flow(std::vector<ChillerSample> samples,
                                                    const std::vector<double>& T_out_grid) {
  if (T_out_grid.empty()) throw std::invalid_argument("augment_zero_flow: empty grid");
  for (double T : T_out_grid) samples.push_back({T, 0.0, 0.0});
  return samples;
}

}  // namespace gpmpc::chiller
