#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "gpmpc/errors.hpp"
#include "gpmpc/gp/dataset.hpp"
#include "gpmpc/gp/hyperparams.hpp"
#include "gpmpc/gp/kernel.hpp"

namespace gpmpc::gp {

namespace detail {

struct JitteredCholesky {
  MatrixXd L;
  double jitter = 0.0;
};

// Cholesky of K + (noise^2 + jitter) I. Jitter starts at 1e-10 sigma^2 and
// grows by 10x up to 1e-4 sigma^2.
inline JitteredCholesky jittered_cholesky(const MatrixXd& K, double signal_var, double noise_var) {
  const Index n = K.rows();
  double jitter = 1e-10 * signal_var;
  for (int attempt = 0; attempt < 7; ++attempt, jitter *= 10.0) {
    MatrixXd A = K;
    A.diagonal().array() += noise_var + jitter;
    Eigen::LLT<MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) continue;
    MatrixXd L = llt.matrixL();
    bool ok = true;
    for (Index i = 0; i < n && ok; ++i) ok = std::isfinite(L(i, i)) && L(i, i) > 0.0;
    if (ok) return {std::move(L), jitter};
  }
  throw NumericalError("Cholesky factorization failed after jitter escalation", jitter / 10.0);
}

}  // namespace detail

/// Mean and variance at one query point, with gradients w.r.t. the query.
struct PointPrediction {
  double mean = 0.0;
  double var = 0.0;
  VectorXd dmean;
  VectorXd dvar;
};

/// Trained exact-inference GP. Immutable after fit(); all queries are const
/// and safe to call concurrently.
class GpPosterior {
 public:
  GpPosterior() = default;

  const Dataset& dataset() const { return data_; }
  const Hyperparams& hyperparams() const { return hyp_; }
  /// Lower-triangular factor of K + sigma_eps^2 I + jitter I.
  const MatrixXd& chol_factor() const { return L_; }
  /// (K + sigma_eps^2 I)^{-1} (y - m_X).
  const VectorXd& alpha() const { return alpha_; }
  double jitter() const { return jitter_; }
  Index size() const { return data_.size(); }
  Index dim() const { return hyp_.dim(); }
  bool fitted() const { return fitted_; }

  double predict_mean(const VectorXd& x) const {
    check_query(x);
    if (size() == 0) return hyp_.mean(x);
    return hyp_.mean(x) + kernel_vector(x).dot(alpha_);
  }

  /// Latent posterior variance, clamped at zero.
  double predict_var(const VectorXd& x) const {
    check_query(x);
    const double s2 = hyp_.signal_std * hyp_.signal_std;
    if (size() == 0) return s2;
    VectorXd v = kernel_vector(x);
    L_.triangularView<Eigen::Lower>().solveInPlace(v);
    return std::max(0.0, s2 - v.squaredNorm());
  }

  /// Mean and variance together; gradients are filled when requested.
  PointPrediction predict(const VectorXd& x, bool with_gradient = false) const {
    check_query(x);
    const Index d = dim();
    const double s2 = hyp_.signal_std * hyp_.signal_std;
    PointPrediction out;
    out.mean = hyp_.mean(x);
    out.var = s2;
    if (with_gradient) {
      out.dmean = hyp_.mean_slope;
      out.dvar = VectorXd::Zero(d);
    }
    if (size() == 0) return out;

    const VectorXd z = x.cwiseProduct(inv_ell_);
    const VectorXd k = kernel_vector(x);
    out.mean += k.dot(alpha_);
    VectorXd v = k;
    L_.triangularView<Eigen::Lower>().solveInPlace(v);
    const double var = s2 - v.squaredNorm();
    out.var = std::max(0.0, var);
    if (!with_gradient) return out;

    // dk_n/dx_j = -k_n (z_j - Z_jn) / ell_j
    const VectorXd ak = alpha_.cwiseProduct(k);
    out.dmean.array() -= (z * ak.sum() - scaled_X_ * ak).array() * inv_ell_.array();
    if (var > 0.0) {
      L_.transpose().triangularView<Eigen::Upper>().solveInPlace(v);  // v <- K_y^{-1} k
      const VectorXd wk = v.cwiseProduct(k);
      out.dvar = 2.0 * ((z * wk.sum() - scaled_X_ * wk).array() * inv_ell_.array()).matrix();
    }
    return out;
  }

  /// k_X(x): kernel evaluations between x and every training input.
  VectorXd kernel_vector(const VectorXd& x) const {
    const double s2 = hyp_.signal_std * hyp_.signal_std;
    const VectorXd z = x.cwiseProduct(inv_ell_);
    VectorXd k(size());
    for (Index n = 0; n < size(); ++n) k[n] = s2 * std::exp(-0.5 * (scaled_X_.col(n) - z).squaredNorm());
    return k;
  }

  friend GpPosterior fit(Dataset data, Hyperparams h);

 private:
  void check_query(const VectorXd& x) const {
    if (!fitted_) throw std::logic_error("GpPosterior: model has not been fitted");
    if (x.size() != dim()) throw std::invalid_argument("GpPosterior: query dimension mismatch");
  }

  Dataset data_;
  Hyperparams hyp_;
  MatrixXd L_;
  VectorXd alpha_;
  double jitter_ = 0.0;
  MatrixXd scaled_X_;  // d x N, column n = X_n ./ ell
  VectorXd inv_ell_;
  bool fitted_ = false;
};

/// Factorize and precompute the weight vector. An empty dataset yields the
/// prior (mean m(x), variance sigma^2).
inline GpPosterior fit(Dataset data, Hyperparams h) {
  h.validate();
  data.validate();
  if (data.size() > 0 && data.dim() != h.dim())
    throw std::invalid_argument("fit: dataset dimension does not match hyperparameters");

  GpPosterior p;
  p.inv_ell_ = h.lengthscales.cwiseInverse();
  const Index n = data.size();
  if (n > 0) {
    const double s2 = h.signal_std * h.signal_std;
    const MatrixXd K = kernel_matrix(data.X, h);
    auto chol = detail::jittered_cholesky(K, s2, h.noise_std * h.noise_std);
    VectorXd r(n);
    for (Index i = 0; i < n; ++i) r[i] = data.y[i] - h.mean(data.X.row(i).transpose());
    p.alpha_ = chol.L.triangularView<Eigen::Lower>().solve(r);
    chol.L.transpose().triangularView<Eigen::Upper>().solveInPlace(p.alpha_);
    p.L_ = std::move(chol.L);
    p.jitter_ = chol.jitter;
    p.scaled_X_ = (data.X * p.inv_ell_.asDiagonal()).transpose();
  } else {
    p.L_.resize(0, 0);
    p.alpha_.resize(0);
    p.scaled_X_.resize(h.dim(), 0);
  }
  p.data_ = std::move(data);
  p.hyp_ = std::move(h);
  p.fitted_ = true;
  return p;
}

}  // namespace gpmpc::gp
