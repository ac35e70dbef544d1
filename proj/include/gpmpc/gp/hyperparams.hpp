#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gpmpc::gp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Parameters of one GP: SE-ARD kernel (signal_std, lengthscales), Gaussian
/// noise (noise_std) and linear mean m(x) = mean_slope . x + mean_offset.
struct Hyperparams {
  double signal_std = 1.0;
  VectorXd lengthscales;
  double noise_std = 0.1;
  VectorXd mean_slope;
  double mean_offset = 0.0;

  Index dim() const { return lengthscales.size(); }

  double mean(const VectorXd& x) const { return mean_slope.dot(x) + mean_offset; }

  void validate() const {
    if (!(signal_std > 0.0) || !std::isfinite(signal_std))
      throw std::invalid_argument("Hyperparams: signal_std must be positive and finite");
    if (!(noise_std > 0.0) || !std::isfinite(noise_std))
      throw std::invalid_argument("Hyperparams: noise_std must be positive and finite");
    if (mean_slope.size() != lengthscales.size())
      throw std::invalid_argument("Hyperparams: mean_slope and lengthscales differ in length");
    for (Index i = 0; i < dim(); ++i) {
      if (!(lengthscales[i] > 0.0) || !std::isfinite(lengthscales[i]))
        throw std::invalid_argument("Hyperparams: lengthscale " + std::to_string(i) +
                                    " must be positive and finite");
      if (!std::isfinite(mean_slope[i]))
        throw std::invalid_argument("Hyperparams: mean_slope must be finite");
    }
    if (!std::isfinite(mean_offset)) throw std::invalid_argument("Hyperparams: mean_offset must be finite");
  }

  static Hyperparams isotropic(Index d, double sigma, double ell, double noise) {
    Hyperparams h;
    h.signal_std = sigma;
    h.lengthscales = VectorXd::Constant(d, ell);
    h.noise_std = noise;
    h.mean_slope = VectorXd::Zero(d);
    h.mean_offset = 0.0;
    return h;
  }

  // Packed optimizer coordinates: [log sigma, log ell_1..d, log sigma_eps, A_1..d, b].
  VectorXd to_log_params() const {
    const Index d = dim();
    VectorXd p(2 * d + 3);
    p[0] = std::log(signal_std);
    p.segment(1, d) = lengthscales.array().log().matrix();
    p[d + 1] = std::log(noise_std);
    p.segment(d + 2, d) = mean_slope;
    p[2 * d + 2] = mean_offset;
    return p;
  }

  static Hyperparams from_log_params(const VectorXd& p) {
    if (p.size() < 3 || (p.size() - 3) % 2 != 0)
      throw std::invalid_argument("Hyperparams: packed vector has invalid length");
    const Index d = (p.size() - 3) / 2;
    Hyperparams h;
    h.signal_std = std::exp(p[0]);
    h.lengthscales = p.segment(1, d).array().exp().matrix();
    h.noise_std = std::exp(p[d + 1]);
    h.mean_slope = p.segment(d + 2, d);
    h.mean_offset = p[2 * d + 2];
    return h;
  }
};

inline Index log_param_count(Index d) { return 2 * d + 3; }

}  // namespace gpmpc::gp
