#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpmpc/building/model.hpp"
#include "gpmpc/chiller/chiller.hpp"

namespace gpmpc::mpc {

using building::Vec3;

struct MpcConfig {
  int horizon = 12;
  double T_max = 21.0;
  double beta = 2.0;
  double rho = 100.0;    // stage slack weight
  double rho_N = 200.0;  // terminal slack weight
  double theta_min = 0.0;
  double theta_max = 90.0;
  double kkt_tol = 1e-6;
  int max_iterations = 300;
  double std_smoothing = 1e-12;  // added to the variance inside the square root
  bool bound_starts = true;      // also start from all-closed and all-open valves

  void validate() const {
    if (horizon < 1) throw std::invalid_argument("MpcConfig: horizon must be >= 1");
    if (!(rho > 0.0) || !(rho_N > 0.0)) throw std::invalid_argument("MpcConfig: slack weights must be positive");
    if (!(beta >= 0.0)) throw std::invalid_argument("MpcConfig: beta must be >= 0");
    if (!(theta_min < theta_max)) throw std::invalid_argument("MpcConfig: theta_min must be < theta_max");
    if (!(kkt_tol > 0.0) || max_iterations < 1) throw std::invalid_argument("MpcConfig: invalid solver settings");
  }
};

/// Disturbances assumed over one prediction stage.
struct StageDisturbance {
  double T_sup = 0.0;
  double T_out = 0.0;
  double R_sol = 0.0;
  double time_s = 0.0;
};

/// Mean and variance of T(t+1) with Jacobians (row = zone) w.r.t. T(t),
/// T(t-1) and theta(t).
struct StagePrediction {
  Vec3 mean{};
  Vec3 var{};
  Eigen::Matrix3d dmean_dT = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d dmean_dTprev = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d dmean_dtheta = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d dvar_dT = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d dvar_dTprev = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d dvar_dtheta = Eigen::Matrix3d::Zero();
};

/// One-step dynamics used inside the optimizer.
class PredictionModel {
 public:
  virtual ~PredictionModel() = default;
  virtual StagePrediction predict(const Vec3& T, const Vec3& T_prev, const Vec3& theta, const StageDisturbance& d,
                                  bool with_gradient) const = 0;
};

/// The trained zone GPs as MPC dynamics: mean and point-wise variance.
class GpPredictionModel : public PredictionModel {
 public:
  explicit GpPredictionModel(std::shared_ptr<const building::ZoneModelSet> m) : m_(std::move(m)) {
    if (!m_ || !m_->trained()) throw std::invalid_argument("GpPredictionModel: untrained model set");
  }

  StagePrediction predict(const Vec3& T, const Vec3& T_prev, const Vec3& theta, const StageDisturbance& d,
                          bool with_gradient) const override {
    building::BuildingState s;
    s.T = T;
    s.T_prev = T_prev;
    s.theta = theta;
    s.T_sup = d.T_sup;
    s.T_out = d.T_out;
    StagePrediction out;
    for (int z = 0; z < 3; ++z) {
      const auto p = m_->predict(z, s, with_gradient);
      out.mean[z] = p.mean;
      out.var[z] = p.var;
      if (!with_gradient) continue;
      for (int j = 0; j < 3; ++j) {
        out.dmean_dT(z, j) = p.dmean[building::slot::T + j];
        out.dmean_dTprev(z, j) = p.dmean[building::slot::T_prev + j];
        out.dmean_dtheta(z, j) = p.dmean[building::slot::theta + j];
        out.dvar_dT(z, j) = p.dvar[building::slot::T + j];
        out.dvar_dTprev(z, j) = p.dvar[building::slot::T_prev + j];
        out.dvar_dtheta(z, j) = p.dvar[building::slot::theta + j];
      }
    }
    return out;
  }

  const building::ZoneModelSet& models() const { return *m_; }

 private:
  std::shared_ptr<const building::ZoneModelSet> m_;
};

/// Single-shooting program over theta (N x 3). Temperatures follow from the
/// model recursion; slacks are eliminated as delta = max(0, T + beta*std - T_max)
/// on stages 1..N, which is their exact minimizer for any theta.
struct MpcProblem {
  std::shared_ptr<const PredictionModel> model;
  chiller::ChillerModel chiller;
  Vec3 T0{};
  Vec3 T_prev0{};
  std::vector<StageDisturbance> disturbances;  // one per stage, size N
  MpcConfig cfg;

  int horizon() const { return cfg.horizon; }
  int num_vars() const { return 3 * cfg.horizon; }
};

/// Frozen-disturbance problem around the current measured state.
inline MpcProblem build_problem(std::shared_ptr<const building::ZoneModelSet> m, const chiller::ChillerModel& ch,
                                const building::BuildingState& s0, const MpcConfig& cfg, double time_s = 0.0) {
  cfg.validate();
  if (!m || !m->trained()) throw std::invalid_argument("build_problem: untrained model set");
  MpcProblem p;
  p.model = std::make_shared<GpPredictionModel>(std::move(m));
  p.chiller = ch;
  p.T0 = s0.T;
  p.T_prev0 = s0.T_prev;
  p.cfg = cfg;
  for (int t = 0; t < cfg.horizon; ++t) p.disturbances.push_back({s0.T_sup, s0.T_out, 0.0, time_s + 600.0 * t});
  return p;
}

/// Objective and trajectories at one theta.
struct Evaluation {
  double objective = 0.0;
  Eigen::VectorXd gradient;  // empty unless requested
  Eigen::MatrixXd T;         // N x 3, T(1..N)
  Eigen::MatrixXd std;       // N x 3
  Eigen::MatrixXd delta;     // (N+1) x 3, row 0 is the unconstrained measured stage
  Eigen::VectorXd E;         // N, kW
  double total_slack = 0.0;  // sum of Delta_t over stages 1..N
};

inline Eigen::MatrixXd theta_matrix(const Eigen::VectorXd& x, int N) {
  Eigen::MatrixXd th(N, 3);
  for (int t = 0; t < N; ++t)
    for (int i = 0; i < 3; ++i) th(t, i) = x[3 * t + i];
  return th;
}

inline Eigen::VectorXd theta_vector(const Eigen::MatrixXd& th) {
  Eigen::VectorXd x(th.size());
  for (Eigen::Index t = 0; t < th.rows(); ++t)
    for (int i = 0; i < 3; ++i) x[3 * t + i] = th(t, i);
  return x;
}

/// Objective sum_{t<N} (E_t + rho Delta_t) + rho_N Delta_N with forward
/// sensitivities of the temperature recursion for the gradient.
inline Evaluation evaluate(const MpcProblem& p, const Eigen::VectorXd& x, bool with_gradient) {
  const int N = p.horizon();
  const int n = p.num_vars();
  if (x.size() != n) throw std::invalid_argument("evaluate: decision vector has the wrong size");
  const auto& cfg = p.cfg;
  Evaluation ev;
  ev.T.resize(N, 3);
  ev.std.resize(N, 3);
  ev.delta = Eigen::MatrixXd::Zero(N + 1, 3);
  ev.E.resize(N);
  if (with_gradient) ev.gradient = Eigen::VectorXd::Zero(n);

  Vec3 T = p.T0, T_prev = p.T_prev0;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(3, with_gradient ? n : 0);  // dT(t)/dx
  Eigen::MatrixXd S_prev = S;                                           // dT(t-1)/dx
  Eigen::MatrixXd S_next, V;
  for (int t = 0; t < N; ++t) {
    const Vec3 th{x[3 * t], x[3 * t + 1], x[3 * t + 2]};
    const auto& d = p.disturbances[static_cast<std::size_t>(t)];
    const auto pr = p.model->predict(T, T_prev, th, d, with_gradient);

    const double Theta = th[0] + th[1] + th[2];
    const auto pw = p.chiller.power(d.T_out, Theta);
    ev.E[t] = pw.electrical;
    ev.objective += pw.electrical;

    if (with_gradient) {
      S_next = pr.dmean_dT * S + pr.dmean_dTprev * S_prev;
      S_next.middleCols(3 * t, 3) += pr.dmean_dtheta;
      V = pr.dvar_dT * S + pr.dvar_dTprev * S_prev;
      V.middleCols(3 * t, 3) += pr.dvar_dtheta;
      ev.gradient.segment(3 * t, 3).array() += pw.d_theta;
    }

    const double w = (t + 1 == N) ? cfg.rho_N : cfg.rho;
    for (int i = 0; i < 3; ++i) {
      const double sd = std::sqrt(pr.var[i] + cfg.std_smoothing);
      ev.T(t, i) = pr.mean[i];
      ev.std(t, i) = sd;
      const double g = pr.mean[i] + cfg.beta * sd - cfg.T_max;
      if (g <= 0.0) continue;
      ev.delta(t + 1, i) = g;
      ev.objective += w * g * g;
      ev.total_slack += g * g;
      if (with_gradient) ev.gradient += 2.0 * w * g * (S_next.row(i) + cfg.beta / (2.0 * sd) * V.row(i)).transpose();
    }

    T_prev = T;
    T = pr.mean;
    if (with_gradient) {
      S_prev = std::move(S);
      S = std::move(S_next);
    }
  }
  return ev;
}

}  // namespace gpmpc::mpc
