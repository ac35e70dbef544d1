#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <utility>

#include "gpmpc/control/baselines.hpp"
#include "gpmpc/mpc/problem.hpp"
#include "gpmpc/numeric/box_qn.hpp"
#include "gpmpc/util/text.hpp"

namespace gpmpc::mpc {

struct MpcSolution {
  Eigen::MatrixXd theta;  // N x 3
  Eigen::MatrixXd delta;  // (N+1) x 3
  Eigen::MatrixXd T;      // N x 3, predicted T(1..N)
  Eigen::MatrixXd std;    // N x 3
  Eigen::VectorXd E;      // N
  double objective = 0.0;
  double total_slack = 0.0;
  int iterations = 0;
  int evaluations = 0;
  double kkt = 0.0;
  bool converged = false;
  double wall_seconds = 0.0;
  std::string warm_start;

  Vec3 first_action() const { return {theta(0, 0), theta(0, 1), theta(0, 2)}; }
};

/// Initial trajectories handed to the solver. Only theta is a decision
/// variable; the other trajectories are what theta implies.
struct InitialGuess {
  Eigen::MatrixXd theta;
  Eigen::MatrixXd T;
  Eigen::MatrixXd std;
  Eigen::MatrixXd delta;
  Eigen::VectorXd E;
  std::string source;
};

inline InitialGuess guess_from_theta(const MpcProblem& p, Eigen::MatrixXd theta, std::string source) {
  theta = theta.cwiseMax(p.cfg.theta_min).cwiseMin(p.cfg.theta_max);
  const auto ev = evaluate(p, theta_vector(theta), false);
  return {std::move(theta), ev.T, ev.std, ev.delta, ev.E, std::move(source)};
}

/// Trajectories of a virtual PI loop closed around the prediction model.
inline InitialGuess warm_start(const MpcProblem& p, const control::PiGains& gains) {
  control::PiState pi;
  pi.gains = gains;
  pi.gains.theta_min = p.cfg.theta_min;
  pi.gains.theta_max = p.cfg.theta_max;
  const int N = p.horizon();
  Eigen::MatrixXd theta(N, 3);
  Vec3 T = p.T0, T_prev = p.T_prev0;
  for (int t = 0; t < N; ++t) {
    const auto& d = p.disturbances[static_cast<std::size_t>(t)];
    const Vec3 th = control::pi_step(pi, T, d.T_out);
    for (int i = 0; i < 3; ++i) theta(t, i) = th[i];
    const auto pr = p.model->predict(T, T_prev, th, d, false);
    T_prev = T;
    T = pr.mean;
  }
  return guess_from_theta(p, std::move(theta), "pi");
}

/// Uninformed guess: every valve at mid-stroke.
inline InitialGuess cold_start(const MpcProblem& p) {
  const double mid = 0.5 * (p.cfg.theta_min + p.cfg.theta_max);
  return guess_from_theta(p, Eigen::MatrixXd::Constant(p.horizon(), 3, mid), "cold");
}

/// Previous plan advanced one stage, last stage repeated.
inline InitialGuess shifted_guess(const MpcProblem& p, const MpcSolution& prev) {
  const int N = p.horizon();
  const auto M = static_cast<int>(prev.theta.rows());
  Eigen::MatrixXd theta(N, 3);
  for (int t = 0; t < N; ++t) theta.row(t) = prev.theta.row(std::min(t + 1, M - 1));
  return guess_from_theta(p, std::move(theta), "shifted");
}

/// Local solve from the given guess. On hitting the iteration cap the best
/// iterate is returned with converged = false; bounds hold by projection.
inline MpcSolution solve(const MpcProblem& p, const InitialGuess& guess) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = p.num_vars();
  if (guess.theta.rows() != p.horizon() || guess.theta.cols() != 3)
    throw std::invalid_argument("solve: initial guess has the wrong shape");
  auto fn = [&p](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    auto ev = evaluate(p, x, true);
    g = std::move(ev.gradient);
    return ev.objective;
  };
  numeric::BoxQnOptions opt;
  opt.kkt_tol = p.cfg.kkt_tol;
  opt.max_iterations = p.cfg.max_iterations;
  const auto r = numeric::minimize_box(fn, theta_vector(guess.theta), Eigen::VectorXd::Constant(n, p.cfg.theta_min),
                                       Eigen::VectorXd::Constant(n, p.cfg.theta_max), opt);

  const auto ev = evaluate(p, r.x, false);
  MpcSolution s;
  s.theta = theta_matrix(r.x, p.horizon());
  s.delta = ev.delta;
  s.T = ev.T;
  s.std = ev.std;
  s.E = ev.E;
  s.objective = ev.objective;
  s.total_slack = ev.total_slack;
  s.iterations = r.iterations;
  s.evaluations = r.evaluations;
  s.kkt = r.kkt;
  s.converged = r.converged;
  s.warm_start = guess.source;
  s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return s;
}

/// Local solve from the primary guess and, when cfg.bound_starts is set, from
/// all-closed and all-open valves. Lowest objective wins, ties go to the
/// primary guess; wall time covers all solves.
inline MpcSolution solve_multistart(const MpcProblem& p, const InitialGuess& primary) {
  auto best = solve(p, primary);
  if (!p.cfg.bound_starts) return best;
  double wall = best.wall_seconds;
  const int N = p.horizon();
  for (const auto& [v, name] : {std::pair{p.cfg.theta_min, "closed"}, std::pair{p.cfg.theta_max, "open"}}) {
    auto s = solve(p, guess_from_theta(p, Eigen::MatrixXd::Constant(N, 3, v), name));
    wall += s.wall_seconds;
    if (s.objective < best.objective) best = std::move(s);
  }
  best.wall_seconds = wall;
  return best;
}

/// Receding-horizon wrapper: primary guess is the shifted previous plan when
/// there is one, else the virtual PI loop; apply the first stage.
inline std::pair<Vec3, MpcSolution> control_step(const MpcProblem& p, const control::PiGains& gains,
                                                 const std::optional<MpcSolution>& prev = std::nullopt) {
  const auto guess = prev ? shifted_guess(p, *prev) : warm_start(p, gains);
  auto sol = solve_multistart(p, guess);
  return {sol.first_action(), std::move(sol)};
}

inline std::string format_solution_csv(const MpcSolution& s) {
  std::string out = "stage,theta1,theta2,theta3,delta1,delta2,delta3,T1,T2,T3,std1,std2,std3,E\n";
  for (Eigen::Index t = 0; t < s.theta.rows(); ++t) {
    out += std::to_string(t);
    for (int i = 0; i < 3; ++i) out += "," + util::format_double(s.theta(t, i));
    for (int i = 0; i < 3; ++i) out += "," + util::format_double(s.delta(t + 1, i));
    for (int i = 0; i < 3; ++i) out += "," + util::format_double(s.T(t, i));
    for (int i = 0; i < 3; ++i) out += "," + util::format_double(s.std(t, i));
    out += "," + util::format_double(s.E[t]) + "\n";
  }
  return out;
}

inline std::string format_diagnostics(const MpcSolution& s) {
  util::KeyValues kv;
  kv["objective"] = util::format_double(s.objective);
  kv["total_slack"] = util::format_double(s.total_slack);
  kv["iterations"] = std::to_string(s.iterations);
  kv["evaluations"] = std::to_string(s.evaluations);
  kv["kkt_residual"] = util::format_double(s.kkt);
  kv["converged"] = s.converged ? "true" : "false";
  kv["warm_start"] = s.warm_start;
  kv["wall_seconds"] = util::format_double(s.wall_seconds);
  return util::format_key_values(kv);
}

/// Closed-loop GP-MPC controller. Disturbances are frozen at their latest
/// measurement over the horizon.
class MpcController : public control::Controller {
 public:
  MpcController(std::shared_ptr<const building::ZoneModelSet> models, const chiller::ChillerModel& ch,
                const MpcConfig& cfg, const control::PiGains& warm_gains)
      : models_(std::move(models)), chiller_(ch), cfg_(cfg), gains_(warm_gains) {
    cfg_.validate();
  }

  std::string name() const override { return "MPC"; }

  Vec3 act(const control::Observation& obs) override {
    building::BuildingState s;
    s.T = obs.T;
    s.T_prev = obs.T_prev;
    s.theta = obs.theta_prev;
    s.T_sup = obs.T_sup;
    s.T_out = obs.T_out;
    const auto p = build_problem(models_, chiller_, s, cfg_, obs.time_s);
    auto [u, sol] = control_step(p, gains_, prev_);
    diag_.solver = true;
    diag_.iterations = sol.iterations;
    diag_.kkt = sol.kkt;
    diag_.converged = sol.converged;
    diag_.planned_slack = sol.delta.row(1).squaredNorm();
    diag_.wall_seconds = sol.wall_seconds;
    diag_.warm_start = sol.warm_start;
    prev_ = std::move(sol);
    return u;
  }

  control::ControlDiagnostics diagnostics() const override { return diag_; }
  const std::optional<MpcSolution>& last_solution() const { return prev_; }

 private:
  std::shared_ptr<const building::ZoneModelSet> models_;
  chiller::ChillerModel chiller_;
  MpcConfig cfg_;
  control::PiGains gains_;
  std::optional<MpcSolution> prev_;
  control::ControlDiagnostics diag_;
};

}  // namespace gpmpc::mpc
