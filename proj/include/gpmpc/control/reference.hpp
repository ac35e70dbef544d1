#pragma once

#include <memory>

#include "gpmpc/mpc/solver.hpp"
#include "gpmpc/sim/plant.hpp"
#include "gpmpc/sim/weather.hpp"

namespace gpmpc::control {

/// The true plant as MPC dynamics: exact one-period map, zero variance.
/// Internal gains are taken from the known schedule at the stage time.
class PlantPredictionModel : public mpc::PredictionModel {
 public:
  PlantPredictionModel(const sim::TruthPlant& p, sim::GainSchedule g) : plant_(p), gains_(std::move(g)) {}

  mpc::StagePrediction predict(const Vec3& T, const Vec3&, const Vec3& theta, const mpc::StageDisturbance& d,
                               bool with_gradient) const override {
    const sim::PlantInputs in{theta, d.T_sup, d.T_out, d.R_sol, gains_.at(d.time_s)};
    mpc::StagePrediction out;
    if (!with_gradient) {
      out.mean = sim::plant_step(plant_, T, in);
      return out;
    }
    const auto s = sim::plant_step_sensitivity(plant_, T, in);
    out.mean = s.T;
    out.dmean_dT = s.dT;
    out.dmean_dtheta = s.dtheta;
    return out;
  }

 private:
  sim::TruthPlant plant_;
  sim::GainSchedule gains_;
};

inline mpc::MpcConfig reference_config(mpc::MpcConfig cfg, int horizon = 30) {
  cfg.horizon = horizon;
  cfg.beta = 0.0;
  return cfg;
}

/// Oracle MPC: true dynamics, exact disturbance previews, long horizon.
inline mpc::MpcProblem reference_problem(std::shared_ptr<const PlantPredictionModel> model,
                                         const chiller::ChillerModel& ch, const sim::WeatherScenario& w,
                                         std::size_t k, const Vec3& T, const Vec3& T_prev, const mpc::MpcConfig& cfg) {
  if (k + static_cast<std::size_t>(cfg.horizon) > w.size())
    throw std::invalid_argument("reference_problem: scenario preview shorter than the horizon");
  mpc::MpcProblem p;
  p.model = std::move(model);
  p.chiller = ch;
  p.T0 = T;
  p.T_prev0 = T_prev;
  p.cfg = cfg;
  for (int t = 0; t < cfg.horizon; ++t) {
    const auto j = k + static_cast<std::size_t>(t);
    p.disturbances.push_back({w.T_sup[j], w.T_out[j], w.R_sol[j], w.time(j)});
  }
  return p;
}

class RefController : public Controller {
 public:
  RefController(const sim::TruthPlant& plant, const sim::GainSchedule& gains, const sim::WeatherScenario& w,
                const chiller::ChillerModel& ch, const mpc::MpcConfig& cfg, const PiGains& warm_gains)
      : model_(std::make_shared<PlantPredictionModel>(plant, gains)), w_(w), chiller_(ch), cfg_(cfg),
        gains_(warm_gains) {
    cfg_.validate();
  }

  std::string name() const override { return "REF"; }

  Vec3 act(const Observation& obs) override {
    const auto p = reference_problem(model_, chiller_, w_, static_cast<std::size_t>(obs.step), obs.T, obs.T_prev, cfg_);
    auto [u, sol] = mpc::control_step(p, gains_, prev_);
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

  ControlDiagnostics diagnostics() const override { return diag_; }
  const std::optional<mpc::MpcSolution>& last_solution() const { return prev_; }

 private:
  std::shared_ptr<const PlantPredictionModel> model_;
  sim::WeatherScenario w_;
  chiller::ChillerModel chiller_;
  mpc::MpcConfig cfg_;
  PiGains gains_;
  std::optional<mpc::MpcSolution> prev_;
  ControlDiagnostics diag_;
};

}  // namespace gpmpc::control
