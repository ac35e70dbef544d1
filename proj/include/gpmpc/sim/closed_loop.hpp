#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "gpmpc/chiller/chiller.hpp"
#include "gpmpc/control/controller.hpp"
#include "gpmpc/sim/plant.hpp"
#include "gpmpc/sim/weather.hpp"

namespace gpmpc::sim {

struct TraceRecord {
  double time_s = 0.0;
  Vec3 T{};
  Vec3 theta{};
  double T_sup = 0.0;
  double T_out = 0.0;
  double R_sol = 0.0;
  double E = 0.0;  // kW
  control::ControlDiagnostics diag;
};

struct SimTrace {
  std::string controller;
  std::string scenario;
  double T_init = 0.0;
  double period_s = 600.0;
  std::vector<TraceRecord> records;
  std::string error;  // non-empty when the run stopped early
};

/// Alternates controller and plant at the control period. Weather and
/// internal gains are held constant within a period. The controller sees
/// measured temperatures only. Process noise, when the plant has any, is
/// drawn from `noise_seed`.
inline SimTrace run_closed_loop(const TruthPlant& plant, control::Controller& ctrl, const WeatherScenario& w,
                                const GainSchedule& gains, const chiller::ChillerModel& ch, double T_init,
                                std::size_t steps, std::uint64_t noise_seed = 0) {
  if (steps > w.size()) throw std::invalid_argument("run_closed_loop: scenario shorter than the run");
  SimTrace tr;
  tr.controller = ctrl.name();
  tr.scenario = w.label;
  tr.T_init = T_init;
  tr.period_s = w.period_s;
  std::mt19937_64 rng(noise_seed);
  Vec3 T{T_init, T_init, T_init}, T_prev = T, theta_prev{};
  for (std::size_t k = 0; k < steps; ++k) {
    control::Observation obs;
    obs.step = static_cast<int>(k);
    obs.time_s = w.time(k);
    obs.T = T;
    obs.T_prev = T_prev;
    obs.theta_prev = theta_prev;
    obs.T_sup = w.T_sup[k];
    obs.T_out = w.T_out[k];
    obs.R_sol = w.R_sol[k];
    Vec3 u{};
    try {
      u = ctrl.act(obs);
    } catch (const std::exception& e) {
      tr.error = "step " + std::to_string(k) + ": " + e.what();
      break;
    }
    TraceRecord r;
    r.time_s = obs.time_s;
    r.T = T;
    r.theta = u;
    r.T_sup = obs.T_sup;
    r.T_out = obs.T_out;
    r.R_sol = obs.R_sol;
    r.E = ch.power(obs.T_out, u[0] + u[1] + u[2]).electrical;
    r.diag = ctrl.diagnostics();
    tr.records.push_back(r);

    PlantInputs in{u, obs.T_sup, obs.T_out, obs.R_sol, gains.at(obs.time_s)};
    T_prev = T;
    T = plant_step(plant, T, in, &rng);
    theta_prev = u;
  }
  return tr;
}

struct Metrics {
  double energy_kwh = 0.0;
  double normalized_energy = 0.0;
  double avg_violation = 0.0;  // degC, mean over steps and zones
};

inline double trace_energy_kwh(const SimTrace& tr) {
  double e = 0.0;
  for (const auto& r : tr.records) e += r.E * tr.period_s / 3600.0;
  return e;
}

inline Metrics metrics(const SimTrace& tr, double ref_energy_kwh, double T_max) {
  if (!(ref_energy_kwh > 0.0)) throw std::invalid_argument("metrics: reference energy must be positive");
  Metrics m;
  m.energy_kwh = trace_energy_kwh(tr);
  m.normalized_energy = m.energy_kwh / ref_energy_kwh;
  double v = 0.0;
  for (const auto& r : tr.records)
    for (double T : r.T) v += std::max(0.0, T - T_max);
  m.avg_violation = tr.records.empty() ? 0.0 : v / (3.0 * static_cast<double>(tr.records.size()));
  return m;
}

/// Deterministic per-step columns; solver wall times go to a separate file.
inline std::string format_trace_csv(const SimTrace& tr) {
  std::string out =
      "timestamp,T1,T2,T3,theta1,theta2,theta3,T_sup,T_out,R_sol,E,planned_slack,iterations,kkt_residual,"
      "converged\n";
  for (const auto& r : tr.records) {
    out += util::format_iso8601(static_cast<std::int64_t>(std::llround(r.time_s)));
    for (double v : r.T) out += "," + util::format_double(v);
    for (double v : r.theta) out += "," + util::format_double(v);
    out += "," + util::format_double(r.T_sup) + "," + util::format_double(r.T_out) + "," +
           util::format_double(r.R_sol) + "," + util::format_double(r.E);
    if (r.diag.solver)
      out += "," + util::format_double(r.diag.planned_slack) + "," + std::to_string(r.diag.iterations) + "," +
             util::format_double(r.diag.kkt) + "," + (r.diag.converged ? "1" : "0");
    else
      out += ",,,,";
    out += "\n";
  }
  if (!tr.error.empty()) out += "# error: " + tr.error + "\n";
  return out;
}

}  // namespace gpmpc::sim
