#pragma once

#include <algorithm>
#include <cmath>

#include "gpmpc/control/baselines.hpp"
#include "gpmpc/sim/plant.hpp"

namespace gpmpc::sim {

/// Operating point of the open-loop step tests.
struct StepTestPoint {
  double theta = 45.0;
  double step = 10.0;
  double T_out = 28.0;
  double T_sup = 10.5;
  double R_sol = 400.0;
  int max_periods = 144;
};

/// First-order-plus-dead-time fit of one zone's valve step response.
struct StepResponse {
  double gain = 0.0;      // degC per deg, negative for cooling
  double tau_s = 0.0;     // 63 % rise time
  double dead_s = 0.0;    // one control period: the valve acts through the next sample
};

inline StepResponse step_test(const TruthPlant& p, int zone, const StepTestPoint& op) {
  PlantInputs in{{op.theta, op.theta, op.theta}, op.T_sup, op.T_out, op.R_sol, p.occupancy_gain};
  const Vec3 T0 = equilibrium(p, in);
  in.theta[zone] += op.step;
  const Vec3 T_inf = equilibrium(p, in);
  const double dT = T_inf[zone] - T0[zone];
  StepResponse r;
  r.gain = dT / op.step;
  r.dead_s = p.control_period_s();
  Vec3 T = T0;
  for (int k = 1; k <= op.max_periods; ++k) {
    T = plant_step(p, T, in);
    if (std::abs(T[zone] - T0[zone]) >= 0.632 * std::abs(dT)) {
      r.tau_s = k * p.control_period_s();
      break;
    }
  }
  if (r.tau_s == 0.0) r.tau_s = op.max_periods * p.control_period_s();
  return r;
}

/// PI gains from open-loop step tests with the SIMC rules (closed-loop time
/// constant = 2 x dead time), plus a static feedforward from the linearized
/// equilibrium: the valve change that cancels a 1 degC rise of T_out.
inline control::PiGains tune_pi(const TruthPlant& p, double setpoint = 20.5, double theta_min = 0.0,
                                double theta_max = 90.0, const StepTestPoint& op = {}) {
  control::PiGains g;
  g.setpoint = setpoint;
  g.theta_min = theta_min;
  g.theta_max = theta_max;
  const double period = p.control_period_s();
  double kff = 0.0;
  for (int z = 0; z < 3; ++z) {
    const auto r = step_test(p, z, op);
    const double tau_c = 2.0 * r.dead_s;
    const double kc = r.tau_s / (std::abs(r.gain) * (tau_c + r.dead_s));
    const double ti = std::min(r.tau_s, 4.0 * (tau_c + r.dead_s));
    g.kp[z] = kc;
    g.ki[z] = kc * period / ti;

    PlantInputs in{{op.theta, op.theta, op.theta}, op.T_sup, op.T_out, op.R_sol, p.occupancy_gain};
    const double base = equilibrium(p, in)[z];
    in.T_out += 1.0;
    const double dT_out = equilibrium(p, in)[z] - base;
    kff += dT_out / std::abs(r.gain) / 3.0;
  }
  g.kff = kff;
  return g;
}

}  // namespace gpmpc::sim
