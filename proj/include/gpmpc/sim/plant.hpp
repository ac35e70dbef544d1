#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "gpmpc/building/model.hpp"

namespace gpmpc::sim {

using building::Vec3;

/// Three-zone RC network cooled by an air-handling unit per zone. Each AHU
/// blows outdoor air through a chilled-water coil; the coil effectiveness
/// rises with the valve angle along a saturating curve.
struct TruthPlant {
  Vec3 capacitance{2500.0, 3000.0, 2800.0};  // kJ/K
  Vec3 envelope_ua{0.08, 0.10, 0.12};        // kW/K to outdoor air
  Vec3 ventilation{0.40, 0.42, 0.33};        // kW/K supply air heat-capacity flow
  double coupling_12 = 0.05;                 // kW/K
  double coupling_23 = 0.05;                 // kW/K
  double coil_effectiveness = 0.8;           // at full opening
  double valve_curvature = 3.0;              // 0 would be linear
  Vec3 solar_gain{0.00003, 0.00005, 0.00008};  // kW per W/m^2
  Vec3 occupancy_gain{0.05, 0.06, 0.06};       // kW during working hours
  double theta_max = 90.0;                   // full opening, degrees
  double substep_s = 120.0;
  int substeps = 5;                          // per control period
  double process_noise_std = 0.0;            // degC per substep

  /// Fraction of the supply-to-outdoor temperature gap removed by the coil.
  double valve_effect(double theta) const {
    const double u = std::clamp(theta / theta_max, 0.0, 1.0);
    const double a = valve_curvature;
    return coil_effectiveness * (1.0 - std::exp(-a * u)) / (1.0 - std::exp(-a));
  }
  double valve_effect_derivative(double theta) const {
    if (theta < 0.0 || theta > theta_max) return 0.0;
    const double a = valve_curvature;
    return coil_effectiveness * a * std::exp(-a * theta / theta_max) / ((1.0 - std::exp(-a)) * theta_max);
  }

  double control_period_s() const { return substep_s * substeps; }

  /// Every physical constant scaled by an independent factor in [1 - rel, 1 + rel].
  TruthPlant perturbed(std::uint64_t seed, double rel = 0.1) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(1.0 - rel, 1.0 + rel);
    TruthPlant p = *this;
    for (auto* v : {&p.capacitance, &p.envelope_ua, &p.ventilation, &p.solar_gain, &p.occupancy_gain})
      for (double& x : *v) x *= u(rng);
    p.coupling_12 *= u(rng);
    p.coupling_23 *= u(rng);
    p.coil_effectiveness = std::min(0.95, p.coil_effectiveness * u(rng));
    p.valve_curvature *= u(rng);
    return p;
  }
};

/// Boundary conditions seen by the plant over one substep.
struct PlantInputs {
  Vec3 theta{};
  double T_sup = 0.0;
  double T_out = 0.0;
  double R_sol = 0.0;
  Vec3 internal_gain{};  // kW, occupancy and other unmeasured loads
};

/// Net heat flow into every zone, kW.
inline Vec3 heat_flows(const TruthPlant& p, const Vec3& T, const PlantInputs& in) {
  Vec3 q{};
  for (int i = 0; i < 3; ++i) {
    const double T_air = in.T_out - p.valve_effect(in.theta[i]) * (in.T_out - in.T_sup);
    q[i] = p.envelope_ua[i] * (in.T_out - T[i]) + p.ventilation[i] * (T_air - T[i]) + p.solar_gain[i] * in.R_sol +
           in.internal_gain[i];
  }
  q[0] += p.coupling_12 * (T[1] - T[0]);
  q[1] += p.coupling_12 * (T[0] - T[1]) + p.coupling_23 * (T[2] - T[1]);
  q[2] += p.coupling_23 * (T[1] - T[2]);
  return q;
}

/// One explicit-Euler substep. Process noise, when enabled, is drawn from rng.
inline Vec3 plant_substep(const TruthPlant& p, const Vec3& T, const PlantInputs& in, std::mt19937_64* rng = nullptr) {
  const auto q = heat_flows(p, T, in);
  Vec3 out{};
  for (int i = 0; i < 3; ++i) out[i] = T[i] + p.substep_s * q[i] / p.capacitance[i];
  if (p.process_noise_std > 0.0 && rng) {
    std::normal_distribution<double> g(0.0, p.process_noise_std);
    for (double& x : out) x += g(*rng);
  }
  return out;
}

/// One control period with inputs held constant.
inline Vec3 plant_step(const TruthPlant& p, Vec3 T, const PlantInputs& in, std::mt19937_64* rng = nullptr) {
  for (int k = 0; k < p.substeps; ++k) T = plant_substep(p, T, in, rng);
  return T;
}

/// plant_step with Jacobians w.r.t. the start temperatures and the valves.
struct PlantStepSensitivity {
  Vec3 T{};
  Eigen::Matrix3d dT = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d dtheta = Eigen::Matrix3d::Zero();
};

inline PlantStepSensitivity plant_step_sensitivity(const TruthPlant& p, const Vec3& T0, const PlantInputs& in) {
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();  // dq/dT
  Eigen::Matrix3d B = Eigen::Matrix3d::Zero();  // dq/dtheta
  for (int i = 0; i < 3; ++i) {
    A(i, i) = -p.envelope_ua[i] - p.ventilation[i];
    B(i, i) = -p.ventilation[i] * p.valve_effect_derivative(in.theta[i]) * (in.T_out - in.T_sup);
  }
  A(0, 0) -= p.coupling_12;
  A(0, 1) += p.coupling_12;
  A(1, 0) += p.coupling_12;
  A(1, 1) -= p.coupling_12 + p.coupling_23;
  A(1, 2) += p.coupling_23;
  A(2, 1) += p.coupling_23;
  A(2, 2) -= p.coupling_23;
  Eigen::Vector3d invc(1.0 / p.capacitance[0], 1.0 / p.capacitance[1], 1.0 / p.capacitance[2]);
  const Eigen::Matrix3d M = Eigen::Matrix3d::Identity() + p.substep_s * invc.asDiagonal() * A;
  const Eigen::Matrix3d N = p.substep_s * invc.asDiagonal() * B;

  PlantStepSensitivity s;
  s.T = T0;
  for (int k = 0; k < p.substeps; ++k) {
    s.T = plant_substep(p, s.T, in);
    s.dT = M * s.dT;
    s.dtheta = M * s.dtheta + N;
  }
  return s;
}

/// Steady state of the plant for constant inputs (linear solve).
inline Vec3 equilibrium(const TruthPlant& p, const PlantInputs& in) {
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b;
  for (int i = 0; i < 3; ++i) {
    const double T_air = in.T_out - p.valve_effect(in.theta[i]) * (in.T_out - in.T_sup);
    A(i, i) = p.envelope_ua[i] + p.ventilation[i];
    b[i] = p.envelope_ua[i] * in.T_out + p.ventilation[i] * T_air + p.solar_gain[i] * in.R_sol + in.internal_gain[i];
  }
  A(0, 0) += p.coupling_12;
  A(0, 1) -= p.coupling_12;
  A(1, 0) -= p.coupling_12;
  A(1, 1) += p.coupling_12 + p.coupling_23;
  A(1, 2) -= p.coupling_23;
  A(2, 1) -= p.coupling_23;
  A(2, 2) += p.coupling_23;
  const Eigen::Vector3d x = A.partialPivLu().solve(b);
  return {x[0], x[1], x[2]};
}

/// Unmeasured internal gains: occupancy during working hours (07:00-19:00)
/// plus door-opening bursts drawn once from a seed.
class GainSchedule {
 public:
  struct Burst {
    int zone;
    double start_s;
    double duration_s;
    double power_kw;
  };

  GainSchedule() = default;

  GainSchedule(const TruthPlant& p, double start_s, double duration_s, std::uint64_t seed,
               double bursts_per_day = 1.0)
      : occupancy_(p.occupancy_gain) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int days = static_cast<int>(std::ceil(duration_s / 86400.0)) + 1;
    const double day0 = std::floor(start_s / 86400.0) * 86400.0;
    for (int d = 0; d < days; ++d)
      for (int z = 0; z < 3; ++z) {
        const int n = static_cast<int>(std::round(bursts_per_day * (0.5 + u(rng))));
        for (int k = 0; k < n; ++k) {
          const double t = day0 + d * 86400.0 + (7.0 + 12.0 * u(rng)) * 3600.0;
          bursts_.push_back({z, t, 600.0 + 1200.0 * u(rng), 0.03 + 0.05 * u(rng)});
        }
      }
  }

  static GainSchedule none() {
    GainSchedule g;
    g.occupancy_ = {0.0, 0.0, 0.0};
    return g;
  }

  static bool working_hours(double time_s) {
    const double h = std::fmod(time_s, 86400.0) / 3600.0;
    return h >= 7.0 && h < 19.0;
  }

  Vec3 at(double time_s) const {
    Vec3 g{};
    if (working_hours(time_s)) g = occupancy_;
    for (const auto& b : bursts_)
      if (time_s >= b.start_s && time_s < b.start_s + b.duration_s) g[b.zone] += b.power_kw;
    return g;
  }

  const std::vector<Burst>& bursts() const { return bursts_; }

 private:
  Vec3 occupancy_{};
  std::vector<Burst> bursts_;
};

}  // namespace gpmpc::sim
