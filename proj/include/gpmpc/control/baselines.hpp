#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include "gpmpc/control/controller.hpp"

namespace gpmpc::control {

/// Per-zone PI gains plus a shared feedforward on (T_out - setpoint). The
/// integral gain acts once per control period.
struct PiGains {
  Vec3 kp{20.0, 20.0, 20.0};  // deg per degC
  Vec3 ki{2.0, 2.0, 2.0};     // deg per degC per period
  double kff = 2.0;           // deg per degC
  double setpoint = 20.5;     // degC
  double theta_min = 0.0;
  double theta_max = 90.0;
};

struct PiState {
  PiGains gains;
  Vec3 integrator{};
};

/// Cooling PI: a positive error (too warm) opens the valve. The integrator
/// only moves while the output is unsaturated.
inline double pi_step(PiState& st, int zone, double T_meas, double T_out) {
  const auto& g = st.gains;
  const double e = T_meas - g.setpoint;
  double& I = st.integrator[zone];
  const double u = g.kp[zone] * e + I + g.kff * (T_out - g.setpoint);
  if (u > g.theta_min && u < g.theta_max) {
    const double span = g.theta_max - g.theta_min;
    I = std::clamp(I + g.ki[zone] * e, -span, span);
  }
  return std::clamp(u, g.theta_min, g.theta_max);
}

inline Vec3 pi_step(PiState& st, const Vec3& T_meas, double T_out) {
  Vec3 out{};
  for (int z = 0; z < 3; ++z) out[z] = pi_step(st, z, T_meas[z], T_out);
  return out;
}

/// Thermostat with a symmetric dead band; inside the band the previous
/// command is held.
inline double onoff_step(double T_meas, double setpoint, double hysteresis, double previous, double theta_min,
                         double theta_max) {
  if (hysteresis < 0.0) throw std::invalid_argument("onoff_step: negative hysteresis");
  if (T_meas > setpoint + 0.5 * hysteresis) return theta_max;
  if (T_meas < setpoint - 0.5 * hysteresis) return theta_min;
  return previous;
}

class PiController : public Controller {
 public:
  explicit PiController(const PiGains& g) { st_.gains = g; }
  std::string name() const override { return "PI"; }
  Vec3 act(const Observation& obs) override { return pi_step(st_, obs.T, obs.T_out); }
  const PiState& state() const { return st_; }

 private:
  PiState st_;
};

class OnOffController : public Controller {
 public:
  OnOffController(double setpoint, double hysteresis, double theta_min, double theta_max)
      : sp_(setpoint), hyst_(hysteresis), lo_(theta_min), hi_(theta_max) {
    last_ = {lo_, lo_, lo_};
  }
  std::string name() const override { return "ONOFF"; }
  Vec3 act(const Observation& obs) override {
    for (int z = 0; z < 3; ++z) last_[z] = onoff_step(obs.T[z], sp_, hyst_, last_[z], lo_, hi_);
    return last_;
  }

 private:
  double sp_, hyst_, lo_, hi_;
  Vec3 last_{};
};

/// Randomized open-loop controller. Uniform mode draws every valve from
/// U[theta_min, theta_max] each period; midpoint mode holds the middle.
class AvgController : public Controller {
 public:
  enum class Mode { uniform, midpoint };

  AvgController(double theta_min, double theta_max, std::uint64_t seed, Mode mode = Mode::uniform)
      : lo_(theta_min), hi_(theta_max), mode_(mode), rng_(seed) {}
  std::string name() const override { return "AVG"; }
  Vec3 act(const Observation&) override {
    if (mode_ == Mode::midpoint) return {0.5 * (lo_ + hi_), 0.5 * (lo_ + hi_), 0.5 * (lo_ + hi_)};
    std::uniform_real_distribution<double> u(lo_, hi_);
    Vec3 out{};
    for (double& v : out) v = u(rng_);
    return out;
  }

 private:
  double lo_, hi_;
  Mode mode_;
  std::mt19937_64 rng_;
};

}  // namespace gpmpc::control
