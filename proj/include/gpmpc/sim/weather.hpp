#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpmpc::sim {

/// Disturbance traces sampled at the control period, starting at start_s.
struct WeatherScenario {
  std::string label;
  double start_s = 0.0;
  double period_s = 600.0;
  std::vector<double> T_out;
  std::vector<double> R_sol;
  std::vector<double> T_sup;

  std::size_t size() const { return T_out.size(); }
  double time(std::size_t k) const { return start_s + static_cast<double>(k) * period_s; }
};

/// Diurnal outdoor temperature: minimum at 02:00, maximum at 14:00.
inline double diurnal_temperature(double time_s, double t_min, double t_max) {
  const double h = std::fmod(time_s, 86400.0) / 3600.0;
  return 0.5 * (t_min + t_max) + 0.5 * (t_max - t_min) * std::cos(2.0 * std::numbers::pi * (h - 14.0) / 24.0);
}

/// Clear-sky irradiance bell between 06:00 and 20:00, W/m^2.
inline double solar_irradiance(double time_s, double peak) {
  const double h = std::fmod(time_s, 86400.0) / 3600.0;
  if (h <= 6.0 || h >= 20.0) return 0.0;
  return peak * std::sin(std::numbers::pi * (h - 6.0) / 14.0);
}

/// Chilled-water supply temperature drifting up slightly with outdoor load.
inline double supply_temperature(double T_out, double base = 10.0) { return base + 0.08 * (T_out - 22.0); }

/// Synthetic hot day: about 22 degC overnight, 35 degC at 14:00, clear sky.
inline WeatherScenario hot_day(std::size_t steps, double period_s = 600.0, double start_s = 0.0) {
  WeatherScenario w;
  w.label = "hot";
  w.start_s = start_s;
  w.period_s = period_s;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = w.time(k);
    const double T = diurnal_temperature(t, 22.0, 35.0);
    w.T_out.push_back(T);
    w.R_sol.push_back(solar_irradiance(t, 800.0));
    w.T_sup.push_back(supply_temperature(T));
  }
  return w;
}

/// Hot, warm (-2 degC) and mild (-5 degC) variants sharing T_sup and R_sol.
inline std::array<WeatherScenario, 3> make_scenarios(const WeatherScenario& hot) {
  if (hot.T_out.empty()) throw std::invalid_argument("make_scenarios: empty trace");
  std::array<WeatherScenario, 3> out{hot, hot, hot};
  out[0].label = "hot";
  out[1].label = "warm";
  out[2].label = "mild";
  for (auto& v : out[1].T_out) v -= 2.0;
  for (auto& v : out[2].T_out) v -= 5.0;
  return out;
}

inline double peak(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

}  // namespace gpmpc::sim
