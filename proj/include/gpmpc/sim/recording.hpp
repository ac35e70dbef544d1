#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "gpmpc/control/baselines.hpp"
#include "gpmpc/data/series.hpp"
#include "gpmpc/sim/plant.hpp"
#include "gpmpc/sim/weather.hpp"

namespace gpmpc::sim {

struct RecordingOptions {
  std::size_t samples = 22455;
  std::int64_t period_s = 120;
  std::int64_t start_epoch_s = 1625097600;  // 2021-07-01T00:00:00Z
  int hold_samples = 5;                      // valve commands change on this grid
  std::uint64_t seed = 1;
  double temperature_noise = 0.04;  // degC, zone and supply sensors
  double outdoor_noise = 0.05;      // degC
  int short_gaps = 15;              // 1-3 samples, all channels
  int long_gaps = 3;                // 20-60 samples, all channels
  int spikes = 20;                  // single-channel, 1-2 samples
  double bursts_per_day = 1.0;      // unmeasured door/equipment gains
  double theta_min = 0.0;
  double theta_max = 90.0;
};

namespace detail {

struct DayWeather {
  double t_min, t_max, solar_peak, supply_base;
};

// Daily parameters interpolated between noons so the traces stay continuous.
class WeatherGenerator {
 public:
  WeatherGenerator(double start_s, std::size_t days, std::mt19937_64& rng) : start_s_(std::floor(start_s / 86400.0) * 86400.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t d = 0; d < days + 2; ++d) {
      const double peak = 24.0 + 13.0 * u(rng);
      days_.push_back({peak - (9.0 + 5.0 * u(rng)), peak, 800.0 * (0.4 + 0.6 * u(rng)), 9.0 + 2.6 * u(rng)});
    }
  }

  DayWeather at(double t) const {
    const double x = (t - start_s_) / 86400.0 - 0.5;
    const auto i = static_cast<std::size_t>(std::clamp(std::floor(x), 0.0, static_cast<double>(days_.size() - 2)));
    const double w = std::clamp(x - static_cast<double>(i), 0.0, 1.0);
    const auto& a = days_[i];
    const auto& b = days_[i + 1];
    return {a.t_min + w * (b.t_min - a.t_min), a.t_max + w * (b.t_max - a.t_max),
            a.solar_peak + w * (b.solar_peak - a.solar_peak), a.supply_base + w * (b.supply_base - a.supply_base)};
  }

 private:
  double start_s_;
  std::vector<DayWeather> days_;
};

}  // namespace detail

/// Excitation of the valves while logging: blocks of PI, ON/OFF, ramps and
/// random holds, each lasting one to four hours.
class ExcitationPolicy {
 public:
  ExcitationPolicy(std::uint64_t seed, double theta_min, double theta_max, const control::PiGains& gains)
      : rng_(seed), lo_(theta_min), hi_(theta_max), gains_(gains) {}

  Vec3 command(double time_s, const Vec3& T, double T_out) {
    if (time_s >= block_end_) new_block(time_s);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    switch (mode_) {
      case 0:
        return control::pi_step(pi_, T, T_out);
      case 1:
        for (int z = 0; z < 3; ++z) last_[z] = control::onoff_step(T[z], setpoint_, 0.4, last_[z], lo_, hi_);
        return last_;
      case 2: {
        const double w = (time_s - block_start_) / (block_end_ - block_start_);
        for (int z = 0; z < 3; ++z) last_[z] = ramp_from_[z] + w * (ramp_to_[z] - ramp_from_[z]);
        return last_;
      }
      default:
        for (int z = 0; z < 3; ++z)
          if (time_s >= hold_until_[z]) {
            last_[z] = lo_ + (hi_ - lo_) * u(rng_);
            hold_until_[z] = time_s + 600.0 * (1 + static_cast<int>(6 * u(rng_)));
          }
        return last_;
    }
  }

 private:
  void new_block(double time_s) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    mode_ = static_cast<int>(4 * u(rng_)) % 4;
    block_start_ = time_s;
    block_end_ = time_s + 3600.0 * (1 + static_cast<int>(4 * u(rng_)));
    setpoint_ = 19.5 + 2.5 * u(rng_);
    pi_ = control::PiState{};
    pi_.gains = gains_;
    pi_.gains.setpoint = setpoint_;
    pi_.gains.theta_min = lo_;
    pi_.gains.theta_max = hi_;
    for (int z = 0; z < 3; ++z) {
      ramp_from_[z] = lo_ + (hi_ - lo_) * u(rng_);
      ramp_to_[z] = lo_ + (hi_ - lo_) * u(rng_);
      hold_until_[z] = time_s;
    }
  }

  std::mt19937_64 rng_;
  double lo_, hi_;
  control::PiGains gains_;
  control::PiState pi_;
  int mode_ = 0;
  double block_start_ = 0.0, block_end_ = -1.0, setpoint_ = 21.0;
  Vec3 last_{}, ramp_from_{}, ramp_to_{}, hold_until_{};
};

/// Synthetic building log at the sensor rate: varying weather, unmeasured
/// internal gains, excitation mix, sensor noise, dropouts and spikes.
inline data::RawSeries generate_recording(const TruthPlant& plant, const RecordingOptions& opt,
                                          const control::PiGains& pi_gains) {
  if (static_cast<double>(opt.period_s) != plant.substep_s)
    throw std::invalid_argument("generate_recording: sample period must equal the plant substep");
  std::mt19937_64 rng(opt.seed);
  const double duration = static_cast<double>(opt.samples) * static_cast<double>(opt.period_s);
  const std::size_t days = static_cast<std::size_t>(std::ceil(duration / 86400.0)) + 1;
  const double t0 = static_cast<double>(opt.start_epoch_s);
  detail::WeatherGenerator weather(t0, days, rng);
  const GainSchedule gains(plant, t0, duration, rng(), opt.bursts_per_day);
  ExcitationPolicy policy(rng(), opt.theta_min, opt.theta_max, pi_gains);
  std::normal_distribution<double> g(0.0, 1.0);

  data::RawSeries s;
  for (std::size_t k = 0; k < opt.samples; ++k)
    s.timestamps.push_back(opt.start_epoch_s + static_cast<std::int64_t>(k) * opt.period_s);
  s.period_s = opt.period_s;
  using namespace data::channels;
  for (const char* c : {T1, T2, T3, theta1, theta2, theta3, T_sup, T_out, R_sol}) s.add_channel(c);

  Vec3 T{21.0, 21.0, 21.0}, theta{};
  double ar = 0.0;  // slow weather deviation
  for (std::size_t k = 0; k < opt.samples; ++k) {
    const double t = t0 + static_cast<double>(k) * static_cast<double>(opt.period_s);
    const auto day = weather.at(t);
    ar = 0.995 * ar + 0.03 * g(rng);
    const double Tout = diurnal_temperature(t, day.t_min, day.t_max) + ar;
    const double Rsol = solar_irradiance(t, day.solar_peak);
    const double Tsup = supply_temperature(Tout, day.supply_base);

    Vec3 Tm{};
    for (int z = 0; z < 3; ++z) Tm[z] = T[z] + opt.temperature_noise * g(rng);
    const double Tout_m = Tout + opt.outdoor_noise * g(rng);
    if (k % static_cast<std::size_t>(opt.hold_samples) == 0) {
      theta = policy.command(t, Tm, Tout_m);
      for (double& v : theta) v = std::clamp(v, opt.theta_min, opt.theta_max);
    }

    const double vals[] = {Tm[0], Tm[1], Tm[2], theta[0], theta[1], theta[2],
                           Tsup + opt.temperature_noise * g(rng), Tout_m, std::max(0.0, Rsol + 5.0 * g(rng))};
    for (std::size_t c = 0; c < 9; ++c) {
      s.channels[c].values[k] = vals[c];
      s.channels[c].valid[k] = 1;
    }
    T = plant_substep(plant, T, {theta, Tsup, Tout, Rsol, gains.at(t)}, &rng);
  }

  std::uniform_int_distribution<std::size_t> pos(10, opt.samples > 80 ? opt.samples - 70 : 10);
  auto blank = [&](std::size_t from, std::size_t len) {
    for (auto& c : s.channels)
      for (std::size_t j = from; j < std::min(from + len, opt.samples); ++j) c.valid[j] = 0;
  };
  if (opt.samples > 80) {
    for (int i = 0; i < opt.short_gaps + opt.long_gaps; ++i) {
      const std::size_t at = pos(rng);
      blank(at, i < opt.short_gaps ? 1 + rng() % 3 : 20 + rng() % 41);
    }
    for (int i = 0; i < opt.spikes; ++i) {
      const std::size_t at = pos(rng);
      const std::size_t c = rng() % 3;
      const double jump = (rng() % 2 ? 5.0 : -5.0);
      const std::size_t len = 1 + rng() % 2;
      for (std::size_t j = at; j < at + len; ++j) s.channels[c].values[j] += jump;
    }
  }
  return s;
}

}  // namespace gpmpc::sim
