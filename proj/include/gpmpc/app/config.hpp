#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include "gpmpc/bench/timing.hpp"
#include "gpmpc/building/training.hpp"
#include "gpmpc/errors.hpp"
#include "gpmpc/mpc/problem.hpp"
#include "gpmpc/util/text.hpp"

namespace gpmpc::app {

/// Everything a command needs. Written back in full (defaults included) to
/// every output directory, so a run can be replayed from that file alone.
struct RunConfig {
  // paths
  std::string recording;  // sensor log for training
  std::string holdout;    // sensor log for validation
  std::string models;     // model bundle directory
  std::string chiller_thermal;
  std::string chiller_cop;

  std::uint64_t seed = 1;

  // synthetic logs
  std::size_t recording_samples = 22455;
  std::size_t holdout_samples = 5040;
  int holdout_offset_days = 40;

  // pipeline and training
  int downsample_factor = 5;
  double dedup_eps = 4.0;
  double spike_temperature = 3.0;
  double spike_valve = 20.0;
  int max_gap = 3;
  int train_iterations = 200;

  mpc::MpcConfig mpc;
  int ref_horizon = 30;

  // baselines; empty gains mean "tune from step tests on the nominal plant"
  double setpoint = 20.5;
  double hysteresis = 0.4;
  std::vector<double> pi_kp, pi_ki;
  double pi_kff = 0.0;
  bool pi_tuned = true;

  // experiment
  std::vector<std::string> scenarios{"hot", "warm", "mild"};
  std::vector<std::string> controllers{"MPC", "REF", "PI", "ONOFF", "AVG"};
  std::vector<double> T_inits{17.0, 19.0, 21.0};
  double start_hour = 0.0;
  int steps = 144;
  double plant_perturbation = 0.1;
  double process_noise = 0.0;
  double bursts_per_day = 1.0;

  // validation: open-loop rollouts with measured temperatures fed back
  // every `validate_interval` steps
  int validate_interval = 12;

  // single simulation
  std::string sim_controller = "MPC";
  std::string sim_scenario = "hot";
  double sim_T_init = 19.0;

  bench::BenchSpec bench;
  double bench_dedup_eps = 3.0;  // pool the bench subsamples are drawn from

  building::TrainOptions train_options() const {
    building::TrainOptions o;
    o.downsample_factor = downsample_factor;
    o.clean = data::CleanOptions::defaults(spike_temperature, spike_valve);
    o.clean.max_gap = max_gap;
    o.dedup_eps = dedup_eps;
    o.max_iterations = train_iterations;
    return o;
  }

  void validate() const;
};

namespace detail {

template <class T>
std::string join_values(const std::vector<T>& v) {
  std::vector<std::string> parts;
  for (const auto& x : v) {
    if constexpr (std::is_same_v<T, std::string>)
      parts.push_back(x);
    else if constexpr (std::is_floating_point_v<T>)
      parts.push_back(util::format_double(x));
    else
      parts.push_back(std::to_string(x));
  }
  return util::join(parts, ",");
}

class Reader {
 public:
  explicit Reader(const util::KeyValues& kv) : kv_(kv) {}

  void get(const std::string& key, std::string& out) {
    if (auto it = find(key)) out = *it;
  }
  void get(const std::string& key, double& out) {
    if (auto it = find(key))
      if (!util::parse_double(*it, out)) throw ConfigError("config: '" + key + "' is not a number: " + *it);
  }
  void get(const std::string& key, bool& out) {
    if (auto it = find(key)) {
      if (*it == "true" || *it == "1")
        out = true;
      else if (*it == "false" || *it == "0")
        out = false;
      else
        throw ConfigError("config: '" + key + "' must be true or false: " + *it);
    }
  }
  template <class I>
  std::enable_if_t<std::is_integral_v<I>> get(const std::string& key, I& out) {
    if (auto it = find(key)) {
      long long v;
      if (!util::parse_int(*it, v)) throw ConfigError("config: '" + key + "' is not an integer: " + *it);
      if (std::is_unsigned_v<I> && v < 0) throw ConfigError("config: '" + key + "' must be non-negative");
      out = static_cast<I>(v);
    }
  }
  void get(const std::string& key, std::vector<std::string>& out) {
    if (auto it = find(key)) {
      out.clear();
      for (const auto& p : util::split(*it, ','))
        if (!util::trim(p).empty()) out.emplace_back(util::trim(p));
    }
  }
  void get(const std::string& key, std::vector<double>& out) {
    if (auto it = find(key)) {
      out.clear();
      for (const auto& p : util::split(*it, ',')) {
        if (util::trim(p).empty()) continue;
        double v;
        if (!util::parse_double(util::trim(p), v)) throw ConfigError("config: '" + key + "' has a bad entry: " + p);
        out.push_back(v);
      }
    }
  }
  void get(const std::string& key, std::vector<int>& out) {
    std::vector<double> tmp;
    bool present = kv_.count(key) > 0;
    get(key, tmp);
    if (!present) return;
    out.clear();
    for (double v : tmp) {
      if (v != std::floor(v)) throw ConfigError("config: '" + key + "' must hold integers");
      out.push_back(static_cast<int>(v));
    }
  }

  void check_all_used() const {
    for (const auto& [k, v] : kv_)
      if (!used_.count(k) && k.rfind("meta.", 0) != 0) throw ConfigError("config: unknown key '" + k + "'");
  }

 private:
  const std::string* find(const std::string& key) {
    used_.insert(key);
    const auto it = kv_.find(key);
    return it == kv_.end() ? nullptr : &it->second;
  }

  const util::KeyValues& kv_;
  std::set<std::string> used_;
};

// One table drives both directions so the two cannot drift apart.
template <class Fn>
void visit_fields(RunConfig& c, Fn&& f) {
  f("recording", c.recording);
  f("holdout", c.holdout);
  f("models", c.models);
  f("chiller_thermal", c.chiller_thermal);
  f("chiller_cop", c.chiller_cop);
  f("seed", c.seed);
  f("recording_samples", c.recording_samples);
  f("holdout_samples", c.holdout_samples);
  f("holdout_offset_days", c.holdout_offset_days);
  f("downsample_factor", c.downsample_factor);
  f("dedup_eps", c.dedup_eps);
  f("spike_temperature", c.spike_temperature);
  f("spike_valve", c.spike_valve);
  f("max_gap", c.max_gap);
  f("train_iterations", c.train_iterations);
  f("mpc.horizon", c.mpc.horizon);
  f("mpc.T_max", c.mpc.T_max);
  f("mpc.beta", c.mpc.beta);
  f("mpc.rho", c.mpc.rho);
  f("mpc.rho_N", c.mpc.rho_N);
  f("mpc.theta_min", c.mpc.theta_min);
  f("mpc.theta_max", c.mpc.theta_max);
  f("mpc.kkt_tol", c.mpc.kkt_tol);
  f("mpc.max_iterations", c.mpc.max_iterations);
  f("mpc.bound_starts", c.mpc.bound_starts);
  f("ref_horizon", c.ref_horizon);
  f("setpoint", c.setpoint);
  f("hysteresis", c.hysteresis);
  f("pi.tuned", c.pi_tuned);
  f("pi.kp", c.pi_kp);
  f("pi.ki", c.pi_ki);
  f("pi.kff", c.pi_kff);
  f("scenarios", c.scenarios);
  f("controllers", c.controllers);
  f("T_inits", c.T_inits);
  f("start_hour", c.start_hour);
  f("steps", c.steps);
  f("plant_perturbation", c.plant_perturbation);
  f("process_noise", c.process_noise);
  f("bursts_per_day", c.bursts_per_day);
  f("validate.interval", c.validate_interval);
  f("simulate.controller", c.sim_controller);
  f("simulate.scenario", c.sim_scenario);
  f("simulate.T_init", c.sim_T_init);
  f("bench.sizes", c.bench.sizes);
  f("bench.repetitions", c.bench.repetitions);
  f("bench.seed", c.bench.seed);
  f("bench.dedup_eps", c.bench_dedup_eps);
}

}  // namespace detail

inline void RunConfig::validate() const {
  try {
    mpc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (downsample_factor < 1) throw ConfigError("config: downsample_factor must be >= 1");
  if (!(dedup_eps >= 0.0)) throw ConfigError("config: dedup_eps must be >= 0");
  if (train_iterations < 1) throw ConfigError("config: train_iterations must be >= 1");
  if (ref_horizon < 1) throw ConfigError("config: ref_horizon must be >= 1");
  if (steps < 1) throw ConfigError("config: steps must be >= 1");
  if (!(hysteresis >= 0.0)) throw ConfigError("config: hysteresis must be >= 0");
  if (validate_interval < 1) throw ConfigError("config: validate.interval must be >= 1");
  if (!(bench_dedup_eps >= 0.0)) throw ConfigError("config: bench.dedup_eps must be >= 0");
  if (bench.repetitions < 0) throw ConfigError("config: bench.repetitions must be >= 0");
  if (!(plant_perturbation >= 0.0 && plant_perturbation < 1.0))
    throw ConfigError("config: plant_perturbation must lie in [0, 1)");
  if (!pi_tuned && (pi_kp.size() != 3 || pi_ki.size() != 3))
    throw ConfigError("config: pi.kp and pi.ki need three values when pi.tuned = false");
  for (const auto& s : scenarios)
    if (s != "hot" && s != "warm" && s != "mild") throw ConfigError("config: unknown scenario '" + s + "'");
  for (const auto& c : controllers)
    if (c != "MPC" && c != "REF" && c != "PI" && c != "ONOFF" && c != "AVG")
      throw ConfigError("config: unknown controller '" + c + "'");
  if (!(sim_T_init > 5.0 && sim_T_init < 45.0)) throw ConfigError("config: simulate.T_init out of range");
  for (int s : bench.sizes)
    if (s < 3) throw ConfigError("config: bench sizes must be >= 3");
}

inline RunConfig parse_config(const util::KeyValues& kv) {
  RunConfig c;
  detail::Reader r(kv);
  detail::visit_fields(c, [&](const char* key, auto& field) { r.get(key, field); });
  r.check_all_used();
  c.validate();
  return c;
}

/// Relative paths in a config file are taken relative to that file.
inline RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = util::read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig c;
  try {
    c = parse_config(util::parse_key_values(text, path));
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  const auto base = std::filesystem::absolute(path).parent_path();
  for (auto* p : {&c.recording, &c.holdout, &c.models, &c.chiller_thermal, &c.chiller_cop})
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  return c;
}

inline util::KeyValues config_values(RunConfig c) {
  util::KeyValues kv;
  detail::visit_fields(c, [&](const char* key, auto& field) {
    using F = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<F, std::string>)
      kv[key] = field;
    else if constexpr (std::is_same_v<F, bool>)
      kv[key] = field ? "true" : "false";
    else if constexpr (std::is_floating_point_v<F>)
      kv[key] = util::format_double(field);
    else if constexpr (std::is_integral_v<F>)
      kv[key] = std::to_string(field);
    else
      kv[key] = detail::join_values(field);
  });
  return kv;
}

inline std::string format_config(const RunConfig& c) { return util::format_key_values(config_values(c)); }

}  // namespace gpmpc::app
