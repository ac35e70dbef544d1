#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "gpmpc/app/config.hpp"
#include "gpmpc/bench/timing.hpp"
#include "gpmpc/building/training.hpp"
#include "gpmpc/building/validation.hpp"
#include "gpmpc/control/reference.hpp"
#include "gpmpc/sim/closed_loop.hpp"
#include "gpmpc/sim/recording.hpp"
#include "gpmpc/sim/tuning.hpp"

#ifndef GPMPC_DATA_DIR
#define GPMPC_DATA_DIR "data"
#endif

namespace gpmpc::app {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr double kScenarioEpoch = 1636502400.0;  // 2021-11-10T00:00:00Z

/// Independent streams from the master seed (splitmix64 of seed + stream).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace stream {
inline constexpr std::uint64_t recording = 1, holdout = 2, plant = 3, gains = 4, avg = 5, noise = 6;
}

/// Empty data paths fall back to the bundled files; all paths become absolute
/// so the manifest can be replayed from anywhere.
inline RunConfig resolve_paths(RunConfig c) {
  const std::filesystem::path data(GPMPC_DATA_DIR);
  auto fill = [&](std::string& p, const char* bundled) {
    if (p.empty() && bundled) p = (data / bundled).string();
    if (!p.empty()) p = std::filesystem::absolute(p).lexically_normal().string();
  };
  fill(c.recording, "recording.csv");
  fill(c.holdout, "holdout.csv");
  fill(c.chiller_thermal, "chiller_thermal.txt");
  fill(c.chiller_cop, "chiller_cop.txt");
  fill(c.models, nullptr);
  return c;
}

inline std::string now_iso8601() {
  const auto t = std::chrono::system_clock::now().time_since_epoch();
  return util::format_iso8601(std::chrono::duration_cast<std::chrono::seconds>(t).count()) + "Z";
}

/// Config snapshot (every field, defaults included) plus meta.* keys, which
/// load_config ignores, so the manifest is itself a valid --config file.
inline void write_manifest(const std::filesystem::path& out, const RunConfig& c, const std::string& command,
                           const std::string& started) {
  auto kv = config_values(c);
  kv["meta.command"] = command;
  kv["meta.version"] = kVersion;
  kv["meta.eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                     std::to_string(EIGEN_MINOR_VERSION);
  kv["meta.started"] = started;
  kv["meta.finished"] = now_iso8601();
  util::write_file((out / "manifest.txt").string(), util::format_key_values(kv));
}

inline data::RawSeries load_series(const std::string& path) {
  auto s = data::parse_series_csv(util::read_file(path));
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(path + ": " + e.what());
  }
  return s;
}

inline building::ZoneModelSet load_models(const RunConfig& c) {
  if (c.models.empty()) throw ConfigError("config: 'models' must point to a trained model bundle");
  return building::load_model_set(c.models);
}

inline chiller::ChillerModel load_chiller(const RunConfig& c) {
  return {chiller::load_surface(c.chiller_thermal), chiller::load_cop_curve(c.chiller_cop)};
}

inline control::PiGains pi_gains(const RunConfig& c, const sim::TruthPlant& nominal) {
  if (c.pi_tuned) return sim::tune_pi(nominal, c.setpoint, c.mpc.theta_min, c.mpc.theta_max);
  control::PiGains g;
  for (int z = 0; z < 3; ++z) {
    g.kp[z] = c.pi_kp[static_cast<std::size_t>(z)];
    g.ki[z] = c.pi_ki[static_cast<std::size_t>(z)];
  }
  g.kff = c.pi_kff;
  g.setpoint = c.setpoint;
  g.theta_min = c.mpc.theta_min;
  g.theta_max = c.mpc.theta_max;
  return g;
}

inline std::filesystem::path prepare_out(const std::string& out) {
  const auto p = std::filesystem::absolute(out).lexically_normal();
  std::filesystem::create_directories(p);
  return p;
}

// ---- generate -------------------------------------------------------------

/// Training and holdout logs from the nominal plant, on disjoint days.
inline void cmd_generate(RunConfig c, const std::string& out) {
  const auto started = now_iso8601();
  c = resolve_paths(c);
  const auto dir = prepare_out(out);
  const sim::TruthPlant nominal;
  const auto gains = pi_gains(c, nominal);
  sim::RecordingOptions o;
  o.samples = c.recording_samples;
  o.seed = derive_seed(c.seed, stream::recording);
  o.bursts_per_day = c.bursts_per_day;
  o.theta_min = c.mpc.theta_min;
  o.theta_max = c.mpc.theta_max;
  const auto rec = sim::generate_recording(nominal, o, gains);
  o.samples = c.holdout_samples;
  o.seed = derive_seed(c.seed, stream::holdout);
  o.start_epoch_s += static_cast<std::int64_t>(c.holdout_offset_days) * 86400;
  const auto hold = sim::generate_recording(nominal, o, gains);
  c.recording = (dir / "recording.csv").string();
  c.holdout = (dir / "holdout.csv").string();
  util::write_file(c.recording, data::format_series_csv(rec));
  util::write_file(c.holdout, data::format_series_csv(hold));
  write_manifest(dir, c, "generate", started);
}

// ---- train ----------------------------------------------------------------

inline building::TrainResult cmd_train(RunConfig c, const std::string& out) {
  const auto started = now_iso8601();
  c = resolve_paths(c);
  const auto dir = prepare_out(out);
  const auto rec = load_series(c.recording);
  auto res = building::train_zone_models(rec, c.train_options());
  c.models = (dir / "models").string();
  building::save_model_set(res.models, c.models);

  util::KeyValues report, timing;
  for (int z = 0; z < 3; ++z) {
    const auto& s = res.zones[z];
    const auto p = "zone" + std::to_string(z + 1) + ".";
    report[p + "rows_before_dedup"] = std::to_string(s.rows_before_dedup);
    report[p + "points"] = std::to_string(s.rows);
    report[p + "lml"] = util::format_double(s.report.lml);
    report[p + "iterations"] = std::to_string(s.report.iterations);
    report[p + "converged"] = s.report.converged ? "true" : "false";
    timing[p + "wall_seconds"] = util::format_double(s.wall_seconds);
  }
  util::write_file((dir / "train_report.txt").string(), util::format_key_values(report));
  util::write_file((dir / "train_timing.txt").string(), util::format_key_values(timing));
  write_manifest(dir, c, "train", started);
  return res;
}

// ---- validate -------------------------------------------------------------

inline building::ValidationResult cmd_validate(RunConfig c, const std::string& out) {
  const auto started = now_iso8601();
  c = resolve_paths(c);
  const auto models = load_models(c);
  const auto opt = c.train_options();
  const auto hold = data::downsample(data::clean(load_series(c.holdout), opt.clean), opt.downsample_factor);
  const auto overlap = building::count_overlap(models, hold);
  for (int z = 0; z < 3; ++z)
    if (overlap[z] > 0)
      throw DataError("validate: holdout shares " + std::to_string(overlap[z]) + " rows with the zone " +
                      std::to_string(z + 1) + " training set");
  auto res = building::validate_rollouts(models, hold, c.validate_interval);
  const auto dir = prepare_out(out);
  util::write_file((dir / "rollouts.csv").string(), building::format_validation_csv(res));
  util::write_file((dir / "validation_report.txt").string(),
                   building::format_validation_report(res, c.validate_interval));
  write_manifest(dir, c, "validate", started);
  return res;
}

// ---- closed-loop experiments ----------------------------------------------

/// Everything shared by the cells of one experiment.
struct Experiment {
  sim::TruthPlant nominal;
  sim::TruthPlant plant;  // evaluation plant: perturbed copy of the nominal one
  sim::GainSchedule gains;
  std::array<sim::WeatherScenario, 3> scenarios;
  chiller::ChillerModel chiller;
  control::PiGains pi;
  std::shared_ptr<const building::ZoneModelSet> models;  // may be null when no MPC cell runs
};

inline Experiment make_experiment(const RunConfig& c, std::shared_ptr<const building::ZoneModelSet> models) {
  Experiment e;
  e.plant = e.nominal.perturbed(derive_seed(c.seed, stream::plant), c.plant_perturbation);
  e.plant.process_noise_std = c.process_noise;
  const double start = kScenarioEpoch + 3600.0 * c.start_hour;
  const auto len = static_cast<std::size_t>(c.steps + c.ref_horizon);
  e.scenarios = sim::make_scenarios(sim::hot_day(len, e.nominal.control_period_s(), start));
  e.gains = sim::GainSchedule(e.plant, start, static_cast<double>(len) * e.nominal.control_period_s(),
                              derive_seed(c.seed, stream::gains), c.bursts_per_day);
  e.chiller = load_chiller(c);
  e.pi = pi_gains(c, e.nominal);
  e.models = std::move(models);
  return e;
}

inline const sim::WeatherScenario& scenario(const Experiment& e, const std::string& label) {
  for (const auto& w : e.scenarios)
    if (w.label == label) return w;
  throw ConfigError("unknown scenario '" + label + "'");
}

inline std::unique_ptr<control::Controller> make_controller(const std::string& name, const Experiment& e,
                                                            const sim::WeatherScenario& w, const RunConfig& c) {
  if (name == "MPC") {
    if (!e.models) throw ConfigError("MPC needs a trained model bundle");
    return std::make_unique<mpc::MpcController>(e.models, e.chiller, c.mpc, e.pi);
  }
  if (name == "REF")
    return std::make_unique<control::RefController>(e.plant, e.gains, w, e.chiller,
                                                    control::reference_config(c.mpc, c.ref_horizon), e.pi);
  if (name == "PI") return std::make_unique<control::PiController>(e.pi);
  if (name == "ONOFF")
    return std::make_unique<control::OnOffController>(c.setpoint, c.hysteresis, c.mpc.theta_min, c.mpc.theta_max);
  if (name == "AVG")
    return std::make_unique<control::AvgController>(c.mpc.theta_min, c.mpc.theta_max, derive_seed(c.seed, stream::avg));
  throw ConfigError("unknown controller '" + name + "'");
}

struct CellResult {
  std::string controller;
  std::string scenario;
  double T_init = 0.0;
  sim::SimTrace trace;
  double energy_kwh = 0.0;
  double avg_violation = 0.0;
  double normalized_energy = std::numeric_limits<double>::quiet_NaN();
  std::string error;
};

inline CellResult run_cell(const Experiment& e, const RunConfig& c, const std::string& controller,
                           const std::string& label, double T_init) {
  CellResult r;
  r.controller = controller;
  r.scenario = label;
  r.T_init = T_init;
  try {
    const auto& w = scenario(e, label);
    auto ctrl = make_controller(controller, e, w, c);
    r.trace = sim::run_closed_loop(e.plant, *ctrl, w, e.gains, e.chiller, T_init, static_cast<std::size_t>(c.steps),
                                   derive_seed(c.seed, stream::noise));
    r.error = r.trace.error;
    r.energy_kwh = sim::trace_energy_kwh(r.trace);
    r.avg_violation = sim::metrics(r.trace, 1.0, c.mpc.T_max).avg_violation;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& ex) {
    r.error = ex.what();
  }
  return r;
}

/// REF energy at the lowest configured initial temperature of the same
/// scenario (17 degC by default) is the normalization factor.
inline void normalize(std::vector<CellResult>& cells) {
  for (auto& cell : cells) {
    const CellResult* ref = nullptr;
    for (const auto& r : cells)
      if (r.controller == "REF" && r.scenario == cell.scenario && r.error.empty() && (!ref || r.T_init < ref->T_init))
        ref = &r;
    if (ref && ref->energy_kwh > 0.0) cell.normalized_energy = cell.energy_kwh / ref->energy_kwh;
  }
}

inline std::vector<CellResult> run_matrix(const Experiment& e, const RunConfig& c) {
  std::vector<CellResult> cells;
  for (const auto& s : c.scenarios)
    for (double T0 : c.T_inits)
      for (const auto& ctrl : c.controllers) cells.push_back(run_cell(e, c, ctrl, s, T0));
  normalize(cells);
  return cells;
}

inline const CellResult* find_cell(const std::vector<CellResult>& cells, const std::string& ctrl,
                                   const std::string& scen, double T_init) {
  for (const auto& r : cells)
    if (r.controller == ctrl && r.scenario == scen && r.T_init == T_init) return &r;
  return nullptr;
}

/// b Pareto-dominates a: no worse in energy and violation, better in one.
inline bool dominates(const CellResult& b, const CellResult& a) {
  const bool no_worse = b.energy_kwh <= a.energy_kwh && b.avg_violation <= a.avg_violation;
  const bool better = b.energy_kwh < a.energy_kwh || b.avg_violation < a.avg_violation;
  return no_worse && better;
}

struct Saving {
  std::string scenario;
  double T_init = 0.0;
  std::string baseline;
  double savings = 0.0;  // 1 - E_MPC / E_baseline
  bool mpc_dominated = false;
};

inline std::vector<Saving> mpc_savings(const std::vector<CellResult>& cells, const RunConfig& c) {
  std::vector<Saving> out;
  for (const auto& s : c.scenarios)
    for (double T0 : c.T_inits) {
      const auto* m = find_cell(cells, "MPC", s, T0);
      if (!m || !m->error.empty()) continue;
      for (const char* base : {"PI", "ONOFF"}) {
        const auto* b = find_cell(cells, base, s, T0);
        if (!b || !b->error.empty() || !(b->energy_kwh > 0.0)) continue;
        out.push_back({s, T0, base, 1.0 - m->energy_kwh / b->energy_kwh, dominates(*b, *m)});
      }
    }
  return out;
}

inline std::string format_summary_csv(const std::vector<CellResult>& cells) {
  std::string out = "controller,scenario,T_init,energy_kwh,normalized_energy,avg_violation,steps,error\n";
  for (const auto& r : cells)
    out += r.controller + "," + r.scenario + "," + util::format_double(r.T_init) + "," +
           util::format_double(r.energy_kwh) + "," + util::format_double(r.normalized_energy) + "," +
           util::format_double(r.avg_violation) + "," + std::to_string(r.trace.records.size()) + "," + r.error + "\n";
  return out;
}

inline std::string format_savings_csv(const std::vector<Saving>& s) {
  std::string out = "scenario,T_init,baseline,savings,mpc_dominated\n";
  for (const auto& v : s)
    out += v.scenario + "," + util::format_double(v.T_init) + "," + v.baseline + "," + util::format_double(v.savings) +
           "," + (v.mpc_dominated ? "1" : "0") + "\n";
  return out;
}

inline std::string format_timing_csv(const std::vector<CellResult>& cells) {
  std::string out = "controller,scenario,T_init,step,wall_seconds\n";
  for (const auto& r : cells)
    for (std::size_t k = 0; k < r.trace.records.size(); ++k) {
      const auto& d = r.trace.records[k].diag;
      if (!d.solver) continue;
      out += r.controller + "," + r.scenario + "," + util::format_double(r.T_init) + "," + std::to_string(k) + "," +
             util::format_double(d.wall_seconds) + "\n";
    }
  return out;
}

inline std::string cell_file_name(const CellResult& r) {
  return r.controller + "_" + r.scenario + "_" + util::format_short(r.T_init) + ".csv";
}

inline std::shared_ptr<const building::ZoneModelSet> models_if_needed(const RunConfig& c,
                                                                      const std::vector<std::string>& controllers) {
  for (const auto& n : controllers)
    if (n == "MPC") return std::make_shared<const building::ZoneModelSet>(load_models(c));
  return nullptr;
}

// ---- compare / simulate ---------------------------------------------------

/// Full matrix. Summary, savings and traces are deterministic; solver wall
/// times go to timing.csv.
inline std::vector<CellResult> cmd_compare(RunConfig c, const std::string& out) {
  const auto started = now_iso8601();
  c = resolve_paths(c);
  const auto e = make_experiment(c, models_if_needed(c, c.controllers));
  auto cells = run_matrix(e, c);
  const auto dir = prepare_out(out);
  std::filesystem::create_directories(dir / "traces");
  for (const auto& r : cells) util::write_file((dir / "traces" / cell_file_name(r)).string(), sim::format_trace_csv(r.trace));
  util::write_file((dir / "summary.csv").string(), format_summary_csv(cells));
  util::write_file((dir / "savings.csv").string(), format_savings_csv(mpc_savings(cells, c)));
  util::write_file((dir / "timing.csv").string(), format_timing_csv(cells));
  write_manifest(dir, c, "compare", started);
  return cells;
}

inline CellResult cmd_simulate(RunConfig c, const std::string& out) {
  const auto started = now_iso8601();
  c = resolve_paths(c);
  const auto e = make_experiment(c, models_if_needed(c, {c.sim_controller}));
  auto r = run_cell(e, c, c.sim_controller, c.sim_scenario, c.sim_T_init);
  const auto dir = prepare_out(out);
  util::write_file((dir / "trace.csv").string(), sim::format_trace_csv(r.trace));
  util::KeyValues kv;
  kv["controller"] = r.controller;
  kv["scenario"] = r.scenario;
  kv["T_init"] = util::format_double(r.T_init);
  kv["energy_kwh"] = util::format_double(r.energy_kwh);
  kv["avg_violation"] = util::format_double(r.avg_violation);
  kv["steps"] = std::to_string(r.trace.records.size());
  kv["error"] = r.error;
  util::write_file((dir / "metrics.txt").string(), util::format_key_values(kv));
  util::write_file((dir / "timing.csv").string(), format_timing_csv({r}));
  write_manifest(dir, c, "simulate", started);
  return r;
}

// ---- bench ----------------------------------------------------------------

/// Pool for the size study: the recording deduplicated at bench.dedup_eps,
/// posterior refitted with the trained hyperparameters.
inline building::ZoneModelSet bench_pool(const RunConfig& c, const building::ZoneModelSet& trained) {
  auto opt = c.train_options();
  opt.dedup_eps = c.bench_dedup_eps;
  const auto sets = building::prepare_zone_datasets(load_series(c.recording), opt);
  std::array<gp::GpPosterior, 3> gps;
  std::array<data::FeatureSpec, 3> specs;
  for (int z = 0; z < 3; ++z) {
    gps[z] = gp::fit(sets[z], trained.zone(z).hyperparams());
    specs[z] = trained.spec(z);
  }
  return building::ZoneModelSet(std::move(gps), specs, trained.period_s());
}

inline std::vector<bench::BenchRecord> cmd_bench(RunConfig c, const std::string& out) {
  const auto started = now_iso8601();
  c = resolve_paths(c);
  const auto pool = bench_pool(c, load_models(c));
  for (int s : c.bench.sizes)
    for (int z = 0; z < 3; ++z)
      if (pool.zone(z).size() < s / 3)
        throw DataError("bench: size " + std::to_string(s) + " needs " + std::to_string(s / 3) +
                        " points per zone, zone " + std::to_string(z + 1) + " has " +
                        std::to_string(pool.zone(z).size()) + "; lower bench.dedup_eps");
  const sim::TruthPlant nominal;
  auto recs = bench::run_bench(pool, load_chiller(c), c.mpc, pi_gains(c, nominal), c.bench);
  const auto dir = prepare_out(out);
  util::write_file((dir / "bench.csv").string(), bench::format_bench_csv(recs));
  util::write_file((dir / "bench_structure.csv").string(), bench::format_bench_structure_csv(recs));
  util::write_file((dir / "bench_summary.csv").string(),
                   bench::format_summary_csv(bench::summarize(recs, c.bench.sizes)));
  write_manifest(dir, c, "bench", started);
  return recs;
}

}  // namespace gpmpc::app
