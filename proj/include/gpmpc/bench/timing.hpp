#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "gpmpc/building/model.hpp"
#include "gpmpc/mpc/solver.hpp"
#include "gpmpc/util/text.hpp"

namespace gpmpc::bench {

struct BenchSpec {
  std::vector<int> sizes{100, 200, 400, 800};  // total points over the three zones
  int repetitions = 20;
  double T_lo = 16.0, T_hi = 23.0;
  double T_prev_spread = 0.3;  // T_prev = T + U[-spread, spread]
  double T_sup_lo = 9.0, T_sup_hi = 13.0;
  double T_out_lo = 15.0, T_out_hi = 35.0;
  std::uint64_t seed = 7;
};

inline building::BuildingState sample_initial_conditions(std::mt19937_64& rng, const BenchSpec& spec,
                                                         double theta_min, double theta_max) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto draw = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  building::BuildingState s;
  for (int i = 0; i < 3; ++i) {
    s.T[i] = draw(spec.T_lo, spec.T_hi);
    s.T_prev[i] = s.T[i] + draw(-spec.T_prev_spread, spec.T_prev_spread);
    s.theta[i] = draw(theta_min, theta_max);
  }
  s.T_sup = draw(spec.T_sup_lo, spec.T_sup_hi);
  s.T_out = draw(spec.T_out_lo, spec.T_out_hi);
  return s;
}

inline building::BuildingState sample_initial_conditions(std::uint64_t seed, const BenchSpec& spec = {},
                                                         double theta_min = 0.0, double theta_max = 90.0) {
  std::mt19937_64 rng(seed);
  return sample_initial_conditions(rng, spec, theta_min, theta_max);
}

/// Same hyperparameters, posterior refitted on a seeded random subset of
/// total/3 points per zone.
inline building::ZoneModelSet subsample_models(const building::ZoneModelSet& full, int total, std::uint64_t seed) {
  if (total < 3) throw std::invalid_argument("subsample_models: need at least one point per zone");
  std::mt19937_64 rng(seed);
  std::array<gp::GpPosterior, 3> gps;
  std::array<data::FeatureSpec, 3> specs;
  for (int z = 0; z < 3; ++z) {
    const auto& d = full.zone(z).dataset();
    const auto want = static_cast<Eigen::Index>(total / 3);
    if (want > d.size())
      throw std::invalid_argument("subsample_models: zone " + std::to_string(z + 1) + " has only " +
                                  std::to_string(d.size()) + " points");
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(d.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(want));
    std::sort(idx.begin(), idx.end());
    gp::Dataset sub;
    sub.X.resize(want, d.dim());
    sub.y.resize(want);
    for (Eigen::Index r = 0; r < want; ++r) {
      sub.X.row(r) = d.X.row(idx[static_cast<std::size_t>(r)]);
      sub.y[r] = d.y[idx[static_cast<std::size_t>(r)]];
    }
    gps[z] = gp::fit(std::move(sub), full.zone(z).hyperparams());
    specs[z] = full.spec(z);
  }
  return building::ZoneModelSet(std::move(gps), specs, full.period_s());
}

struct BenchRecord {
  int size = 0;
  int run = 0;
  double wall_seconds = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string error;
};

/// Warm-started MPC solves from sampled states, one model per size, the same
/// states for every size. Only the solve is timed.
inline std::vector<BenchRecord> run_bench(const building::ZoneModelSet& full, const chiller::ChillerModel& ch,
                                          const mpc::MpcConfig& cfg, const control::PiGains& gains,
                                          const BenchSpec& spec) {
  std::vector<BenchRecord> out;
  if (spec.repetitions <= 0) return out;
  std::vector<building::BuildingState> states;
  std::mt19937_64 rng(spec.seed);
  for (int r = 0; r < spec.repetitions; ++r)
    states.push_back(sample_initial_conditions(rng, spec, cfg.theta_min, cfg.theta_max));

  for (int size : spec.sizes) {
    auto models = std::make_shared<const building::ZoneModelSet>(
        subsample_models(full, size, spec.seed + static_cast<std::uint64_t>(size)));
    for (int r = 0; r < spec.repetitions; ++r) {
      BenchRecord rec;
      rec.size = size;
      rec.run = r;
      try {
        const auto p = mpc::build_problem(models, ch, states[static_cast<std::size_t>(r)], cfg);
        const auto sol = mpc::control_step(p, gains).second;
        rec.wall_seconds = sol.wall_seconds;
        rec.iterations = sol.iterations;
        rec.converged = sol.converged;
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
      out.push_back(rec);
    }
  }
  return out;
}

struct BoxStats {
  int size = 0;
  int count = 0;
  int failures = 0;
  int converged = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

/// Linear interpolation between order statistics (the default of R and numpy).
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Failed solves are counted but excluded from the timing statistics.
inline std::vector<BoxStats> summarize(const std::vector<BenchRecord>& recs, const std::vector<int>& sizes) {
  std::vector<BoxStats> out;
  for (int size : sizes) {
    BoxStats b;
    b.size = size;
    std::vector<double> t;
    for (const auto& r : recs) {
      if (r.size != size) continue;
      if (!r.error.empty()) {
        ++b.failures;
        continue;
      }
      t.push_back(r.wall_seconds);
      b.converged += r.converged;
    }
    b.count = static_cast<int>(t.size());
    if (!t.empty()) {
      b.min = *std::min_element(t.begin(), t.end());
      b.max = *std::max_element(t.begin(), t.end());
      b.q1 = quantile(t, 0.25);
      b.median = quantile(t, 0.5);
      b.q3 = quantile(t, 0.75);
    }
    out.push_back(b);
  }
  return out;
}

inline std::string format_bench_csv(const std::vector<BenchRecord>& recs) {
  std::string out = "size,run_index,wall_time_seconds,iterations,converged\n";
  for (const auto& r : recs)
    out += std::to_string(r.size) + "," + std::to_string(r.run) + "," +
           (r.error.empty() ? util::format_double(r.wall_seconds) : std::string("nan")) + "," +
           std::to_string(r.iterations) + "," + (r.converged ? "1" : "0") + "\n";
  return out;
}

/// Run structure without wall times: reproducible from the seed.
inline std::string format_bench_structure_csv(const std::vector<BenchRecord>& recs) {
  std::string out = "size,run_index,iterations,converged,error\n";
  for (const auto& r : recs)
    out += std::to_string(r.size) + "," + std::to_string(r.run) + "," + std::to_string(r.iterations) + "," +
           (r.converged ? "1" : "0") + "," + r.error + "\n";
  return out;
}

inline std::string format_summary_csv(const std::vector<BoxStats>& s) {
  std::string out = "size,count,failures,converged,median,q1,q3,min,max\n";
  for (const auto& b : s)
    out += std::to_string(b.size) + "," + std::to_string(b.count) + "," + std::to_string(b.failures) + "," +
           std::to_string(b.converged) + "," + util::format_double(b.median) + "," + util::format_double(b.q1) + "," +
           util::format_double(b.q3) + "," + util::format_double(b.min) + "," + util::format_double(b.max) + "\n";
  return out;
}

}  // namespace gpmpc::bench
