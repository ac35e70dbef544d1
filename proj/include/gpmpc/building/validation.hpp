#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "gpmpc/building/model.hpp"
#include "gpmpc/errors.hpp"

namespace gpmpc::building {

/// Number of holdout feature rows identical to a training row, per zone.
inline std::array<std::size_t, 3> count_overlap(const ZoneModelSet& m, const data::RawSeries& holdout) {
  std::array<std::size_t, 3> out{};
  for (int z = 0; z < 3; ++z) {
    const auto& train = m.zone(z).dataset();
    std::set<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < train.size(); ++i) {
      std::vector<double> r;
      for (Eigen::Index j = 0; j < train.dim(); ++j) r.push_back(train.X(i, j));
      r.push_back(train.y[i]);
      rows.insert(std::move(r));
    }
    const auto h = data::build_features(holdout, m.spec(z));
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      std::vector<double> r;
      for (Eigen::Index j = 0; j < h.dim(); ++j) r.push_back(h.X(i, j));
      r.push_back(h.y[i]);
      out[z] += rows.count(r);
    }
  }
  return out;
}

struct RolloutRow {
  int segment = 0;
  int step = 0;  // 1..H within the segment
  std::int64_t timestamp = 0;
  Vec3 measured{};
  Vec3 mean{};
  Vec3 std{};       // latent, point-wise
  Vec3 pred_std{};  // sqrt(std^2 + sigma_eps^2), for comparison with measurements
};

struct ZoneFit {
  double rmse = 0.0;
  double coverage = 0.0;         // |measured - mean| <= 2 pred_std
  double latent_coverage = 0.0;  // |measured - mean| <= 2 std
  std::size_t points = 0;
};

struct ValidationResult {
  std::vector<RolloutRow> rows;
  std::array<ZoneFit, 3> zones;
  double coverage = 0.0;  // pooled over zones
  int segments = 0;
};

/// Open-loop rollouts of length `interval` from measured states, i.e. one
/// long rollout with measured temperatures fed back every `interval` steps.
/// `s` is already cleaned and downsampled to the control period; segments
/// touching an invalid sample are skipped.
inline ValidationResult validate_rollouts(const ZoneModelSet& m, const data::RawSeries& s, int interval) {
  if (interval < 1) throw std::invalid_argument("validate_rollouts: interval must be >= 1");
  using namespace data::channels;
  auto val = [&](const char* c, std::size_t k) { return s.channel(c).values[k]; };
  auto ok = [&](std::size_t k) {
    for (const auto& c : s.channels)
      if (!c.valid[k]) return false;
    return true;
  };
  const auto H = static_cast<std::size_t>(interval);
  ValidationResult res;
  std::array<double, 3> se{}, in{}, in_latent{};
  for (std::size_t t = 1; t + H < s.size(); t += H) {
    bool good = true;
    for (std::size_t k = t - 1; k <= t + H && good; ++k) good = ok(k);
    if (!good) continue;
    BuildingState st;
    for (int z = 0; z < 3; ++z) {
      st.T[z] = val(zone_temperature(z), t);
      st.T_prev[z] = val(zone_temperature(z), t - 1);
    }
    std::vector<RolloutInput> inputs;
    for (std::size_t k = 0; k < H; ++k)
      inputs.push_back({{val(theta1, t + k), val(theta2, t + k), val(theta3, t + k)}, val(T_sup, t + k), val(T_out, t + k)});
    const auto r = rollout(m, st, inputs);
    for (std::size_t k = 0; k < H; ++k) {
      RolloutRow row;
      row.segment = res.segments;
      row.step = static_cast<int>(k + 1);
      row.timestamp = s.timestamps[t + k + 1];
      row.mean = r[k].mean;
      row.std = r[k].std;
      for (int z = 0; z < 3; ++z) {
        const double sn = m.zone(z).hyperparams().noise_std;
        row.measured[z] = val(zone_temperature(z), t + k + 1);
        row.pred_std[z] = std::sqrt(row.std[z] * row.std[z] + sn * sn);
        const double e = row.measured[z] - row.mean[z];
        se[z] += e * e;
        in[z] += std::abs(e) <= 2.0 * row.pred_std[z];
        in_latent[z] += std::abs(e) <= 2.0 * row.std[z];
        ++res.zones[z].points;
      }
      res.rows.push_back(row);
    }
    ++res.segments;
  }
  if (res.segments == 0) throw DataError("validation: no complete rollout segment in the holdout");
  double pooled = 0.0;
  std::size_t n = 0;
  for (int z = 0; z < 3; ++z) {
    auto& f = res.zones[z];
    const auto p = static_cast<double>(f.points);
    f.rmse = std::sqrt(se[z] / p);
    f.coverage = in[z] / p;
    f.latent_coverage = in_latent[z] / p;
    pooled += in[z];
    n += f.points;
  }
  res.coverage = pooled / static_cast<double>(n);
  return res;
}

inline std::string format_validation_csv(const ValidationResult& v) {
  std::string out = "segment,step,timestamp";
  for (const char* k : {"measured", "mean", "std", "pred_std"})
    for (int z = 1; z <= 3; ++z) out += std::string(",") + k + std::to_string(z);
  out += "\n";
  for (const auto& r : v.rows) {
    out += std::to_string(r.segment) + "," + std::to_string(r.step) + "," + util::format_iso8601(r.timestamp);
    for (const auto* a : {&r.measured, &r.mean, &r.std, &r.pred_std})
      for (double x : *a) out += "," + util::format_double(x);
    out += "\n";
  }
  return out;
}

inline std::string format_validation_report(const ValidationResult& v, int interval) {
  util::KeyValues kv;
  kv["interval_steps"] = std::to_string(interval);
  kv["segments"] = std::to_string(v.segments);
  kv["coverage_2sigma"] = util::format_double(v.coverage);
  for (int z = 0; z < 3; ++z) {
    const auto p = "zone" + std::to_string(z + 1) + ".";
    kv[p + "rmse"] = util::format_double(v.zones[z].rmse);
    kv[p + "coverage_2sigma"] = util::format_double(v.zones[z].coverage);
    kv[p + "latent_coverage_2sigma"] = util::format_double(v.zones[z].latent_coverage);
    kv[p + "points"] = std::to_string(v.zones[z].points);
  }
  return util::format_key_values(kv);
}

}  // namespace gpmpc::building
