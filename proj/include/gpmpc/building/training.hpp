#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <string>

#include "gpmpc/building/model.hpp"
#include "gpmpc/gp/io.hpp"
#include "gpmpc/gp/optimize.hpp"

namespace gpmpc::building {

struct TrainOptions {
  int downsample_factor = 5;
  data::CleanOptions clean = data::CleanOptions::defaults();
  double dedup_eps = 2.0;
  int max_iterations = 200;
};

struct ZoneTrainingSummary {
  std::size_t rows_before_dedup = 0;
  std::size_t rows = 0;
  gp::TrainingReport report;
  double wall_seconds = 0.0;
};

struct TrainResult {
  ZoneModelSet models;
  std::array<ZoneTrainingSummary, 3> zones;
};

/// clean -> downsample -> Table-2 features -> dedup, per zone.
inline std::array<gp::Dataset, 3> prepare_zone_datasets(const data::RawSeries& raw, const TrainOptions& opt,
                                                        std::array<std::size_t, 3>* rows_before = nullptr) {
  const auto s = data::downsample(data::clean(raw, opt.clean), opt.downsample_factor);
  std::array<gp::Dataset, 3> out;
  for (int z = 0; z < 3; ++z) {
    const auto full = data::build_features(s, data::zone_feature_spec(z));
    if (rows_before) (*rows_before)[z] = static_cast<std::size_t>(full.size());
    out[z] = data::deduplicate(full, opt.dedup_eps);
  }
  return out;
}

inline TrainResult train_zone_models(const data::RawSeries& raw, const TrainOptions& opt) {
  std::array<std::size_t, 3> before{};
  const auto sets = prepare_zone_datasets(raw, opt, &before);
  TrainResult res;
  std::array<gp::GpPosterior, 3> zones;
  std::array<data::FeatureSpec, 3> specs;
  for (int z = 0; z < 3; ++z) {
    if (sets[z].size() < 2) throw DataError("training data for zone " + std::to_string(z + 1) + " has fewer than two rows");
    const auto t0 = std::chrono::steady_clock::now();
    auto rep = gp::optimize_hyperparams(sets[z], gp::initial_hyperparams(sets[z]), opt.max_iterations);
    zones[z] = gp::fit(sets[z], rep.hyperparams);
    res.zones[z].wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.zones[z].rows_before_dedup = before[z];
    res.zones[z].rows = static_cast<std::size_t>(sets[z].size());
    res.zones[z].report = std::move(rep);
    specs[z] = data::zone_feature_spec(z);
  }
  res.models = ZoneModelSet(std::move(zones), std::move(specs), static_cast<double>(raw.period_s * opt.downsample_factor));
  return res;
}

// Model bundle: zoneK.hyp (key-value hyperparameters plus feature names) and
// zoneK.csv (training set), K = 1..3.

inline void save_model_set(const ZoneModelSet& m, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (int z = 0; z < 3; ++z) {
    const auto base = (std::filesystem::path(dir) / ("zone" + std::to_string(z + 1))).string();
    const auto names = m.spec(z).feature_names();
    std::string hyp = "features = " + util::join(names, ";") + "\n";
    hyp += "period_s = " + util::format_double(m.period_s()) + "\n";
    hyp += gp::format_hyperparams(m.zone(z).hyperparams());
    util::write_file(base + ".hyp", hyp);
    util::write_file(base + ".csv", gp::format_dataset_csv(m.zone(z).dataset(), names, m.spec(z).target + "[t+1]"));
  }
}

inline ZoneModelSet load_model_set(const std::string& dir) {
  std::array<gp::GpPosterior, 3> zones;
  std::array<data::FeatureSpec, 3> specs;
  double period = 600.0;
  for (int z = 0; z < 3; ++z) {
    const auto base = (std::filesystem::path(dir) / ("zone" + std::to_string(z + 1))).string();
    const auto text = util::read_file(base + ".hyp");
    const auto kv = util::parse_key_values(text, base + ".hyp");
    specs[z] = data::zone_feature_spec(z);
    const auto it = kv.find("features");
    if (it == kv.end() || it->second != util::join(specs[z].feature_names(), ";"))
      throw ParseError("model file " + base + ".hyp: feature layout does not match zone " + std::to_string(z + 1));
    period = util::kv_double(kv, "period_s");
    auto ds = gp::parse_dataset_csv(util::read_file(base + ".csv"));
    const auto h = gp::parse_hyperparams(text);
    if (ds.dim() != h.dim()) throw ParseError("model bundle " + base + ": dataset and hyperparameter dimensions differ");
    zones[z] = gp::fit(std::move(ds), h);
  }
  return ZoneModelSet(std::move(zones), std::move(specs), period);
}

}  // namespace gpmpc::building
