#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpmpc/data/pipeline.hpp"
#include "gpmpc/gp/posterior.hpp"

namespace gpmpc::building {

using Vec3 = std::array<double, 3>;

/// Measured state at time t. T_prev holds the t-1 temperatures and must be
/// supplied by the caller.
struct BuildingState {
  Vec3 T{};
  Vec3 T_prev{};
  Vec3 theta{};
  double T_sup = 0.0;
  double T_out = 0.0;

  bool in_sanity_band() const {
    for (int i = 0; i < 3; ++i)
      if (T[i] < 5.0 || T[i] > 45.0 || T_prev[i] < 5.0 || T_prev[i] > 45.0) return false;
    return true;
  }
};

/// Positions of the quantities a zone feature can refer to.
namespace slot {
inline constexpr int T = 0;       // T_i(t), i = 0..2
inline constexpr int T_prev = 3;  // T_i(t-1)
inline constexpr int theta = 6;   // theta_i(t)
inline constexpr int T_sup = 9;
inline constexpr int T_out = 10;
inline constexpr int count = 11;
}  // namespace slot

inline std::array<double, slot::count> state_slots(const BuildingState& s) {
  return {s.T[0],     s.T[1],     s.T[2],     s.T_prev[0], s.T_prev[1], s.T_prev[2],
          s.theta[0], s.theta[1], s.theta[2], s.T_sup,     s.T_out};
}

/// Slot index of every feature of a spec, in feature order.
inline std::vector<int> feature_slots(const data::FeatureSpec& spec) {
  using namespace data::channels;
  std::vector<int> out;
  for (const auto& t : spec.terms) {
    for (int lag = 0; lag < t.delay; ++lag) {
      int s = -1;
      for (int z = 0; z < 3; ++z) {
        if (t.channel == zone_temperature(z) && lag <= 1) s = (lag == 0 ? slot::T : slot::T_prev) + z;
        if (t.channel == zone_valve(z) && lag == 0) s = slot::theta + z;
      }
      if (t.channel == data::channels::T_sup && lag == 0) s = slot::T_sup;
      if (t.channel == data::channels::T_out && lag == 0) s = slot::T_out;
      if (s < 0)
        throw std::invalid_argument("feature " + t.channel + " with delay " + std::to_string(t.delay) +
                                    " is not representable in the building state");
      out.push_back(s);
    }
  }
  return out;
}

/// Point-wise prediction of one zone with its gradient over the state slots.
struct ZonePrediction {
  double mean = 0.0;
  double var = 0.0;
  std::array<double, slot::count> dmean{};
  std::array<double, slot::count> dvar{};
};

/// The three autoregressive zone GPs and their feature wiring.
class ZoneModelSet {
 public:
  ZoneModelSet() = default;

  ZoneModelSet(std::array<gp::GpPosterior, 3> zones, std::array<data::FeatureSpec, 3> specs,
               double period_s = 600.0)
      : zones_(std::move(zones)), specs_(std::move(specs)), period_s_(period_s) {
    for (int z = 0; z < 3; ++z) {
      if (!zones_[z].fitted()) throw std::invalid_argument("ZoneModelSet: zone model is not trained");
      slots_[z] = feature_slots(specs_[z]);
      if (static_cast<Eigen::Index>(slots_[z].size()) != zones_[z].dim())
        throw std::invalid_argument("ZoneModelSet: feature spec does not match model dimension");
    }
  }

  const gp::GpPosterior& zone(int z) const { return zones_[z]; }
  const data::FeatureSpec& spec(int z) const { return specs_[z]; }
  const std::vector<int>& slots(int z) const { return slots_[z]; }
  double period_s() const { return period_s_; }
  bool trained() const { return zones_[0].fitted() && zones_[1].fitted() && zones_[2].fitted(); }

  Eigen::VectorXd features(int z, const BuildingState& s) const {
    const auto v = state_slots(s);
    Eigen::VectorXd x(static_cast<Eigen::Index>(slots_[z].size()));
    for (std::size_t j = 0; j < slots_[z].size(); ++j) x[static_cast<Eigen::Index>(j)] = v[slots_[z][j]];
    return x;
  }

  ZonePrediction predict(int z, const BuildingState& s, bool with_gradient = false) const {
    const auto p = zones_[z].predict(features(z, s), with_gradient);
    ZonePrediction out;
    out.mean = p.mean;
    out.var = p.var;
    if (with_gradient)
      for (std::size_t j = 0; j < slots_[z].size(); ++j) {
        out.dmean[slots_[z][j]] += p.dmean[static_cast<Eigen::Index>(j)];
        out.dvar[slots_[z][j]] += p.dvar[static_cast<Eigen::Index>(j)];
      }
    return out;
  }

 private:
  std::array<gp::GpPosterior, 3> zones_;
  std::array<data::FeatureSpec, 3> specs_;
  std::array<std::vector<int>, 3> slots_;
  double period_s_ = 600.0;
};

struct StepResult {
  Vec3 mean{};
  Vec3 std{};
  bool extrapolated = false;  // input state outside the sanity band
};

/// One-step prediction of all three zones (point-wise uncertainty).
inline StepResult step(const ZoneModelSet& m, const BuildingState& s) {
  if (!m.trained()) throw std::invalid_argument("step: model set is not trained");
  StepResult r;
  r.extrapolated = !s.in_sanity_band();
  for (int z = 0; z < 3; ++z) {
    const auto p = m.predict(z, s);
    r.mean[z] = p.mean;
    r.std[z] = std::sqrt(p.var);
  }
  return r;
}

struct RolloutInput {
  Vec3 theta{};
  double T_sup = 0.0;
  double T_out = 0.0;
};

/// Measured temperatures at steps 1..H, written into the chained state every
/// `interval` steps (0 disables feedback).
struct Feedback {
  std::vector<Vec3> measured;
  int interval = 0;
};

/// Chains the mean predictions autoregressively. Result k holds the
/// prediction of T(k+1). Std is point-wise at each step, not propagated.
inline std::vector<StepResult> rollout(const ZoneModelSet& m, const BuildingState& s0,
                                       const std::vector<RolloutInput>& inputs, const Feedback& fb = {}) {
  if (inputs.empty()) throw std::invalid_argument("rollout: empty input sequence");
  if (fb.interval < 0) throw std::invalid_argument("rollout: negative feedback interval");
  if (fb.interval > 0 && fb.measured.size() != inputs.size())
    throw std::invalid_argument("rollout: feedback sequence length does not match inputs");
  std::vector<StepResult> out;
  out.reserve(inputs.size());
  BuildingState s = s0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    s.theta = inputs[k].theta;
    s.T_sup = inputs[k].T_sup;
    s.T_out = inputs[k].T_out;
    out.push_back(step(m, s));
    s.T_prev = s.T;
    s.T = out.back().mean;
    const std::size_t j = k + 1;
    if (fb.interval > 0 && j % static_cast<std::size_t>(fb.interval) == 0) {
      s.T = fb.measured[k];
      if (k > 0) s.T_prev = fb.measured[k - 1];
    }
  }
  return out;
}

inline std::string format_rollout_csv(const std::vector<StepResult>& r) {
  std::string out = "step,mean1,mean2,mean3,std1,std2,std3\n";
  for (std::size_t k = 0; k < r.size(); ++k) {
    out += std::to_string(k + 1);
    for (double v : r[k].mean) out += "," + util::format_double(v);
    for (double v : r[k].std) out += "," + util::format_double(v);
    out += "\n";
  }
  return out;
}

}  // namespace gpmpc::building
