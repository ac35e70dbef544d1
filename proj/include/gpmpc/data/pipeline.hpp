#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpmpc/data/series.hpp"
#include "gpmpc/gp/dataset.hpp"

namespace gpmpc::data {

/// Keep samples 0, factor, 2*factor, ...; validity flags travel with them.
inline RawSeries downsample(const RawSeries& s, int factor) {
  if (factor <= 0) throw std::invalid_argument("downsample: factor must be >= 1");
  RawSeries out;
  out.period_s = s.period_s * factor;
  for (std::size_t k = 0; k < s.size(); k += static_cast<std::size_t>(factor)) out.timestamps.push_back(s.timestamps[k]);
  for (const auto& c : s.channels) {
    Channel oc{c.name, {}, {}};
    for (std::size_t k = 0; k < s.size(); k += static_cast<std::size_t>(factor)) {
      oc.values.push_back(c.values[k]);
      oc.valid.push_back(c.valid[k]);
    }
    out.channels.push_back(std::move(oc));
  }
  return out;
}

struct CleanOptions {
  /// Per-channel one-step jump threshold; channels not listed are not spike-filtered.
  std::map<std::string, double> spike_threshold;
  /// Longest run of invalid samples that is bridged by linear interpolation.
  int max_gap = 3;

  static CleanOptions defaults(double temperature_threshold = 3.0, double valve_threshold = 20.0) {
    CleanOptions o;
    for (const char* c : {channels::T1, channels::T2, channels::T3, channels::T_sup, channels::T_out})
      o.spike_threshold[c] = temperature_threshold;
    for (const char* c : {channels::theta1, channels::theta2, channels::theta3}) o.spike_threshold[c] = valve_threshold;
    return o;
  }
};

namespace detail {

// A short excursion (at most max_gap samples) that leaves the last accepted
// value by more than the threshold and then comes back is a spike. An
// excursion that does not come back is a level shift and is kept.
inline void reject_spikes(Channel& c, double threshold, int max_gap) {
  const std::size_t n = c.values.size();
  std::ptrdiff_t last = -1;
  for (std::size_t k = 0; k < n; ++k) {
    if (!c.valid[k]) continue;
    if (last < 0 || std::abs(c.values[k] - c.values[last]) <= threshold) {
      last = static_cast<std::ptrdiff_t>(k);
      continue;
    }
    std::size_t back = n;
    for (std::size_t j = k + 1; j < n && j <= k + static_cast<std::size_t>(max_gap); ++j)
      if (c.valid[j] && std::abs(c.values[j] - c.values[last]) <= threshold) {
        back = j;
        break;
      }
    if (back == n) {
      last = static_cast<std::ptrdiff_t>(k);
      continue;
    }
    for (std::size_t j = k; j < back; ++j) c.valid[j] = 0;
    last = static_cast<std::ptrdiff_t>(back);
    k = back;
  }
}

inline void impute_short_gaps(Channel& c, int max_gap) {
  const std::size_t n = c.values.size();
  std::size_t k = 0;
  while (k < n) {
    if (c.valid[k]) {
      ++k;
      continue;
    }
    std::size_t end = k;
    while (end < n && !c.valid[end]) ++end;
    const bool bounded = k > 0 && end < n;
    if (bounded && end - k <= static_cast<std::size_t>(max_gap)) {
      const double a = c.values[k - 1], b = c.values[end];
      const double span = static_cast<double>(end - (k - 1));
      for (std::size_t j = k; j < end; ++j) {
        const double w = static_cast<double>(j - (k - 1)) / span;
        c.values[j] = a + w * (b - a);
        c.valid[j] = 1;
      }
    }
    k = end;
  }
}

}  // namespace detail

/// Spike rejection followed by linear imputation of short gaps. Longer gaps
/// stay invalid and split the record into segments.
inline RawSeries clean(const RawSeries& s, const CleanOptions& opt) {
  RawSeries out = s;
  for (auto& c : out.channels) {
    const auto it = opt.spike_threshold.find(c.name);
    if (it != opt.spike_threshold.end()) detail::reject_spikes(c, it->second, opt.max_gap);
    detail::impute_short_gaps(c, opt.max_gap);
  }
  return out;
}

/// Same threshold on every channel.
inline RawSeries clean(const RawSeries& s, double spike_threshold) {
  CleanOptions opt;
  for (const auto& c : s.channels) opt.spike_threshold[c.name] = spike_threshold;
  return clean(s, opt);
}

struct FeatureTerm {
  std::string channel;
  int delay = 1;  // number of current-plus-past values
};

/// Autoregressive feature layout of one zone model.
struct FeatureSpec {
  std::string target;
  std::vector<FeatureTerm> terms;

  int dim() const {
    int d = 0;
    for (const auto& t : terms) d += t.delay;
    return d;
  }
  int max_delay() const {
    int m = 1;
    for (const auto& t : terms) m = std::max(m, t.delay);
    return m;
  }
  std::vector<std::string> feature_names() const {
    std::vector<std::string> out;
    for (const auto& t : terms)
      for (int l = 0; l < t.delay; ++l) out.push_back(t.channel + (l == 0 ? "[t]" : "[t-" + std::to_string(l) + "]"));
    return out;
  }
};

/// Feature layouts of the three zone models. Zone indices are 0-based.
inline FeatureSpec zone_feature_spec(int zone) {
  using namespace channels;
  switch (zone) {
    case 0:
      return {T1, {{T1, 2}, {T2, 1}, {theta1, 1}, {T_sup, 1}, {T_out, 1}}};
    case 1:
      return {T2, {{T1, 1}, {T2, 2}, {T3, 1}, {theta2, 1}, {T_sup, 1}, {T_out, 1}}};
    case 2:
      return {T3, {{T2, 1}, {T3, 2}, {theta3, 1}, {T_sup, 1}, {T_out, 1}}};
    default:
      throw std::invalid_argument("zone index must be 0, 1 or 2");
  }
}

struct FeatureRows {
  gp::Dataset data;
  std::vector<std::size_t> time_index;  // series index t of each row (label at t+1)
};

/// One row per time t whose lagged features and label (target at t+1) are all
/// valid; rows touching an invalid sample are dropped.
inline FeatureRows build_feature_rows(const RawSeries& s, const FeatureSpec& spec) {
  std::vector<const Channel*> cols;
  for (const auto& t : spec.terms) {
    if (t.delay < 1) throw std::invalid_argument("feature delay must be >= 1");
    const Channel* c = s.find(t.channel);
    if (!c) throw std::invalid_argument("feature spec references missing channel '" + t.channel + "'");
    cols.push_back(c);
  }
  const Channel* target = s.find(spec.target);
  if (!target) throw std::invalid_argument("feature spec references missing target '" + spec.target + "'");

  const int d = spec.dim();
  const std::size_t first = static_cast<std::size_t>(spec.max_delay() - 1);
  std::vector<double> buf;
  FeatureRows out;
  for (std::size_t t = first; t + 1 < s.size(); ++t) {
    if (!target->valid[t + 1]) continue;
    bool ok = true;
    for (std::size_t i = 0; i < cols.size() && ok; ++i)
      for (int l = 0; l < spec.terms[i].delay && ok; ++l) ok = cols[i]->valid[t - l] != 0;
    if (!ok) continue;
    for (std::size_t i = 0; i < cols.size(); ++i)
      for (int l = 0; l < spec.terms[i].delay; ++l) buf.push_back(cols[i]->values[t - l]);
    buf.push_back(target->values[t + 1]);
    out.time_index.push_back(t);
  }
  const auto n = static_cast<Eigen::Index>(out.time_index.size());
  out.data.X.resize(n, d);
  out.data.y.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int j = 0; j < d; ++j) out.data.X(r, j) = buf[r * (d + 1) + j];
    out.data.y[r] = buf[r * (d + 1) + d];
  }
  return out;
}

inline gp::Dataset build_features(const RawSeries& s, const FeatureSpec& spec) {
  return build_feature_rows(s, spec).data;
}

/// Indices of the rows kept by a greedy forward pass: a row survives iff its
/// Euclidean distance to every previously kept row is at least eps.
inline std::vector<Eigen::Index> deduplicate_indices(const gp::Dataset& d, double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("deduplicate: eps must be >= 0");
  std::vector<Eigen::Index> kept;
  const double eps2 = eps * eps;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    bool keep = true;
    if (eps > 0.0)
      for (const auto j : kept)
        if ((d.X.row(i) - d.X.row(j)).squaredNorm() < eps2) {
          keep = false;
          break;
        }
    if (keep) kept.push_back(i);
  }
  return kept;
}

inline gp::Dataset deduplicate(const gp::Dataset& d, double eps) {
  const auto kept = deduplicate_indices(d, eps);
  gp::Dataset out;
  out.X.resize(static_cast<Eigen::Index>(kept.size()), d.dim());
  out.y.resize(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t r = 0; r < kept.size(); ++r) {
    out.X.row(static_cast<Eigen::Index>(r)) = d.X.row(kept[r]);
    out.y[static_cast<Eigen::Index>(r)] = d.y[kept[r]];
  }
  return out;
}

}  // namespace gpmpc::data
