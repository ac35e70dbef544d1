#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpmpc/errors.hpp"
#include "gpmpc/util/text.hpp"

namespace gpmpc::data {

namespace channels {
inline constexpr const char* T1 = "T1";
inline constexpr const char* T2 = "T2";
inline constexpr const char* T3 = "T3";
inline constexpr const char* theta1 = "theta1";
inline constexpr const char* theta2 = "theta2";
inline constexpr const char* theta3 = "theta3";
inline constexpr const char* T_sup = "T_sup";
inline constexpr const char* T_out = "T_out";
inline constexpr const char* R_sol = "R_sol";

inline const char* zone_temperature(int zone) {
  static const char* names[] = {T1, T2, T3};
  return names[zone];
}
inline const char* zone_valve(int zone) {
  static const char* names[] = {theta1, theta2, theta3};
  return names[zone];
}
}  // namespace channels

struct Channel {
  std::string name;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;
};

/// Uniformly sampled multichannel record. Missing or rejected samples are
/// kept in place and flagged invalid, so index arithmetic stays exact.
struct RawSeries {
  std::vector<std::int64_t> timestamps;  // seconds since epoch, UTC
  std::int64_t period_s = 120;
  std::vector<Channel> channels;

  std::size_t size() const { return timestamps.size(); }

  const Channel* find(const std::string& name) const {
    for (const auto& c : channels)
      if (c.name == name) return &c;
    return nullptr;
  }
  Channel* find(const std::string& name) {
    for (auto& c : channels)
      if (c.name == name) return &c;
    return nullptr;
  }
  const Channel& channel(const std::string& name) const {
    const Channel* c = find(name);
    if (!c) throw std::invalid_argument("series has no channel '" + name + "'");
    return *c;
  }

  Channel& add_channel(const std::string& name) {
    if (find(name)) throw std::invalid_argument("duplicate channel '" + name + "'");
    channels.push_back({name, std::vector<double>(size(), std::numeric_limits<double>::quiet_NaN()),
                        std::vector<std::uint8_t>(size(), 0)});
    return channels.back();
  }

  void validate() const {
    if (period_s <= 0) throw std::invalid_argument("series period must be positive");
    for (std::size_t k = 1; k < size(); ++k)
      if (timestamps[k] - timestamps[k - 1] != period_s)
        throw std::invalid_argument("series timestamps are not uniformly spaced");
    for (const auto& c : channels)
      if (c.values.size() != size() || c.valid.size() != size())
        throw std::invalid_argument("channel '" + c.name + "' has the wrong length");
  }
};

/// Header "timestamp,<channel>,..."; first column ISO-8601; empty cell marks
/// an invalid sample. Missing rows inside the record become invalid samples.
inline RawSeries parse_series_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("series CSV: missing header", 1);
  const auto header = util::split(util::trim(line), ',');
  if (header.size() < 2) throw ParseError("series CSV: header needs a timestamp and at least one channel", 1);

  struct Row {
    std::int64_t t;
    std::vector<double> v;
  };
  std::vector<Row> rows;
  std::size_t rowno = 1;
  while (std::getline(in, line)) {
    ++rowno;
    if (util::trim(line).empty()) continue;
    const auto cells = util::split(util::trim(line), ',');
    if (cells.size() != header.size()) throw ParseError("series CSV: wrong number of columns", rowno);
    Row r;
    if (!util::parse_iso8601(cells[0], r.t)) throw ParseError("series CSV: bad timestamp", rowno, 1);
    if (!rows.empty() && r.t <= rows.back().t) throw ParseError("series CSV: timestamps not increasing", rowno, 1);
    r.v.resize(cells.size() - 1);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (util::trim(cells[c]).empty()) {
        r.v[c - 1] = std::numeric_limits<double>::quiet_NaN();
      } else if (!util::parse_double(cells[c], r.v[c - 1]) || !std::isfinite(r.v[c - 1])) {
        throw ParseError("series CSV: not a number", rowno, c + 1);
      }
    }
    rows.push_back(std::move(r));
  }

  RawSeries s;
  if (rows.size() >= 2) {
    std::int64_t period = rows[1].t - rows[0].t;
    for (std::size_t k = 1; k < rows.size(); ++k) period = std::min(period, rows[k].t - rows[k - 1].t);
    for (std::size_t k = 1; k < rows.size(); ++k)
      if ((rows[k].t - rows[k - 1].t) % period != 0)
        throw ParseError("series CSV: timestamps are not on a uniform grid", k + 2, 1);
    s.period_s = period;
  }
  const std::size_t n = rows.empty() ? 0 : static_cast<std::size_t>((rows.back().t - rows.front().t) / s.period_s) + 1;
  s.timestamps.resize(n);
  for (std::size_t k = 0; k < n; ++k) s.timestamps[k] = rows.front().t + static_cast<std::int64_t>(k) * s.period_s;
  for (std::size_t c = 1; c < header.size(); ++c) s.add_channel(std::string(util::trim(header[c])));
  for (const auto& r : rows) {
    const auto k = static_cast<std::size_t>((r.t - rows.front().t) / s.period_s);
    for (std::size_t c = 0; c < r.v.size(); ++c) {
      s.channels[c].values[k] = r.v[c];
      s.channels[c].valid[k] = std::isfinite(r.v[c]) ? 1 : 0;
    }
  }
  return s;
}

inline std::string format_series_csv(const RawSeries& s) {
  std::string out = "timestamp";
  for (const auto& c : s.channels) out += "," + c.name;
  out += "\n";
  for (std::size_t k = 0; k < s.size(); ++k) {
    out += util::format_iso8601(s.timestamps[k]);
    for (const auto& c : s.channels) {
      out += ",";
      if (c.valid[k]) out += util::format_short(c.values[k], 10);
    }
    out += "\n";
  }
  return out;
}

}  // namespace gpmpc::data
