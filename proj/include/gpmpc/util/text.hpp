#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gpmpc/errors.hpp"

namespace gpmpc::util {

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Short human-readable form for reports (not for model files).
inline std::string format_short(double v, int digits = 6) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, digits);
  return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Strict decimal parse of the whole field; false on any trailing garbage.
inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline bool parse_int(std::string_view s, long long& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// ISO-8601 "YYYY-MM-DDTHH:MM:SS" (optional trailing Z) <-> seconds since epoch, UTC.
inline bool parse_iso8601(std::string_view s, std::int64_t& epoch_s) {
  s = trim(s);
  if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
  if (s.size() != 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' ||
      s[16] != ':')
    return false;
  long long Y, M, D, h, m, sec;
  if (!parse_int(s.substr(0, 4), Y) || !parse_int(s.substr(5, 2), M) || !parse_int(s.substr(8, 2), D) ||
      !parse_int(s.substr(11, 2), h) || !parse_int(s.substr(14, 2), m) || !parse_int(s.substr(17, 2), sec))
    return false;
  using namespace std::chrono;
  const year_month_day ymd{year{static_cast<int>(Y)}, month{static_cast<unsigned>(M)}, day{static_cast<unsigned>(D)}};
  if (!ymd.ok() || h > 23 || m > 59 || sec > 59) return false;
  epoch_s = sys_days{ymd}.time_since_epoch().count() * 86400LL + h * 3600 + m * 60 + sec;
  return true;
}

inline std::string format_iso8601(std::int64_t epoch_s) {
  using namespace std::chrono;
  const auto days_count = static_cast<int>(std::floor(static_cast<double>(epoch_s) / 86400.0));
  const std::int64_t rem = epoch_s - static_cast<std::int64_t>(days_count) * 86400;
  const year_month_day ymd{sys_days{days{days_count}}};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
                static_cast<int>((rem / 60) % 60), static_cast<int>(rem % 60));
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file '" + path + "'");
  out << content;
}

/// Ordered "key = value" text. Blank lines and lines starting with '#' are skipped.
using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(const std::string& text, const std::string& origin = "") {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value' in " + origin, row);
    const auto key = std::string(trim(t.substr(0, eq)));
    if (key.empty()) throw ParseError("empty key in " + origin, row);
    kv[key] = std::string(trim(t.substr(eq + 1)));
  }
  return kv;
}

inline std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

inline double kv_double(const KeyValues& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw ParseError("missing key '" + key + "'");
  double v;
  if (!parse_double(it->second, v)) throw ParseError("key '" + key + "' is not a number: '" + it->second + "'");
  return v;
}

}  // namespace gpmpc::util
