#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include "gpmpc/errors.hpp"
#include "gpmpc/util/text.hpp"

namespace gpmpc::chiller {

/// Bivariate cubic Q(T_out, Theta) in kW. Coefficient order:
/// T, Th, T^2, T Th, Th^2, T^3, T^2 Th, T Th^2, Th^3, constant.
struct PolySurface2 {
  std::array<double, 10> coeffs{};

  static constexpr std::array<int, 10> kDegree{1, 1, 2, 2, 2, 3, 3, 3, 3, 0};

  static std::array<double, 10> monomials(double T, double Th) {
    return {T, Th, T * T, T * Th, Th * Th, T * T * T, T * T * Th, T * Th * Th, Th * Th * Th, 1.0};
  }

  double operator()(double T, double Th) const {
    const auto m = monomials(T, Th);
    double v = 0.0;
    for (std::size_t i = 0; i < 10; ++i) v += coeffs[i] * m[i];
    return v;
  }

  /// dQ/dTheta
  double d_theta(double T, double Th) const {
    const auto& c = coeffs;
    return c[1] + c[3] * T + 2.0 * c[4] * Th + c[6] * T * T + 2.0 * c[7] * T * Th + 3.0 * c[8] * Th * Th;
  }

  /// Fitted surface of the reference chiller.
  static PolySurface2 reference() {
    return {{-3.15, -3.03e-2, 1.73e-1, -1.56e-3, 3.09e-4, -2.75e-3, 4.90e-4, -6.86e-5, 2.56e-6, 20.22}};
  }
};

/// Quartic COP(Q). Coefficient order: Q^4, Q^3, Q^2, Q, constant.
struct PolyCurve1 {
  std::array<double, 5> coeffs{};

  double operator()(double Q) const {
    double v = coeffs[0];
    for (std::size_t i = 1; i < 5; ++i) v = v * Q + coeffs[i];
    return v;
  }
  double derivative(double Q) const {
    return ((4.0 * coeffs[0] * Q + 3.0 * coeffs[1]) * Q + 2.0 * coeffs[2]) * Q + coeffs[3];
  }
  double second_derivative(double Q) const { return (12.0 * coeffs[0] * Q + 6.0 * coeffs[1]) * Q + 2.0 * coeffs[2]; }

  /// Second derivative sampled on [lo, hi] at the given step is <= 0.
  bool concave_on(double lo, double hi, double step = 1.0) const {
    for (double q = lo; q <= hi + 1e-12; q += step)
      if (second_derivative(q) > 0.0) return false;
    return true;
  }

  static PolyCurve1 reference() { return {{3.30e-7, -2.69e-5, -2.67e-3, 2.34e-1, -4.45e-4}}; }
};

inline constexpr double kCopFloor = 0.1;

struct CopValue {
  double value = 0.0;  // after clamping
  double raw = 0.0;
  bool clamped = false;
};

inline double thermal_power(const PolySurface2& p, double T_out, double Theta) { return p(T_out, Theta); }

/// COP with a floor of 0.1 so that E = Q / COP stays finite.
inline CopValue cop(const PolyCurve1& c, double Q) {
  CopValue v;
  v.raw = c(Q);
  v.clamped = v.raw <= kCopFloor;
  v.value = v.clamped ? kCopFloor : v.raw;
  return v;
}

struct PowerValue {
  double electrical = 0.0;  // kW
  double thermal = 0.0;     // kW
  double cop = 0.0;
  bool cop_clamped = false;
  double d_theta = 0.0;  // dE/dTheta
};

/// E = Q(T_out, Theta) / COP(Q(T_out, Theta)), with dE/dTheta.
inline PowerValue electrical_power(const PolySurface2& p, const PolyCurve1& c, double T_out, double Theta) {
  PowerValue out;
  out.thermal = p(T_out, Theta);
  const auto cv = cop(c, out.thermal);
  out.cop = cv.value;
  out.cop_clamped = cv.clamped;
  out.electrical = out.thermal / cv.value;
  const double dcop = cv.clamped ? 0.0 : c.derivative(out.thermal);
  out.d_theta = p.d_theta(T_out, Theta) * (cv.value - out.thermal * dcop) / (cv.value * cv.value);
  return out;
}

/// Thermal surface plus COP curve.
struct ChillerModel {
  PolySurface2 thermal = PolySurface2::reference();
  PolyCurve1 cop_curve = PolyCurve1::reference();

  PowerValue power(double T_out, double Theta) const { return electrical_power(thermal, cop_curve, T_out, Theta); }
};

// Coefficient files: one coefficient per line in the documented order.

template <std::size_t N>
std::string format_coefficients(const std::array<double, N>& c) {
  std::string out;
  for (double v : c) out += util::format_double(v) + "\n";
  return out;
}

template <std::size_t N>
std::array<double, N> parse_coefficients(const std::string& text) {
  std::array<double, N> c{};
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0, k = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto t = util::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (k == N) throw ParseError("coefficient file: more than " + std::to_string(N) + " coefficients", row);
    if (!util::parse_double(t, c[k]) || !std::isfinite(c[k])) throw ParseError("coefficient file: not a number", row);
    ++k;
  }
  if (k != N) throw ParseError("coefficient file: expected " + std::to_string(N) + " coefficients");
  return c;
}

inline PolySurface2 load_surface(const std::string& path) {
  return {parse_coefficients<10>(util::read_file(path))};
}

/// Loads a COP curve and checks concavity over the operating thermal range.
inline PolyCurve1 load_cop_curve(const std::string& path, double q_lo = 10.0, double q_hi = 60.0) {
  PolyCurve1 c{parse_coefficients<5>(util::read_file(path))};
  if (!c.concave_on(q_lo, q_hi)) throw ParseError("COP curve is not concave on the operating range: " + path);
  return c;
}

}  // namespace gpmpc::chiller
