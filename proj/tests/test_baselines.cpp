#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gpmpc/sim/closed_loop.hpp"
#include "gpmpc/sim/tuning.hpp"

using namespace gpmpc;
using namespace gpmpc::control;

namespace {

PiGains simple_gains() {
  PiGains g;
  g.kp = {10.0, 10.0, 10.0};
  g.ki = {1.0, 1.0, 1.0};
  g.kff = 0.0;
  return g;
}

}  // namespace

TEST(Pi, ClosedAtSetpointWithoutLoad) {
  PiState st;
  st.gains = simple_gains();
  st.gains.kff = 3.0;
  EXPECT_EQ(pi_step(st, 0, 20.5, 20.5), 0.0);
  EXPECT_EQ(st.integrator[0], 0.0);
}

TEST(Pi, ProportionalAndIntegralParts) {
  PiState st;
  st.gains = simple_gains();
  // e = 1: u = kp e + I = 10 before the update, integrator then holds ki e.
  EXPECT_DOUBLE_EQ(pi_step(st, 1, 21.5, 20.5), 10.0);
  EXPECT_DOUBLE_EQ(st.integrator[1], 1.0);
  EXPECT_DOUBLE_EQ(pi_step(st, 1, 21.5, 20.5), 11.0);
  EXPECT_EQ(st.integrator[0], 0.0);
}

TEST(Pi, SaturationFreezesIntegrator) {
  PiState st;
  st.gains = simple_gains();
  for (int k = 0; k < 200; ++k) EXPECT_EQ(pi_step(st, 2, 40.0, 20.5), 90.0);
  EXPECT_EQ(st.integrator[2], 0.0);
  for (int k = 0; k < 200; ++k) EXPECT_EQ(pi_step(st, 2, 10.0, 20.5), 0.0);
  EXPECT_EQ(st.integrator[2], 0.0);
}

TEST(Pi, RemovesOffsetOnFirstOrderProcess) {
  // T+ = a T + (1 - a)(T_load - K theta): steady state needs theta = (T_load - sp) / K.
  const double a = 0.9, K = 0.1, T_load = 24.0;
  PiState st;
  st.gains = simple_gains();
  double T = 23.0;
  double theta = 0.0;
  for (int k = 0; k < 400; ++k) {
    theta = pi_step(st, 0, T, 30.0);
    T = a * T + (1 - a) * (T_load - K * theta);
  }
  EXPECT_NEAR(T, 20.5, 1e-6);
  EXPECT_NEAR(theta, (T_load - 20.5) / K, 1e-4);
}

TEST(OnOff, SwitchesOutsideBandAndHoldsInside) {
  EXPECT_EQ(onoff_step(21.0, 20.5, 0.4, 0.0, 0.0, 90.0), 90.0);
  EXPECT_EQ(onoff_step(20.0, 20.5, 0.4, 90.0, 0.0, 90.0), 0.0);
  EXPECT_EQ(onoff_step(20.6, 20.5, 0.4, 0.0, 0.0, 90.0), 0.0);
  EXPECT_EQ(onoff_step(20.6, 20.5, 0.4, 90.0, 0.0, 90.0), 90.0);
  EXPECT_THROW(onoff_step(20.0, 20.5, -0.1, 0.0, 0.0, 90.0), std::invalid_argument);
}

TEST(OnOff, HysteresisReducesChatterUnderNoise) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.1);
  std::vector<double> T(2000);
  for (auto& v : T) v = 20.5 + n(rng);
  auto switches = [&](double hyst) {
    double prev = 0.0;
    int count = 0;
    for (double v : T) {
      const double u = onoff_step(v, 20.5, hyst, prev, 0.0, 90.0);
      count += u != prev;
      prev = u;
    }
    return count;
  };
  EXPECT_LT(switches(0.4), switches(0.0) / 10);
}

TEST(Avg, SeededUniformWithinBounds) {
  AvgController a(0.0, 90.0, 17), b(0.0, 90.0, 17);
  double sum = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const auto u = a.act({});
    EXPECT_EQ(u, b.act({}));
    for (double v : u) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 90.0);
      sum += v;
    }
  }
  EXPECT_NEAR(sum / (3.0 * n), 45.0, 0.5);
  AvgController mid(10.0, 50.0, 1, AvgController::Mode::midpoint);
  EXPECT_EQ(mid.act({}), (Vec3{30.0, 30.0, 30.0}));
}

TEST(ClosedLoop, PiHoldsSetpointOnMildDay) {
  const sim::TruthPlant plant;
  const auto gains = sim::tune_pi(plant);
  const auto w = sim::make_scenarios(sim::hot_day(144))[2];
  const sim::GainSchedule load(plant, 0.0, 86400.0, 8);
  PiController pi(gains);
  const auto tr = sim::run_closed_loop(plant, pi, w, load, chiller::ChillerModel{}, gains.setpoint, 144);
  ASSERT_TRUE(tr.error.empty());
  ASSERT_EQ(tr.records.size(), 144u);
  double worst = 0.0;
  for (const auto& r : tr.records)
    for (double T : r.T) worst = std::max(worst, T - gains.setpoint);
  EXPECT_LT(worst, 1.0);
  const auto m = sim::metrics(tr, sim::trace_energy_kwh(tr), 21.0);
  EXPECT_DOUBLE_EQ(m.normalized_energy, 1.0);
}

TEST(ClosedLoop, EnergyIsSumOfStagePower) {
  const sim::TruthPlant plant;
  const auto w = sim::hot_day(20);
  const chiller::ChillerModel ch;
  AvgController avg(0.0, 90.0, 5);
  const auto tr = sim::run_closed_loop(plant, avg, w, sim::GainSchedule::none(), ch, 19.0, 20);
  double e = 0.0;
  for (std::size_t k = 0; k < tr.records.size(); ++k) {
    const auto& th = tr.records[k].theta;
    e += ch.power(w.T_out[k], th[0] + th[1] + th[2]).electrical / 6.0;
  }
  EXPECT_NEAR(sim::trace_energy_kwh(tr), e, 1e-12);
  const auto csv = sim::format_trace_csv(tr);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 21);
}
