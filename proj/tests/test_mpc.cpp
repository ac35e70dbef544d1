#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gpmpc/control/reference.hpp"
#include "gpmpc/mpc/solver.hpp"
#include "gpmpc/sim/closed_loop.hpp"
#include "gpmpc/sim/tuning.hpp"

using namespace gpmpc;
using namespace gpmpc::mpc;

namespace {

// Smooth coupled toy dynamics with state- and input-dependent variance.
class ToyModel : public PredictionModel {
 public:
  StagePrediction predict(const Vec3& T, const Vec3& Tp, const Vec3& th, const StageDisturbance& d,
                          bool with_gradient) const override {
    StagePrediction out;
    for (int i = 0; i < 3; ++i) {
      const double c = 0.04 * (1.0 - std::exp(-th[i] / 30.0));
      const int j = (i + 1) % 3;
      out.mean[i] = 0.8 * T[i] + 0.1 * Tp[i] + 0.05 * T[j] + 0.05 * d.T_out - 30.0 * c + 0.002 * th[i] * (T[i] - 20.0);
      out.var[i] = 0.01 + 0.002 * std::pow(std::sin(th[i] / 20.0 + 0.3 * T[i]), 2);
      if (!with_gradient) continue;
      out.dmean_dT(i, i) = 0.8 + 0.002 * th[i];
      out.dmean_dT(i, j) += 0.05;
      out.dmean_dTprev(i, i) = 0.1;
      out.dmean_dtheta(i, i) = -30.0 * 0.04 * std::exp(-th[i] / 30.0) / 30.0 + 0.002 * (T[i] - 20.0);
      const double a = th[i] / 20.0 + 0.3 * T[i];
      const double dv = 0.002 * 2.0 * std::sin(a) * std::cos(a);
      out.dvar_dtheta(i, i) = dv / 20.0;
      out.dvar_dT(i, i) = dv * 0.3;
    }
    return out;
  }
};

// Zone i sees only its own valve; used where exhaustive search must be cheap.
class SeparableModel : public PredictionModel {
 public:
  StagePrediction predict(const Vec3& T, const Vec3&, const Vec3& th, const StageDisturbance& d,
                          bool with_gradient) const override {
    StagePrediction out;
    for (int i = 0; i < 3; ++i) {
      const double k = 0.03 + 0.01 * i;
      out.mean[i] = T[i] + 0.1 * (d.T_out - T[i]) - 4.0 * (1.0 - std::exp(-k * th[i]));
      out.var[i] = 0.02 * std::exp(-th[i] / 60.0);
      if (!with_gradient) continue;
      out.dmean_dT(i, i) = 0.9;
      out.dmean_dtheta(i, i) = -4.0 * k * std::exp(-k * th[i]);
      out.dvar_dtheta(i, i) = -out.var[i] / 60.0;
    }
    return out;
  }
};

MpcProblem toy_problem(std::shared_ptr<const PredictionModel> m, int N, Vec3 T0, double T_out) {
  MpcProblem p;
  p.model = std::move(m);
  p.T0 = T0;
  p.T_prev0 = T0;
  p.cfg.horizon = N;
  for (int t = 0; t < N; ++t) p.disturbances.push_back({10.5, T_out, 0.0, 600.0 * t});
  return p;
}

Eigen::VectorXd random_interior(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(5.0, 85.0);
  Eigen::VectorXd x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

}  // namespace

TEST(Mpc, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(1);
  const auto p = toy_problem(std::make_shared<ToyModel>(), 6, {22.5, 23.0, 21.8}, 33.0);
  for (int rep = 0; rep < 5; ++rep) {
    const auto x = random_interior(p.num_vars(), rng);
    const auto ev = evaluate(p, x, true);
    ASSERT_GT(ev.total_slack, 0.0);
    for (int k = 0; k < p.num_vars(); ++k) {
      const double h = 1e-5;
      auto a = x, b = x;
      a[k] += h;
      b[k] -= h;
      const double fd = (evaluate(p, a, false).objective - evaluate(p, b, false).objective) / (2 * h);
      EXPECT_NEAR(ev.gradient[k], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "component " << k;
    }
  }
}

TEST(Mpc, GradientMatchesFiniteDifferencesOnTruePlant) {
  const sim::TruthPlant plant;
  auto model = std::make_shared<control::PlantPredictionModel>(plant, sim::GainSchedule::none());
  auto p = toy_problem(model, 5, {21.5, 22.0, 21.2}, 34.0);
  std::mt19937_64 rng(2);
  const auto x = random_interior(p.num_vars(), rng);
  const auto ev = evaluate(p, x, true);
  for (int k = 0; k < p.num_vars(); ++k) {
    const double h = 1e-5;
    auto a = x, b = x;
    a[k] += h;
    b[k] -= h;
    const double fd = (evaluate(p, a, false).objective - evaluate(p, b, false).objective) / (2 * h);
    EXPECT_NEAR(ev.gradient[k], fd, 1e-4 * std::max(1.0, std::abs(fd)));
  }
}

TEST(Mpc, SlackIsMinimalViolation) {
  const auto p = toy_problem(std::make_shared<ToyModel>(), 4, {26.0, 26.0, 26.0}, 35.0);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(p.num_vars(), 90.0);
  const auto ev = evaluate(p, x, false);
  for (int t = 0; t < 4; ++t)
    for (int i = 0; i < 3; ++i) {
      const double need = ev.T(t, i) + p.cfg.beta * ev.std(t, i) - p.cfg.T_max;
      EXPECT_DOUBLE_EQ(ev.delta(t + 1, i), std::max(0.0, need));
      EXPECT_GT(ev.delta(t + 1, i), 0.0);
    }
  EXPECT_EQ(ev.delta.row(0).sum(), 0.0);
}

TEST(Mpc, ObjectiveDecomposes) {
  std::mt19937_64 rng(4);
  auto p = toy_problem(std::make_shared<ToyModel>(), 5, {22.0, 21.5, 23.0}, 31.0);
  const auto x = random_interior(p.num_vars(), rng);
  const auto ev = evaluate(p, x, false);
  double f = 0.0;
  for (int t = 0; t < 5; ++t) {
    const auto th = x.segment(3 * t, 3);
    f += p.chiller.power(31.0, th.sum()).electrical;
    const double w = t == 4 ? p.cfg.rho_N : p.cfg.rho;
    f += w * ev.delta.row(t + 1).squaredNorm();
  }
  EXPECT_NEAR(ev.objective, f, 1e-9 * std::abs(f));
}

TEST(Mpc, SolutionSatisfiesFirstOrderConditions) {
  const auto p = toy_problem(std::make_shared<ToyModel>(), 8, {22.0, 22.5, 21.0}, 33.0);
  const auto sol = solve(p, warm_start(p, control::PiGains{}));
  EXPECT_TRUE(sol.converged);
  EXPECT_LE(sol.kkt, p.cfg.kkt_tol);
  EXPECT_TRUE((sol.theta.array() >= 0.0).all() && (sol.theta.array() <= 90.0).all());
  const auto ev = evaluate(p, theta_vector(sol.theta), true);
  const auto x = theta_vector(sol.theta);
  EXPECT_NEAR(numeric::box_kkt_residual(x, ev.gradient, Eigen::VectorXd::Zero(x.size()),
                                        Eigen::VectorXd::Constant(x.size(), 90.0)),
              sol.kkt, 1e-12);
}

TEST(Mpc, SingleStageMatchesExhaustiveSearch) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uT(19.0, 24.0), uo(17.0, 35.0);
  auto model = std::make_shared<SeparableModel>();
  for (int rep = 0; rep < 5; ++rep) {
    const double T_out = uo(rng);
    Vec3 T0{};
    for (double& v : T0) v = uT(rng);
    auto p = toy_problem(model, 1, T0, T_out);
    const auto sol = control_step(p, control::PiGains{}).second;
    double best = 1e300;
    Eigen::VectorXd x(3);
    for (int a = 0; a <= 90; ++a)
      for (int b = 0; b <= 90; ++b)
        for (int c = 0; c <= 90; ++c) {
          x << a, b, c;
          best = std::min(best, evaluate(p, x, false).objective);
        }
    EXPECT_LE(sol.objective, best * 1.005) << "instance " << rep;
  }
}

TEST(Mpc, ComfortableSingleStageMinimizesChillerPower) {
  for (double T_out : {17.0, 22.0, 28.0, 35.0}) {
    auto p = toy_problem(std::make_shared<SeparableModel>(), 1, {17.0, 17.0, 17.0}, T_out);
    p.cfg.beta = 0.0;
    const auto sol = control_step(p, control::PiGains{}).second;
    EXPECT_EQ(sol.total_slack, 0.0);
    double best = 1e300;
    for (int Th = 0; Th <= 270; ++Th) best = std::min(best, p.chiller.power(T_out, Th).electrical);
    EXPECT_LE(sol.objective, best + 1e-9) << T_out;
    EXPECT_GE(sol.objective, best - 0.01) << T_out;
  }
}

TEST(Mpc, SlackCannotShrink) {
  auto p = toy_problem(std::make_shared<ToyModel>(), 6, {22.5, 23.0, 21.8}, 34.0);
  const auto sol = control_step(p, control::PiGains{}).second;
  ASSERT_GT(sol.total_slack, 0.0);
  for (int t = 0; t < 6; ++t)
    for (int i = 0; i < 3; ++i) {
      const double d = sol.delta(t + 1, i);
      EXPECT_GE(d, 0.0);
      if (d == 0.0) continue;
      // The tightened constraint with delta - 1e-4 is violated.
      EXPECT_GT(sol.T(t, i) + p.cfg.beta * sol.std(t, i), p.cfg.T_max + d - 1e-4);
    }
}

TEST(Mpc, TighterBackoffNeverLowersOptimalCost) {
  auto base = toy_problem(std::make_shared<ToyModel>(), 6, {21.5, 21.8, 21.2}, 33.0);
  double prev = -1.0;
  for (double beta : {0.0, 1.0, 2.0, 3.0}) {
    auto p = base;
    p.cfg.beta = beta;
    const auto sol = control_step(p, control::PiGains{}).second;
    EXPECT_GE(sol.objective, prev * (1 - 1e-9)) << "beta " << beta;
    prev = sol.objective;
  }
}

TEST(Mpc, HeavierSlackWeightNeverRaisesSlack) {
  auto base = toy_problem(std::make_shared<ToyModel>(), 6, {21.8, 22.0, 21.5}, 31.0);
  double prev = 1e9;
  for (double rho : {1.0, 10.0, 100.0, 1000.0}) {
    auto p = base;
    p.cfg.rho = rho;
    p.cfg.rho_N = 2 * rho;
    const auto sol = control_step(p, control::PiGains{}).second;
    EXPECT_LE(sol.total_slack, prev * (1 + 1e-6)) << "rho " << rho;
    prev = sol.total_slack;
  }
}

TEST(Mpc, FlatChillerAnyValveIsOptimal) {
  auto p = toy_problem(std::make_shared<ToyModel>(), 4, {17.0, 17.0, 17.0}, 18.0);
  p.cfg.T_max = 40.0;
  p.chiller.thermal.coeffs.fill(0.0);
  p.chiller.thermal.coeffs[9] = 20.0;
  p.chiller.cop_curve.coeffs.fill(0.0);
  p.chiller.cop_curve.coeffs[4] = 4.0;
  const auto sol = solve(p, cold_start(p));
  EXPECT_EQ(sol.total_slack, 0.0);
  EXPECT_DOUBLE_EQ(sol.objective, 4 * 5.0);
  EXPECT_TRUE(sol.converged);
  EXPECT_EQ(sol.iterations, 0);
}

TEST(Mpc, ShiftedPlanConvergesFasterThanCold) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> uT(20.0, 23.0), uo(25.0, 35.0);
  auto model = std::make_shared<ToyModel>();
  std::vector<int> shifted, cold;
  for (int rep = 0; rep < 20; ++rep) {
    const double T_out = uo(rng);
    Vec3 T0{};
    for (double& v : T0) v = uT(rng);
    auto p = toy_problem(model, 8, T0, T_out);
    const auto first = solve(p, warm_start(p, control::PiGains{}));
    auto next = p;
    next.T_prev0 = p.T0;
    next.T0 = {first.T(0, 0), first.T(0, 1), first.T(0, 2)};
    shifted.push_back(solve(next, shifted_guess(next, first)).iterations);
    cold.push_back(solve(next, cold_start(next)).iterations);
  }
  std::nth_element(shifted.begin(), shifted.begin() + 10, shifted.end());
  std::nth_element(cold.begin(), cold.begin() + 10, cold.end());
  EXPECT_LT(shifted[10], cold[10]);
}

TEST(Mpc, PredictedTrajectoryMatchesChainedModel) {
  auto p = toy_problem(std::make_shared<ToyModel>(), 6, {22.0, 22.5, 21.0}, 32.0);
  const auto sol = solve(p, warm_start(p, control::PiGains{}));
  Vec3 T = p.T0, Tp = p.T_prev0;
  for (int t = 0; t < 6; ++t) {
    const Vec3 th{sol.theta(t, 0), sol.theta(t, 1), sol.theta(t, 2)};
    const auto pr = p.model->predict(T, Tp, th, p.disturbances[t], false);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(sol.T(t, i), pr.mean[i], 1e-12);
    Tp = T;
    T = pr.mean;
  }
}

TEST(Mpc, ControlStepIsDeterministic) {
  auto p = toy_problem(std::make_shared<ToyModel>(), 6, {22.0, 22.5, 21.0}, 32.0);
  const auto [u1, s1] = control_step(p, control::PiGains{});
  const auto [u2, s2] = control_step(p, control::PiGains{});
  EXPECT_EQ(u1, u2);
  EXPECT_EQ(format_solution_csv(s1), format_solution_csv(s2));
  p.cfg.bound_starts = false;
  const auto [u3, s3] = control_step(p, control::PiGains{});
  EXPECT_EQ(s3.warm_start, "pi");
  const auto [u4, s4] = control_step(p, control::PiGains{}, s3);
  EXPECT_EQ(s4.warm_start, "shifted");
}

TEST(Mpc, MultistartNeverWorseThanPrimary) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> uT(19.0, 24.0), uo(17.0, 35.0);
  for (int rep = 0; rep < 10; ++rep) {
    const double T_out = uo(rng);
    Vec3 T0{};
    for (double& v : T0) v = uT(rng);
    auto p = toy_problem(std::make_shared<ToyModel>(), 4, T0, T_out);
    const auto guess = warm_start(p, control::PiGains{});
    EXPECT_LE(solve_multistart(p, guess).objective, solve(p, guess).objective);
  }
}

TEST(Mpc, WarmStartTrajectoryIsFeasibleForBounds) {
  auto p = toy_problem(std::make_shared<ToyModel>(), 10, {25.0, 25.0, 25.0}, 35.0);
  const auto g = warm_start(p, control::PiGains{});
  EXPECT_EQ(g.source, "pi");
  EXPECT_TRUE((g.theta.array() >= 0.0).all() && (g.theta.array() <= 90.0).all());
  EXPECT_EQ(g.theta.row(0).minCoeff(), 90.0);  // far too warm: PI saturates
  const auto ev = evaluate(p, theta_vector(g.theta), false);
  EXPECT_EQ(g.T, ev.T);
}

TEST(Mpc, ConfigValidation) {
  MpcConfig c;
  EXPECT_NO_THROW(c.validate());
  c.horizon = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.rho = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.theta_min = 90.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  auto p = toy_problem(std::make_shared<ToyModel>(), 3, {}, 30.0);
  EXPECT_THROW(evaluate(p, Eigen::VectorXd::Zero(4), false), std::invalid_argument);
}

TEST(Reference, PlanMatchesPlantExactly) {
  const sim::TruthPlant plant;
  const auto w = sim::hot_day(8 + 12, 600.0, 10 * 3600.0);
  const sim::GainSchedule gains(plant, 0.0, 86400.0, 3);
  MpcConfig cfg;
  control::RefController ref(plant, gains, w, chiller::ChillerModel{}, control::reference_config(cfg, 12),
                             sim::tune_pi(plant));
  Vec3 T{21.0, 21.0, 21.0}, T_prev = T;
  for (int k = 0; k < 8; ++k) {
    control::Observation obs;
    obs.step = k;
    obs.time_s = w.time(k);
    obs.T = T;
    obs.T_prev = T_prev;
    obs.T_out = w.T_out[k];
    obs.T_sup = w.T_sup[k];
    obs.R_sol = w.R_sol[k];
    const auto u = ref.act(obs);
    T_prev = T;
    T = sim::plant_step(plant, T, {u, w.T_sup[k], w.T_out[k], w.R_sol[k], gains.at(w.time(k))});
    const auto& plan = *ref.last_solution();
    for (int i = 0; i < 3; ++i) {
      EXPECT_NEAR(plan.T(0, i), T[i], 1e-10);
      EXPECT_EQ(plan.std(0, i), 1e-6);
    }
  }
}

// Strictly convex box QP solved by enumerating every lo/hi/free assignment.
TEST(BoxQn, ConvexQpMatchesActiveSetEnumeration) {
  std::mt19937_64 rng(71);
  std::normal_distribution<double> g(0.0, 1.0);
  const int n = 5;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = g(rng);
    const Eigen::MatrixXd Q = A * A.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd c(n);
    for (int i = 0; i < n; ++i) c[i] = 3.0 * g(rng);
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, -1.0), hi = Eigen::VectorXd::Constant(n, 1.0);
    auto f = [&](const Eigen::VectorXd& x) { return 0.5 * x.dot(Q * x) + c.dot(x); };

    double best = 1e300;
    int code = 1;
    for (int k = 0; k < n; ++k) code *= 3;
    for (int m = 0; m < code; ++m) {
      Eigen::VectorXd x(n);
      std::vector<int> fr;
      for (int i = 0, r = m; i < n; ++i, r /= 3) {
        if (r % 3 == 0) x[i] = -1.0;
        if (r % 3 == 1) x[i] = 1.0;
        if (r % 3 == 2) fr.push_back(i);
      }
      if (!fr.empty()) {
        const auto nf = static_cast<Eigen::Index>(fr.size());
        Eigen::MatrixXd Qf(nf, nf);
        Eigen::VectorXd rhs(nf);
        for (Eigen::Index a = 0; a < nf; ++a) {
          rhs[a] = -c[fr[a]];
          for (int j = 0; j < n; ++j)
            if (std::find(fr.begin(), fr.end(), j) == fr.end()) rhs[a] -= Q(fr[a], j) * x[j];
          for (Eigen::Index b = 0; b < nf; ++b) Qf(a, b) = Q(fr[a], fr[b]);
        }
        const Eigen::VectorXd xf = Qf.ldlt().solve(rhs);
        bool inside = true;
        for (Eigen::Index a = 0; a < nf; ++a) {
          inside = inside && std::abs(xf[a]) <= 1.0;
          x[fr[a]] = xf[a];
        }
        if (!inside) continue;
      }
      best = std::min(best, f(x));
    }

    const auto r = numeric::minimize_box(
        [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
          grad = Q * x + c;
          return f(x);
        },
        Eigen::VectorXd::Zero(n), lo, hi);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.f, best, 1e-9 * std::max(1.0, std::abs(best)));
  }
}

TEST(BoxQn, BoundedRosenbrockConverges) {
  const int n = 10;
  auto fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    double f = 0.0;
    grad.setZero(n);
    for (int i = 0; i + 1 < n; ++i) {
      const double a = x[i + 1] - x[i] * x[i], b = 1.0 - x[i];
      f += 100.0 * a * a + b * b;
      grad[i] += -400.0 * a * x[i] - 2.0 * b;
      grad[i + 1] += 200.0 * a;
    }
    return f;
  };
  // Unconstrained minimum at all ones lies outside the box; the bounded
  // minimum (value from an independent L-BFGS-B run) has x0 on its bound.
  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, -2.0), hi = Eigen::VectorXd::Constant(n, 0.7);
  const auto r = numeric::minimize_box(fn, Eigen::VectorXd::Constant(n, -1.0), lo, hi);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.kkt, 1e-6);
  EXPECT_LT(r.iterations, 300);
  EXPECT_TRUE((r.x.array() >= lo.array()).all() && (r.x.array() <= hi.array()).all());
  EXPECT_EQ(r.x[0], 0.7);
  EXPECT_NEAR(r.f, 6.6981996784724, 1e-8);
}
