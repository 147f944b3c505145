#include <gtest/gtest.h>

#include <cmath>

#include "rhd/jumpdiff.hpp"

using namespace rhd;
using namespace rhd::jd;

namespace {

Scenario small(std::size_t n = 20000) {
  Scenario sc;
  sc.n_paths = n;
  sc.dt = 1.0 / 256.0;
  sc.validate();
  return sc;
}

ErrorKind kind_of(Scenario sc) {
  try {
    sc.validate();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::unsupported;
}

}  // namespace

TEST(Scenario, Validation) {
  Scenario sc;
  sc.a = 1.5;
  EXPECT_EQ(kind_of(sc), ErrorKind::input);
  sc = {};
  sc.sigma = 0.0;
  EXPECT_EQ(kind_of(sc), ErrorKind::input);
  sc = {};
  sc.dt = -1.0;
  EXPECT_EQ(kind_of(sc), ErrorKind::input);
  sc = {};
  sc.n_paths = 0;
  EXPECT_EQ(kind_of(sc), ErrorKind::input);
  sc = {};
  sc.obs_times = {0.1};
  EXPECT_EQ(kind_of(sc), ErrorKind::input);
  sc = {};
  sc.validate();
  EXPECT_EQ(sc.obs_times.size(), 5u);
  EXPECT_DOUBLE_EQ(sc.beta(), 2.0);
}

TEST(ClosedForms, InitialValues) {
  const double beta = 2.0, lambda = 2.0, T1 = 0.7;
  EXPECT_EQ(Gtilde(beta, 0.0, T1), 1.0);
  EXPECT_EQ(G(beta, 0.0, T1), 1.0);
  EXPECT_EQ(DoF(beta, lambda, 0.0, T1), 0.0);
  EXPECT_EQ(m(beta, lambda, 0.0, T1), 1.0);
}

TEST(ClosedForms, SurvivalAtOneOverBeta) {
  const double beta = 2.0;
  EXPECT_NEAR(G(beta, 1.0 / beta, 5.0), 2.0 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(G(beta, 1.0 / beta, 5.0), 0.7357588823428847, 1e-15);
  EXPECT_EQ(G(beta, 1.0, 0.5), 0.0);
  EXPECT_NEAR(Gtilde(beta, 0.5, 0.5), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(Gminus(beta, 0.5, 0.5), 2.0 * std::exp(-1.0), 1e-15);
}

TEST(ClosedForms, MEqualsGPlusDoFAndTrapezoidConverges) {
  const double beta = 2.0, lambda = 2.0;
  for (double T1 : {0.3, 0.77, 2.0})
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      EXPECT_NEAR(m(beta, lambda, t, T1), G(beta, t, T1) + DoF(beta, lambda, t, T1), 1e-14);
      DoFTrapezoid coarse(beta, lambda, 1.0 / 64.0, 1.0), fine(beta, lambda, 1.0 / 128.0, 1.0);
      const double ec = std::abs(coarse(t, T1) - DoF(beta, lambda, t, T1));
      const double ef = std::abs(fine(t, T1) - DoF(beta, lambda, t, T1));
      EXPECT_LE(ec, 5.0 / 64.0);
      EXPECT_LE(ef, ec + 1e-15);
    }
}

TEST(Drift, SolveDrift) {
  Scenario sc;
  sc.mu = 0.0;
  EXPECT_EQ(solve_drift(sc, 1.0), 0.0);
  sc.mu = 0.05;
  sc.zeta = 0.0;
  EXPECT_NEAR(solve_drift(sc, 0.3), -0.25, 1e-15);
  sc = {};
  EXPECT_NEAR(solve_drift(sc, 0.5), 0.35, 1e-15);
  EXPECT_THROW(solve_drift(sc, 0.0), Error);
}

TEST(Simulate, DeterministicAcrossWorkerCounts) {
  Scenario sc = small(500);
  auto a = simulate(sc, 1), b = simulate(sc, 3);
  ASSERT_EQ(a.paths.size(), b.paths.size());
  for (std::size_t i = 0; i < a.paths.size(); ++i) {
    EXPECT_EQ(a.paths[i].T1, b.paths[i].T1);
    EXPECT_EQ(a.paths[i].W, b.paths[i].W);
    EXPECT_EQ(a.paths[i].W_tau, b.paths[i].W_tau);
  }
}

TEST(Simulate, TauBeforeFirstJump) {
  auto b = simulate(small(2000), 1);
  for (const auto& p : b.paths) {
    EXPECT_LE(p.tau, p.T1);
    EXPECT_LT(p.T1, p.T2);
  }
}

TEST(Simulate, JumpCountAndDriftlessPrice) {
  Scenario sc = small(40000);
  sc.mu = 0.0;
  sc.zeta = 0.0;
  auto b = simulate(sc, 1);
  std::vector<std::vector<double>> s(1), n(1);
  for (const auto& p : b.paths) {
    s[0].push_back(S(sc, sc.horizon, p.W.back(), p.N.back()));
    n[0].push_back(p.N.back());
  }
  EXPECT_FALSE(mc_test({sc.horizon}, s, sc.S0, Null::martingale).rejected);
  EXPECT_FALSE(mc_test({sc.horizon}, n, sc.lambda * sc.horizon, Null::martingale).rejected);
}

TEST(Simulate, DriftingPriceIsRejected) {
  Scenario sc = small(100000);
  sc.mu = 0.05;
  sc.zeta = 0.0;
  sc.obs_times = {0.0, 1.0};
  sc.validate();
  auto b = simulate(sc, 1);
  std::vector<std::vector<double>> s(2);
  for (const auto& p : b.paths) {
    s[0].push_back(sc.S0);
    s[1].push_back(S(sc, 1.0, p.W[1], p.N[1]));
  }
  EXPECT_TRUE(mc_test(sc.obs_times, s, sc.S0, Null::martingale).rejected);
}

TEST(Simulate, SurvivalIndicatorMatchesG) {
  Scenario sc = small(40000);
  auto b = simulate(sc, 1);
  std::vector<std::vector<double>> v(sc.obs_times.size());
  for (std::size_t i = 0; i < sc.obs_times.size(); ++i)
    for (const auto& p : b.paths)
      v[i].push_back((p.tau > sc.obs_times[i] ? 1.0 : 0.0) - G(sc.beta(), sc.obs_times[i], p.T1));
  EXPECT_FALSE(mc_test(sc.obs_times, v, 0.0, Null::martingale).rejected);
}

TEST(Deflators, SurvivalCorrectedEqualsZeroPhiDeflatorPathwise) {
  Scenario sc = small(300);
  auto b = simulate(sc, 1);
  DeflatorSpec d{solve_drift(sc, 0.8), 0.8, 0.0, 0.0};
  for (const auto& p : b.paths)
    for (std::size_t i = 0; i < sc.obs_times.size(); ++i) {
      const double x = deflator(sc, d, i, p), y = deflator_cor33(sc, d, i, p);
      EXPECT_NEAR(x, y, 1e-12 * std::max(1.0, std::abs(y)));
    }
}

TEST(Deflators, ConstraintsAreChecked) {
  Scenario sc = small(100);
  auto b = simulate(sc, 1);
  DeflatorSpec d{solve_drift(sc, 1.0), 1.0, -2.0, 0.0};
  try {
    check_constraints(b, d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::inadmissible);
  }
  d.phi_o = 0.5;
  d.psi1 += 0.1;
  EXPECT_THROW(check_constraints(b, d), Error);
  d.psi1 = solve_drift(sc, 1.0);
  EXPECT_NO_THROW(check_constraints(b, d));
  d.phi_o = 50.0;  // above psi2 (1 + beta T1) on every path with T1 <= H
  EXPECT_THROW(check_constraints(b, d), Error);
}

TEST(McTest, ConstantAndWarning) {
  std::vector<std::vector<double>> v(2, std::vector<double>(10, 3.0));
  auto s = mc_test({0.0, 1.0}, v, 3.0, Null::martingale);
  EXPECT_EQ(s.max_z, 0.0);
  EXPECT_FALSE(s.rejected);
  EXPECT_FALSE(s.warning.empty());
}

TEST(Run, SmallRunReportsWarningForTinySample) {
  Scenario sc;
  sc.n_paths = 10;
  sc.dt = 1.0 / 64.0;
  sc.validate();
  auto rep = run(simulate(sc, 1));
  EXPECT_FALSE(rep.warnings.empty());
}
