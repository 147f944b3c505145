#include <gtest/gtest.h>

#include <random>

#include "rhd/deflators.hpp"
#include "rhd/market.hpp"
#include "support/fixtures.hpp"
#include "support/trees.hpp"

using namespace rhd;

namespace {

// Largest E[Z_k (1 + theta.dS_k) | block] over a grid of admissible theta in [-R, R]^d.
double grid_sup(const Process& Z, const VectorProcess& S, const Filtration& f, const Measure& m, std::size_t k,
                std::size_t atom, double R, int steps) {
  const auto& mem = f.at(k - 1).members(f.at(k - 1).block_of(atom));
  const std::size_t d = S.size();
  double best = -1e300;
  std::vector<double> th(d);
  std::vector<int> idx(d, 0);
  while (true) {
    for (std::size_t i = 0; i < d; ++i) th[i] = -R + 2.0 * R * idx[i] / steps;
    bool ok = true;
    double num = 0.0, den = 0.0;
    for (std::size_t a : mem) {
      if (m[a] == 0.0) continue;
      double w = 1.0;
      for (std::size_t i = 0; i < d; ++i) w += th[i] * S[i].delta(a, k);
      if (!(w > 0.0)) ok = false;
      num += m[a] * Z(a, k) * w;
      den += m[a];
    }
    if (ok) best = std::max(best, num / den);
    std::size_t i = 0;
    while (i < d && ++idx[i] > steps) idx[i++] = 0;
    if (i == d) break;
  }
  return best;
}

}  // namespace

TEST(Wealth, InadmissibleStrategyNamesTheNode) {
  auto s = support::tiny2_space();
  Process S(4, 2, 1.0);
  S(2, 1) = S(3, 1) = 0.5;
  S(2, 2) = S(3, 2) = 0.5;
  S(0, 1) = S(1, 1) = 1.5;
  S(0, 2) = S(1, 2) = 1.5;
  Process phi(4, 2, 3.0);
  try {
    wealth({phi}, {S}, s.F());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::inadmissible);
    EXPECT_NE(std::string(e.what()).find("time 1"), std::string::npos);
  }
  Process ok(4, 2, 1.0);
  Process w = wealth({ok}, {S}, s.F());
  EXPECT_DOUBLE_EQ(w(0, 1), 1.5);
}

TEST(Lmd, RiskNeutralDensityPasses) {
  std::mt19937_64 g(1);
  for (int i = 0; i < 20; ++i) {
    auto t = support::random_tree(g, {.max_T = 5, .max_atoms = 48, .survival_positive = false, .assets = 2});
    auto r = verify_lmd(t.ZQ, t.S, t.space.F(), t.space.P());
    EXPECT_TRUE(r.ok) << r.price_residual;
    auto d = verify_deflator(t.ZQ, t.S, t.space.F(), t.space.P());
    EXPECT_TRUE(d.ok) << d.worst.excess;
  }
}

TEST(Deflator, SupermartingaleDeflatorPassesLpButNotLmd) {
  std::mt19937_64 g(2);
  for (int i = 0; i < 20; ++i) {
    auto t = support::random_tree(g, {.max_T = 5, .max_atoms = 48, .survival_positive = false, .assets = 1});
    Process V = support::random_V(g, t, 0.3);
    Process Z = t.ZQ.times(support::exp_minus(V));
    EXPECT_TRUE(verify_deflator(Z, t.S, t.space.F(), t.space.P()).ok);
    if (V.max_abs_diff(Process(t.N(), t.T())) > 1e-3) EXPECT_FALSE(verify_lmd(Z, t.S, t.space.F(), t.space.P()).ok);
  }
}

TEST(Deflator, TiltedDensityFailsTheLp) {
  // Z = 1 on a binomial step with a drifting asset: E[Z dS] > 0.
  std::vector<int> p0{0, 0}, p1{0, 1};
  FiniteFilteredSpace s({"u", "d"}, {0.5, 0.5}, Filtration({Partition(p0), Partition(p1)}));
  Process S(2, 1, 1.0);
  S(0, 1) = 1.3;
  S(1, 1) = 0.9;
  Process Z(2, 1, 1.0);
  auto r = verify_deflator(Z, {S}, s.F(), s.P());
  EXPECT_FALSE(r.ok);
  EXPECT_FALSE(r.worst.unbounded);
  // sup at theta = 1/0.1 = 10: 1 + 10 * E[dS] = 2
  EXPECT_NEAR(r.worst.sup, 2.0, 1e-12);
}

TEST(Deflator, UnboundedWhenAllIncrementsPositive) {
  std::vector<int> p0{0, 0}, p1{0, 1};
  FiniteFilteredSpace s({"u", "d"}, {0.5, 0.5}, Filtration({Partition(p0), Partition(p1)}));
  Process S(2, 1, 1.0);
  S(0, 1) = 1.3;
  S(1, 1) = 1.1;
  auto r = verify_deflator(Process(2, 1, 1.0), {S}, s.F(), s.P());
  EXPECT_FALSE(r.ok);
  EXPECT_TRUE(r.worst.unbounded);
}

TEST(Deflator, NodeLpAgreesWithGridSearch) {
  std::mt19937_64 g(3);
  for (std::size_t d : {1u, 2u}) {
    for (int i = 0; i < 10; ++i) {
      auto t = support::random_tree(g, {.max_T = 3, .max_atoms = 24, .survival_positive = false, .assets = d});
      // Perturb the density so the LP is nontrivial.
      Process Z = t.ZQ;
      for (std::size_t n = 1; n <= t.T(); ++n)
        for (std::size_t a = 0; a < t.N(); ++a) Z(a, n) *= 1.0 + 0.05 * std::sin(static_cast<double>(t.space.F().at(n).block_of(a) + 7 * n));
      auto rep = verify_deflator(Z, t.S, t.space.F(), t.space.P());
      for (const auto& node : rep.nodes) {
        if (node.unbounded) continue;
        bool inside = true;
        for (double th : node.theta) inside = inside && std::abs(th) < 39.0;
        double gs = grid_sup(Z, t.S, t.space.F(), t.space.P(), node.time, node.atom, 40.0, d == 1 ? 4000 : 400);
        EXPECT_LE(gs, node.sup + 1e-9);
        if (inside) EXPECT_GE(gs, node.sup - (d == 1 ? 1e-2 : 2e-1) * std::max(1.0, std::abs(node.sup)));
      }
    }
  }
}

TEST(Deflator, FourAssetsUnsupported) {
  std::mt19937_64 g(4);
  auto t = support::random_tree(g, {.max_T = 2, .max_atoms = 32, .survival_positive = false, .assets = 4});
  try {
    verify_deflator(t.ZQ, t.S, t.space.F(), t.space.P());
    // Trees whose nodes have too few children reduce below dimension 4.
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unsupported);
  }
}

TEST(Lift, AgreesOnStochasticInterval) {
  std::mt19937_64 g(5);
  for (int i = 0; i < 20; ++i) {
    auto t = support::random_tree(g, {});
    auto rts = build_survival(t.space, t.tau);
    Process phi(t.N(), t.T());
    for (std::size_t n = 0; n <= t.T(); ++n) {
      const auto& p = rts.Gf.predictable_at(n);
      for (std::size_t a = 0; a < t.N(); ++a) phi(a, n) = static_cast<double>(p.block_of(a)) * 0.1 + static_cast<double>(n);
    }
    Process lifted = lift_strategy(phi, rts);
    EXPECT_TRUE(is_predictable(lifted, t.space.F()));
    for (std::size_t n = 1; n <= t.T(); ++n)
      for (std::size_t a = 0; a < t.N(); ++a)
        if (rts.alive(a, n)) EXPECT_EQ(lifted(a, n), phi(a, n));
  }
}

TEST(GDeflators, ForwardConstructionIsLocalMartingaleDeflatorForStoppedPrice) {
  std::mt19937_64 g(6);
  for (int i = 0; i < 20; ++i) {
    auto t = support::random_tree(g, {.max_T = 5, .max_atoms = 48, .survival_positive = true, .assets = 1});
    auto rts = build_survival(t.space, t.tau);
    Deflator d = build_multiplicative(t.ZQ, support::random_phi_o(g, t, rts), {}, rts);
    auto r = verify_lmd(d.Z, stopped(t.S, t.tau), rts.Gf, rts.P());
    EXPECT_TRUE(r.ok) << r.martingale_residual << " " << r.price_residual;
  }
}
