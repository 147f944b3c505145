#include <gtest/gtest.h>

#include <random>

#include "rhd/prob.hpp"
#include "support/fixtures.hpp"
#include "support/trees.hpp"

using namespace rhd;

TEST(Partition, NormalizesLabelsAndRefines) {
  std::vector<int> a{7, 7, 3, 3}, b{5, 1, 2, 9};
  Partition p(a), q(b);
  EXPECT_EQ(p.labels(), (std::vector<std::size_t>{0, 0, 1, 1}));
  EXPECT_EQ(p.block_count(), 2u);
  EXPECT_TRUE(q.refines(p));
  EXPECT_FALSE(p.refines(q));
  EXPECT_EQ(p.meet(Partition::discrete(4)), Partition::discrete(4));
  EXPECT_TRUE(p.refines(Partition::trivial(4)));
}

TEST(Filtration, RejectsNonRefiningChain) {
  std::vector<int> a{0, 0, 1, 1}, b{0, 1, 0, 1};
  EXPECT_THROW(Filtration({Partition(a), Partition(b)}), Error);
  try {
    Filtration({Partition(a), Partition(b)});
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::input);
  }
}

TEST(Measure, RejectsBadWeights) {
  EXPECT_THROW(Measure({0.5, 0.4}), Error);
  EXPECT_THROW(Measure({1.5, -0.5}), Error);
  EXPECT_NO_THROW(Measure({0.5, 0.5}));
}

TEST(CondExpect, BlockMeansAndZeroMass) {
  std::vector<int> l{0, 0, 1, 1};
  Partition p(l);
  Measure m({0.25, 0.25, 0.5, 0.0});
  std::vector<double> x{1, 3, 5, 7};
  auto e = cond_expect(x, p, m);
  EXPECT_DOUBLE_EQ(e[0], 2.0);
  EXPECT_DOUBLE_EQ(e[3], 5.0);
  Measure z({0.5, 0.5, 0.0, 0.0});
  EXPECT_THROW(cond_expect(x, p, z), Error);
  EXPECT_EQ(cond_expect(x, p, z, Degenerate::zero)[2], 0.0);
}

TEST(Integrals, PredictabilityIsChecked) {
  auto s = support::tiny2_space();
  Process phi(4, 2, 1.0);
  phi(0, 1) = 2.0;  // not F_0-measurable at time 1
  Process x(4, 2);
  EXPECT_THROW(stochastic_integral(phi, x, s.F()), Error);
  phi(0, 1) = 1.0;
  EXPECT_NO_THROW(stochastic_integral(phi, x, s.F()));
}

TEST(Exponential, DiscreteProduct) {
  Process x(1, 3);
  x(0, 1) = 0.5;
  x(0, 2) = 0.25;
  x(0, 3) = 1.25;
  Process e = stochastic_exponential(x);
  EXPECT_DOUBLE_EQ(e(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(e(0, 1), 1.5);
  EXPECT_DOUBLE_EQ(e(0, 2), 1.5 * 0.75);
  EXPECT_DOUBLE_EQ(e(0, 3), 1.5 * 0.75 * 2.0);
}

TEST(Doob, DecompositionOfRandomAdaptedProcesses) {
  std::mt19937_64 g(11);
  for (int i = 0; i < 20; ++i) {
    auto t = support::random_tree(g, {});
    Process x = support::random_adapted(g, t, -1.0, 1.0);
    Doob d = doob_decomposition(x, t.space.F(), t.space.P());
    EXPECT_LE((d.martingale + d.drift).max_abs_diff(x), 1e-12);
    EXPECT_TRUE(is_predictable(d.drift, t.space.F(), 1e-12));
    EXPECT_EQ(classify(d.martingale, t.space.F(), t.space.P(), 1e-10).verdict, Verdict::martingale);
    for (std::size_t a = 0; a < t.N(); ++a) EXPECT_EQ(d.drift(a, 0), 0.0);
  }
}

TEST(Classify, Verdicts) {
  std::mt19937_64 g(5);
  auto t = support::random_tree(g, {});
  Process M = support::random_martingale(g, t);
  EXPECT_EQ(classify(M, t.space.F(), t.space.P(), 1e-10).verdict, Verdict::martingale);
  Process V = support::random_V(g, t);
  if (V.max_abs_diff(Process(t.N(), t.T())) > 1e-3) {
    EXPECT_EQ(classify(M - V, t.space.F(), t.space.P(), 1e-10).verdict, Verdict::supermartingale);
    EXPECT_EQ(classify(M + V, t.space.F(), t.space.P(), 1e-10).verdict, Verdict::submartingale);
  }
}

TEST(Projections, DualProjectionsCompensate) {
  std::mt19937_64 g(17);
  for (int i = 0; i < 10; ++i) {
    auto t = support::random_tree(g, {});
    Process A = support::random_V(g, t, 1.0);
    for (std::size_t n = 1; n <= t.T(); ++n)
      for (std::size_t a = 0; a < t.N(); ++a) A(a, n) += support::uniform(g, 0.0, 0.1) * static_cast<double>(n);
    Process Ap = dual_projection(A, t.space.F(), t.space.P(), Projection::predictable);
    EXPECT_TRUE(is_predictable(Ap, t.space.F(), 1e-12));
    // A is not adapted in general; its optional projection minus the predictable compensator is a martingale.
    Process Ao = dual_projection(A, t.space.F(), t.space.P(), Projection::optional);
    EXPECT_EQ(classify(Ao - Ap, t.space.F(), t.space.P(), 1e-10).verdict, Verdict::martingale);
  }
}

TEST(ChangeMeasure, DensityNormalization) {
  Measure p({0.25, 0.75});
  std::vector<double> d{2.0, 2.0 / 3.0};
  Measure q = change_measure(p, d);
  EXPECT_DOUBLE_EQ(q[0], 0.5);
  std::vector<double> bad{1.0, 1.0, 1.0};
  EXPECT_THROW(change_measure(p, bad), Error);
}
