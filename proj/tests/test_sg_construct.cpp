#include <fraclab/sg_construct.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

#include <random>

using namespace fraclab;
using namespace fraclab::sg;

TEST(SgConstruct, PhiLandmarks) {
  EXPECT_EQ(phi(Rational(2, 5)), Rational(3, 5));
  EXPECT_EQ(phi(Rational(1, 2)), Rational(3, 4));
  EXPECT_EQ(phi(Rational(0)), Rational(3));
  EXPECT_EQ(phi(Rational(1, 5)), Rational(6, 5));
  EXPECT_EQ(phi(Rational(3, 10)), Rational(3, 4));
}

TEST(SgConstruct, SolveAlphaAgainstBisection) {
  EXPECT_NEAR(solve_alpha(1).alpha, 0.2, 1e-16);
  EXPECT_NEAR(solve_alpha(4).alpha, 0.3, 1e-16);
  double prev = 0.0;
  for (int n = 1; n <= 200; ++n) {
    const double target = 0.6 * (n + 1) / n;
    const double a = solve_alpha(n).alpha;
    EXPECT_GT(a, 0.0);
    EXPECT_LT(a, 0.4);
    EXPECT_GT(a, prev);
    prev = a;
    EXPECT_LE(std::abs(phi(a) - target), 1e-14);
    const double b = oracle::bisect([&](double x) { return phi(x) - target; }, 0.0, 0.4);
    EXPECT_NEAR(a, b, 1e-12);
  }
  EXPECT_GT(solve_alpha(1000000).alpha, 0.3998);
  EXPECT_THROW(solve_alpha(0), ArgumentError);
}

TEST(SgConstruct, PhiMinimizer) {
  // Exact comparisons: double evaluation cannot resolve the minimizer below sqrt(eps).
  const double m = oracle::golden_min([](double a) { return phi(exact_rational(a)); }, 0.0, 0.5);
  EXPECT_NEAR(m, 0.4, 1e-10);
}

TEST(SgConstruct, ExtendCell) {
  auto m = extend_cell(2.0, 2.0, 2.0, 0.3);
  EXPECT_EQ(m.x, 2.0);
  EXPECT_EQ(m.y, 2.0);
  EXPECT_EQ(m.z, 2.0);
  auto e = extend_cell(Rational(1), Rational(0), Rational(0), Rational(2, 5));
  EXPECT_EQ(e.x, Rational(1, 5));
  EXPECT_EQ(e.y, Rational(2, 5));
  EXPECT_EQ(e.z, Rational(2, 5));
  EXPECT_EQ(child_energy(Rational(1), Rational(0), Rational(0), e), Rational(6, 5));
}

TEST(SgConstruct, EnergyRecursionProperty) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> val(-5, 5), al(0.001, 0.499);
  for (int t = 0; t < 1000; ++t) {
    const double a = val(rng), b = val(rng), c = val(rng), alpha = al(rng);
    const double parent = parent_energy(a, b, c);
    const double child = child_energy(a, b, c, extend_cell(a, b, c, alpha));
    EXPECT_NEAR(child / parent, phi(alpha), 1e-12 * phi(alpha));
  }
  // alpha = 2/5 minimizes the child energy.
  const double a = 0.7, b = -0.2, c = 0.1;
  const double best = child_energy(a, b, c, extend_cell(a, b, c, 0.4));
  for (double alpha = 0.01; alpha < 0.5; alpha += 0.01)
    EXPECT_GE(child_energy(a, b, c, extend_cell(a, b, c, alpha)), best - 1e-15);
}

TEST(SgConstruct, WitnessEnergies) {
  auto w = build_witness(10);
  auto a = w.weighted_energies();
  ASSERT_EQ(a.size(), 10u);
  for (int n = 1; n <= 10; ++n) EXPECT_LE(std::abs(a[n - 1] - n), 1e-8 * n) << n;
  for (int n = 1; n < 10; ++n) EXPECT_NEAR(a[n] / a[n - 1], (n + 1.0) / n, 1e-9);
  // Monotone in the level.
  for (int n = 1; n < 10; ++n) EXPECT_LE(a[n - 1], a[n]);
  ASSERT_EQ(w.alphas.size(), 9u);
}

TEST(SgConstruct, WitnessExtendsPreviousLevels) {
  auto w = build_witness(6);
  for (int n = 1; n < 6; ++n) {
    auto map = embed_vertices(w.graphs[n - 1], w.graphs[n]);
    for (std::size_t i = 0; i < map.size(); ++i) EXPECT_EQ(w.levels[n - 1].values[i], w.levels[n].values[map[i]]);
  }
}

TEST(SgConstruct, ThreadCountDoesNotChangeValues) {
  set_thread_count(1);
  auto w1 = build_witness(7);
  set_thread_count(4);
  auto w4 = build_witness(7);
  set_thread_count(0);
  EXPECT_EQ(w1.levels.back().values, w4.levels.back().values);
  EXPECT_EQ(w1.weighted_energies(), w4.weighted_energies());
}

TEST(SgConstruct, BesovSumsBelowCriticalConverge) {
  auto w = build_witness(10);
  auto a = w.weighted_energies();
  auto cfg = EnergyConfig::sg();
  const double beta = cfg.beta_star - 0.2;
  // Successive terms 2^{(beta-beta*)n} a_n have ratio < 1 eventually.
  for (int n = 7; n < 10; ++n) {
    const double r = std::pow(2.0, beta - cfg.beta_star) * a[n] / a[n - 1];
    EXPECT_LT(r, 1.0);
  }
}

TEST(SgConstruct, Oscillation) {
  auto w = build_witness(8);
  auto osc = oscillation_profile(w);
  for (std::size_t i = 1; i < osc.size(); ++i) EXPECT_LE(osc[i], osc[i - 1] + 1e-15);
  EXPECT_LT(osc.back(), osc.front());

  SgWitness flat = w;
  for (auto& l : flat.levels) std::fill(l.values.begin(), l.values.end(), 0.25);
  for (double v : oscillation_profile(flat)) EXPECT_EQ(v, 0.0);
}

TEST(SgConstruct, Caps) {
  EXPECT_THROW(build_witness(13), CapError);
  EXPECT_THROW(build_witness(0), ArgumentError);
}
