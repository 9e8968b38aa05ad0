#include <fraclab/energy.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

#include <random>

using namespace fraclab;

namespace {

VertexFunction<Rational> f_of_x(const PrefractalGraph& g) {
  std::vector<Rational> v;
  for (std::size_t i = 0; i < g.vertex_count(); ++i) v.push_back(oracle::f(g.vertex(i).xq()));
  return {g, std::move(v)};
}

VertexFunction<double> random_fn(const PrefractalGraph& g, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<double> v(g.vertex_count());
  for (auto& x : v) x = nd(rng);
  return {g, std::move(v)};
}

VertexFunction<double> to_double(const VertexFunction<Rational>& u, const PrefractalGraph& g) {
  std::vector<double> v;
  for (const auto& q : u.values) v.push_back(fraclab::to_double(q));
  return {g, std::move(v)};
}

}  // namespace

TEST(Energy, ConstantsHaveZeroEnergy) {
  auto g = build_graph(Kind::SG, 2);
  EXPECT_EQ(raw_energy(g, VertexFunction<double>::constant(g, 3.5)), 0.0);
  EXPECT_EQ(weighted_energy(g, VertexFunction<double>::constant(g, -1.0), EnergyConfig::sg()), 0.0);
}

TEST(Energy, GasketSeed) {
  auto g = build_graph(Kind::SG, 1);
  std::vector<Rational> v(g.vertex_count(), Rational(0));
  v[*g.find(base_point(Kind::SG, 0))] = 1;
  VertexFunction<Rational> ind(g, v);
  // (sqrt(30)/10)^2 = 3/10, two nonzero pairs.
  EXPECT_EQ(Rational(3, 10) * raw_energy(g, ind), Rational(3, 5));
  EXPECT_EQ(Rational(3, 10) * weighted_energy(g, ind, EnergyConfig::sg()), Rational(1));

  std::vector<double> d(g.vertex_count(), 0.0);
  d[*g.find(base_point(Kind::SG, 0))] = std::sqrt(30.0) / 10.0;
  EXPECT_NEAR(weighted_energy(g, VertexFunction<double>(g, d), EnergyConfig::sg()), 1.0, 1e-15);
}

TEST(Energy, CarpetSelfSimilarFunction) {
  Rational expect = 1;
  for (int n = 1; n <= 3; ++n) {
    expect *= Rational(6, 7);
    auto g = build_graph(Kind::SC, n);
    auto u = f_of_x(g);
    EXPECT_EQ(raw_energy(g, u), expect) << "level " << n;
  }
  auto g2 = build_graph(Kind::SC, 2);
  const double rho = 1.25148;
  EXPECT_NEAR(weighted_energy(g2, to_double(f_of_x(g2), g2), EnergyConfig::sc(rho)),
              rho * rho * 36.0 / 49.0, 1e-14);
}

TEST(Energy, ConfigInvariants) {
  auto sg = EnergyConfig::sg();
  EXPECT_DOUBLE_EQ(sg.beta_star, std::log(5.0) / std::log(2.0));
  EXPECT_EQ(sg.weight_exact(), Rational(5, 3));
  auto sc = EnergyConfig::sc();
  EXPECT_DOUBLE_EQ(sc.rho, 1.25148);
  EXPECT_DOUBLE_EQ(sc.beta_star, std::log(8.0 * 1.25148) / std::log(3.0));
  EXPECT_THROW(EnergyConfig::sc(1.1), ArgumentError);
  EXPECT_THROW(EnergyConfig::sc(1.6), ArgumentError);
  EXPECT_NO_THROW(EnergyConfig::sc(7.0 / 6.0));
  EXPECT_EQ(sc.default_betas().size(), 5u);
}

TEST(Energy, Scaling) {
  std::mt19937_64 rng(11);
  auto g = build_graph(Kind::SC, 2);
  for (int t = 0; t < 20; ++t) {
    auto u = random_fn(g, rng);
    const double c = std::uniform_real_distribution<double>(-3, 3)(rng);
    auto cu = u;
    for (auto& x : cu.values) x *= c;
    EXPECT_NEAR(raw_energy(g, cu), c * c * raw_energy(g, u), 1e-12 * c * c * raw_energy(g, u));
  }
}

TEST(Energy, RestrictedEnergyRegions) {
  std::mt19937_64 rng(5);
  auto g = build_graph(Kind::SC, 3);
  auto u = random_fn(g, rng);
  const double full = raw_energy(g, u);
  EXPECT_NEAR(restricted_energy(g, u, CellRegion::all(2, 8)), full, 1e-12 * full);
  EXPECT_EQ(restricted_energy(g, u, std::vector<Word>{}), 0.0);
  EXPECT_THROW(restricted_energy(g, u, CellRegion::all(4, 8)), ArgumentError);

  // Additivity over the partition W_1.
  double sum = 0.0;
  for (int i = 0; i < 8; ++i) sum += restricted_energy(g, u, std::vector<Word>{Word({i})});
  EXPECT_NEAR(sum, full, 1e-12 * full);

  // Exact additivity in rational mode.
  auto g1 = build_graph(Kind::SC, 2);
  auto f = f_of_x(g1);
  Rational part = 0;
  for (int i = 0; i < 64; ++i) part += restricted_energy(g1, f, std::vector<Word>{Word::from_index(i, 2, 8)});
  EXPECT_EQ(part, raw_energy(g1, f));

  // Complement of 0^1 equals the sum over the other seven cells.
  double rest = 0.0;
  for (int i = 1; i < 8; ++i) rest += restricted_energy(g, u, std::vector<Word>{Word({i})});
  EXPECT_NEAR(restricted_energy(g, u, complement_of_zero_cell(1, 3, 8)), rest, 1e-12 * full);
  // Seen from a coarser level, 0^5 still lies inside cell 0^3.
  EXPECT_NEAR(restricted_energy(g, u, complement_of_zero_cell(5, 3, 8)),
              full - restricted_energy(g, u, std::vector<Word>{Word::repeat(0, 3)}), 1e-12 * full);
}

TEST(Energy, BesovPartialSums) {
  auto sg = EnergyConfig::sg();
  std::vector<double> zeros(10, 0.0);
  auto betas = sg.default_betas();
  for (auto& row : besov_partial_sums(zeros, sg, betas))
    for (double v : row) EXPECT_EQ(v, 0.0);

  // a_n = n: below beta* the sums converge to the closed form, at beta* they are N(N+1)/2.
  const int N = 200;
  std::vector<double> a(N);
  for (int n = 1; n <= N; ++n) a[n - 1] = n;
  const std::vector<double> bs{sg.beta_star - 0.5, sg.beta_star};
  auto sums = besov_partial_sums(a, sg, bs);
  const double q = std::pow(2.0, -0.5);
  EXPECT_NEAR(sums[0].back(), q / ((1 - q) * (1 - q)), 1e-10);
  EXPECT_DOUBLE_EQ(sums[1].back(), N * (N + 1) / 2.0);
  for (std::size_t i = 1; i < sums[0].size(); ++i) EXPECT_GE(sums[0][i], sums[0][i - 1]);

  // a_n = (6/7)^n rho^n diverges at beta* for rho > 7/6.
  auto sc = EnergyConfig::sc();
  std::vector<double> b(N);
  for (int n = 1; n <= N; ++n) b[n - 1] = std::pow(6.0 / 7.0 * sc.rho, n);
  auto s2 = besov_partial_sums(b, sc, std::vector<double>{sc.beta_star});
  EXPECT_GT(s2[0].back(), 1e6);

  // Linearity.
  std::vector<double> mix(N);
  for (int i = 0; i < N; ++i) mix[i] = 2.0 * a[i] + 3.0 * b[i];
  auto sa = besov_partial_sums(a, sc, sc.default_betas());
  auto sb = besov_partial_sums(b, sc, sc.default_betas());
  auto sm = besov_partial_sums(mix, sc, sc.default_betas());
  for (std::size_t k = 0; k < sm.size(); ++k)
    EXPECT_NEAR(sm[k].back(), 2 * sa[k].back() + 3 * sb[k].back(), 1e-12 * sm[k].back());
  EXPECT_THROW(besov_partial_sums(std::vector<double>{}, sc, betas), ArgumentError);
}

TEST(Energy, MinkowskiProductBound) {
  auto g = build_graph(Kind::SG, 3);
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 1000; ++t) {
    auto u = random_fn(g, rng), v = random_fn(g, rng);
    auto [lhs, rhs] = minkowski_product_bound_check(g, u, v);
    EXPECT_LE(lhs, rhs + 1e-12);
  }
  auto u = random_fn(g, rng);
  auto one = VertexFunction<double>::constant(g, 1.0);
  auto [lhs, rhs] = minkowski_product_bound_check(g, u, one);
  EXPECT_NEAR(lhs, rhs, 1e-12 * rhs);

  auto c = build_graph(Kind::SC, 2);
  auto f = to_double(f_of_x(c), c);
  auto [l2, r2] = minkowski_product_bound_check(c, f, f);
  EXPECT_LE(l2, 2.0 * 1.0 * std::sqrt(36.0 / 49.0) + 1e-12);
  EXPECT_LE(l2, r2 + 1e-12);
}

TEST(Energy, RestrictionToCoarseLevel) {
  auto fine = build_graph(Kind::SC, 2), coarse = build_graph(Kind::SC, 1);
  auto f = f_of_x(fine);
  auto r = restrict_to(fine, f, coarse);
  for (std::size_t i = 0; i < coarse.vertex_count(); ++i) EXPECT_EQ(r.values[i], oracle::f(coarse.vertex(i).xq()));
}

TEST(Energy, ReportWeights) {
  auto cfg = EnergyConfig::sc();
  auto rep = make_report({1, 2, 3}, {0.5, 0.25, 0.125}, cfg, cfg.default_betas());
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(rep.weighted[i], std::pow(cfg.rho, i + 1) * rep.raw[i]);
  EXPECT_EQ(rep.partial.size(), 5u);
}
