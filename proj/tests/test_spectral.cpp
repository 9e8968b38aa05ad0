#include <fraclab/spectral.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace fraclab;
using namespace fraclab::spectral;

namespace {

SubordinationParams params(double delta) {
  SubordinationParams p;
  p.delta = delta;
  return p;
}

Eigen::MatrixXd random_psd(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd B(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) B(i, j) = nd(rng);
  Eigen::MatrixXd A = B * B.transpose() / d;
  return 0.5 * (A + A.transpose());
}

Eigen::VectorXd random_vec(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd u(d);
  for (Eigen::Index i = 0; i < d; ++i) u[i] = nd(rng);
  return u;
}

// Closed form: the off-diagonal jump kernel of L^delta is -(L^delta)_{xy}.
Eigen::MatrixXd fractional_power(const OperatorSpectrum& s, double delta) {
  Eigen::VectorXd p = s.eigenvalues.unaryExpr([delta](double l) { return l > 0 ? std::pow(l, delta) : 0.0; });
  return s.eigenvectors * p.asDiagonal() * s.eigenvectors.transpose();
}

}  // namespace

TEST(Spectral, DecomposeExamples) {
  auto z = decompose(Eigen::MatrixXd::Zero(4, 4));
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_EQ(z.eigenvalues[i], 0.0);
  auto p = decompose(path_laplacian(2));
  EXPECT_NEAR(p.eigenvalues[0], 0.0, 1e-15);
  EXPECT_NEAR(p.eigenvalues[1], 2.0, 1e-15);
  auto g = decompose(graph_laplacian(build_graph(Kind::SG, 2)));
  EXPECT_NEAR(g.eigenvalues[0], 0.0, 1e-12);
  const Eigen::VectorXd v0 = g.eigenvectors.col(0);
  EXPECT_NEAR((v0.array() - v0[0]).abs().maxCoeff(), 0.0, 1e-12);
}

TEST(Spectral, DecomposeErrors) {
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 0, 1;
  EXPECT_THROW(decompose(a), NumericError);
  Eigen::MatrixXd n(2, 2);
  n << -1, 0, 0, 1;
  EXPECT_THROW(decompose(n), NumericError);
  EXPECT_THROW(decompose(Eigen::MatrixXd::Zero(2501, 2501)), CapError);
}

TEST(Spectral, MeasureAndParseval) {
  auto s = decompose(path_laplacian(2));
  Eigen::VectorXd u(2);
  u << 1 / std::sqrt(2.0), -1 / std::sqrt(2.0);
  auto mu = spectral_measure(s, u);
  EXPECT_NEAR(mu.mass[0], 0.0, 1e-15);
  EXPECT_NEAR(mu.mass[1], 1.0, 1e-15);
  EXPECT_EQ(mu.lambda[1], s.eigenvalues[1]);

  auto sg = decompose(graph_laplacian(build_graph(Kind::SG, 3)));
  auto c = spectral_measure(sg, Eigen::VectorXd::Constant(sg.dimension(), 2.0));
  EXPECT_NEAR(c.mass[0], 4.0 * sg.dimension(), 1e-10);
  for (std::size_t i = 1; i < c.size(); ++i) EXPECT_NEAR(c.mass[i], 0.0, 1e-10);
  auto e = spectral_measure(sg, sg.eigenvectors.col(7));
  for (std::size_t i = 0; i < e.size(); ++i) EXPECT_NEAR(e.mass[i], i == 7 ? 1.0 : 0.0, 1e-12);

  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    auto v = random_vec(sg.dimension(), rng);
    EXPECT_NEAR(spectral_measure(sg, v).total_mass(), v.squaredNorm(), 1e-10 * v.squaredNorm());
  }
}

TEST(Spectral, EnergyT) {
  auto zero = SpectralMeasure::from_pairs({{0.0, 3.0}});
  EXPECT_EQ(energy_t(zero, 1.0), 0.0);
  auto one = SpectralMeasure::from_pairs({{2.0, 1.0}});
  EXPECT_NEAR(energy_t(one, 1.0), 1 - std::exp(-2.0), 1e-15);

  std::mt19937_64 rng(4);
  auto s = decompose(random_psd(30, rng));
  auto mu = spectral_measure(s, random_vec(30, rng));
  EXPECT_NEAR(energy_t(mu, 1e-6), dirichlet_energy(mu), 1e-4 * dirichlet_energy(mu));
  double prev = energy_t(mu, 1e-4);
  for (double t = 2e-4; t < 1e3; t *= 1.7) {
    const double cur = energy_t(mu, t);
    EXPECT_LE(cur, prev + 1e-12 * prev);
    prev = cur;
  }
  EXPECT_THROW(energy_t(mu, 0.0), ArgumentError);
}

TEST(Spectral, SubordinatedEnergy) {
  auto one = SpectralMeasure::from_pairs({{2.0, 1.0}});
  EXPECT_NEAR(subordinated_energy(one, params(0.5)), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(subordinated_energy_quadrature(one, params(0.5)), std::sqrt(2.0), 1e-8 * std::sqrt(2.0));
  auto unit = SpectralMeasure::from_pairs({{1.0, 1.0}});
  for (double d : {0.1, 0.5, 0.9}) EXPECT_DOUBLE_EQ(subordinated_energy(unit, params(d)), 1.0);
  EXPECT_EQ(subordinated_energy_quadrature(SpectralMeasure{}, params(0.5)), 0.0);

  auto bounded = SpectralMeasure::from_pairs({{0.5, 1.0}, {2.0, 0.5}, {3.0, 0.25}});
  EXPECT_NEAR(subordinated_energy(bounded, params(0.999)), dirichlet_energy(bounded), 0.01 * dirichlet_energy(bounded));
  EXPECT_THROW(subordinated_energy(bounded, params(1.0)), ArgumentError);
  EXPECT_THROW(subordinated_energy(bounded, params(0.0)), ArgumentError);
}

TEST(Spectral, QuadratureMatchesSpectralSum) {
  std::mt19937_64 rng(50);
  std::uniform_real_distribution<double> lam(0.0, 20.0), mass(0.0, 1.0);
  for (double d : {0.1, 0.5, 0.9}) {
    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < 50; ++i) pairs.emplace_back(lam(rng), mass(rng));
    auto mu = SpectralMeasure::from_pairs(pairs);
    const double a = subordinated_energy(mu, params(d));
    const double b = subordinated_energy_quadrature(mu, params(d));
    EXPECT_NEAR(b, a, 1e-6 * a) << d;
  }
}

TEST(Spectral, HeatKernel) {
  auto p = decompose(path_laplacian(2));
  auto H = heat_kernel_matrix(p, 1.0);
  EXPECT_NEAR(H(0, 1), (1 - std::exp(-2.0)) / 2, 1e-15);
  auto g = decompose(graph_laplacian(build_graph(Kind::SG, 3)));
  auto Ht = heat_kernel_matrix(g, 0.3);
  EXPECT_LE((Ht.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
  EXPECT_LE((Ht - Ht.transpose()).cwiseAbs().maxCoeff(), 1e-14);
  auto H0 = heat_kernel_matrix(g, 1e-10 / g.lambda_max());
  EXPECT_LE((H0 - Eigen::MatrixXd::Identity(g.dimension(), g.dimension())).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Spectral, JumpKernelTwoVertexPath) {
  auto p = decompose(path_laplacian(2));
  for (double d : {0.25, 0.5, 0.75}) {
    auto jk = jump_kernel(p, params(d));
    EXPECT_NEAR(jk.J(0, 1), std::pow(2.0, d - 1), 1e-9);
    Eigen::VectorXd u(2);
    u << 1, -1;
    EXPECT_NEAR(reconstruct_energy(jk, u), std::pow(2.0, d) * 2.0, 1e-8);
    EXPECT_LE(jk.killing.cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Spectral, JumpKernelMatchesClosedForm) {
  auto g = decompose(graph_laplacian(build_graph(Kind::SC, 1)));
  for (double d : {0.3, 0.7}) {
    auto jk = jump_kernel(g, params(d));
    const Eigen::MatrixXd Ld = fractional_power(g, d);
    double worst = 0.0, scale = 0.0;
    for (Eigen::Index i = 0; i < g.dimension(); ++i)
      for (Eigen::Index j = 0; j < g.dimension(); ++j) {
        if (i == j) continue;
        EXPECT_GE(jk.J(i, j), -1e-12);
        worst = std::max(worst, std::abs(jk.J(i, j) + Ld(i, j)));
        scale = std::max(scale, std::abs(Ld(i, j)));
      }
    EXPECT_LE(worst, 1e-8 * scale);
    EXPECT_LE(jk.killing.cwiseAbs().maxCoeff(), 1e-10);

    std::mt19937_64 rng(17);
    for (int t = 0; t < 20; ++t) {
      auto u = random_vec(g.dimension(), rng);
      const double ref = subordinated_energy(spectral_measure(g, u), params(d));
      EXPECT_NEAR(reconstruct_energy(jk, u), ref, 1e-6 * ref);
    }
  }
}

TEST(Spectral, DyadicCounterexample) {
  auto empty = dyadic_counterexample({});
  EXPECT_EQ(empty.size(), 0u);
  EXPECT_EQ(dirichlet_energy(empty), 0.0);
  EXPECT_EQ(subordinated_energy(empty, params(0.5)), 0.0);

  for (int K : {5, 10, 30}) {
    auto mu = dyadic_counterexample(standard_blocks(K));
    EXPECT_NEAR(dirichlet_energy(mu), 0.75 * K, 1e-12 * K);
    EXPECT_GE(dirichlet_energy(mu), K / 2.0);
    EXPECT_LE(mu.total_mass(), 1.0);
    for (double d : {0.25, 0.5, 0.75}) {
      EXPECT_LE(subordinated_energy(mu, params(d)), dyadic_subordinated_bound(K, d) + 1e-12);
      EXPECT_LT(dyadic_subordinated_bound(K, d), 1.0 / (std::pow(2.0, 1 - d) - 1));
    }
  }
  EXPECT_THROW(dyadic_counterexample({{2, 4.0}}), ArgumentError);
  EXPECT_THROW(dyadic_counterexample({{2, 6.0}, {2, 7.0}}), ArgumentError);
  EXPECT_NO_THROW(dyadic_counterexample({{2, 8.0}}));
}

TEST(Spectral, TailMonotonicity) {
  auto low = SpectralMeasure::from_pairs({{0.5, 1.0}, {1.0, 2.0}});
  auto [a, b] = tail_monotonicity_check(low, 0.2, 0.4);
  EXPECT_EQ(a, 0.0);
  EXPECT_EQ(b, 0.0);
  auto four = SpectralMeasure::from_pairs({{4.0, 1.0}});
  auto [t1, t2] = tail_monotonicity_check(four, 0.25, 0.75);
  EXPECT_NEAR(t1, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(t2, 2 * std::sqrt(2.0), 1e-15);
  auto mu = dyadic_counterexample(standard_blocks(20));
  for (double d1 : {0.1, 0.3, 0.5})
    for (double d2 : {0.6, 0.8}) {
      auto [x, y] = tail_monotonicity_check(mu, d1, d2);
      EXPECT_LE(x, y);
    }
  EXPECT_THROW(tail_monotonicity_check(mu, 0.5, 0.5), ArgumentError);
}

TEST(Spectral, Domination) {
  auto g = decompose(graph_laplacian(build_graph(Kind::SG, 3)));
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(g.dimension(), 1.5);
  auto [l0, r0] = domination_check(g, c);
  EXPECT_NEAR(l0, c.squaredNorm(), 1e-9);
  EXPECT_NEAR(r0, 2 * c.squaredNorm(), 1e-9);
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    auto [l, r] = domination_check(g, random_vec(g.dimension(), rng));
    EXPECT_LE(l, r);
  }
  const Eigen::VectorXd top = g.eigenvectors.col(g.dimension() - 1);
  auto [lt, rt] = domination_check(g, top, 0.5);
  EXPECT_NEAR(lt, std::sqrt(g.lambda_max()) + 1, 1e-10);
  EXPECT_NEAR(rt, 2 * (g.lambda_max() + 1), 1e-10);
}
