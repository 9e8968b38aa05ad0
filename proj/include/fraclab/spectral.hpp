#pragma once

// Finite spectral families: eigen-decomposition of symmetric PSD operators,
// spectral measures of vectors, the subordinated energy sum lambda^delta and
// its Gamma-quadrature form, heat kernels, the jump kernel of the
// subordinated form and the dyadic block construction.

#include <fraclab/error.hpp>
#include <fraclab/prefractal.hpp>
#include <fraclab/quadrature.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

namespace fraclab::spectral {

inline constexpr Eigen::Index kDimensionCap = 2500;

struct SpectralMeasure {
  std::vector<double> lambda;
  std::vector<double> mass;

  /// Sorted by lambda; all entries must be nonnegative.
  static SpectralMeasure from_pairs(std::vector<std::pair<double, double>> pairs) {
    std::sort(pairs.begin(), pairs.end());
    SpectralMeasure mu;
    for (auto [l, m] : pairs) {
      if (!(l >= 0.0) || !(m >= 0.0) || !std::isfinite(l) || !std::isfinite(m))
        throw ArgumentError("spectral measure entries must be finite and nonnegative");
      mu.lambda.push_back(l);
      mu.mass.push_back(m);
    }
    return mu;
  }

  std::size_t size() const { return lambda.size(); }
  double total_mass() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }
};

struct OperatorSpectrum {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns
  Eigen::Index dimension() const { return matrix.rows(); }
  double lambda_max() const { return eigenvalues.size() ? eigenvalues.maxCoeff() : 0.0; }
};

struct SubordinationParams {
  double delta = 0.5;
  /// Split point x = log s of the log-substituted integral; NaN picks
  /// -log(median positive eigenvalue).
  double split = std::numeric_limits<double>::quiet_NaN();
  quad::Options quadrature{1e-10, 0.0, 4000};

  void validate() const {
    if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("delta must lie in (0, 1)");
  }
};

inline OperatorSpectrum decompose(const Eigen::MatrixXd& L) {
  if (L.rows() != L.cols()) throw ArgumentError("operator must be square");
  if (L.rows() > kDimensionCap)
    throw CapError("dimension " + std::to_string(L.rows()) + " exceeds the dense cap of " +
                       std::to_string(kDimensionCap),
                   static_cast<int>(kDimensionCap));
  const double scale = std::max(1.0, L.size() ? L.cwiseAbs().maxCoeff() : 0.0);
  if (L.size() && (L - L.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw NumericError("operator is not symmetric");
  OperatorSpectrum s;
  s.matrix = L;
  if (L.rows() == 0) return s;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  if (es.info() != Eigen::Success) throw NumericError("eigensolver failed");
  s.eigenvalues = es.eigenvalues();
  s.eigenvectors = es.eigenvectors();
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) {
    if (s.eigenvalues[i] < -1e-10 * scale)
      throw NumericError("operator has a negative eigenvalue " + std::to_string(s.eigenvalues[i]));
    // Round-off zeros (either sign) become exact zeros; a tiny positive
    // eigenvalue would otherwise switch on exp(-s lambda) decay at huge s.
    if (s.eigenvalues[i] < 1e-12 * scale) s.eigenvalues[i] = 0.0;
  }
  const Eigen::MatrixXd rec = s.eigenvectors * s.eigenvalues.asDiagonal() * s.eigenvectors.transpose();
  if ((rec - L).cwiseAbs().maxCoeff() > 1e-9 * scale) throw NumericError("eigen reconstruction error too large");
  return s;
}

/// Dense Laplacian of a pre-fractal graph, one unit per cell edge.
inline Eigen::MatrixXd graph_laplacian(const PrefractalGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.vertex_count());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : g.edges) {
    const auto a = static_cast<Eigen::Index>(e.a), b = static_cast<Eigen::Index>(e.b);
    L(a, a) += 1.0;
    L(b, b) += 1.0;
    L(a, b) -= 1.0;
    L(b, a) -= 1.0;
  }
  return L;
}

inline Eigen::MatrixXd path_laplacian(Eigen::Index n) {
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    L(i, i) += 1;
    L(i + 1, i + 1) += 1;
    L(i, i + 1) -= 1;
    L(i + 1, i) -= 1;
  }
  return L;
}

/// mass_i = <u, phi_i>^2.
inline SpectralMeasure spectral_measure(const OperatorSpectrum& spec, const Eigen::VectorXd& u) {
  if (u.size() != spec.dimension()) throw ArgumentError("vector dimension does not match the operator");
  const Eigen::VectorXd c = spec.eigenvectors.transpose() * u;
  SpectralMeasure mu;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    mu.lambda.push_back(spec.eigenvalues[i]);
    mu.mass.push_back(c[i] * c[i]);
  }
  return mu;
}

/// sum lambda_i m_i.
inline double dirichlet_energy(const SpectralMeasure& mu) {
  double e = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) e += mu.lambda[i] * mu.mass[i];
  return e;
}

/// (1/t) sum (1 - exp(-t lambda_i)) m_i.
inline double energy_t(const SpectralMeasure& mu, double t) {
  if (!(t > 0.0)) throw ArgumentError("t must be positive");
  double e = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) e += -std::expm1(-t * mu.lambda[i]) * mu.mass[i];
  return e / t;
}

/// sum lambda_i^delta m_i with 0^delta = 0.
inline double subordinated_energy(const SpectralMeasure& mu, const SubordinationParams& p) {
  p.validate();
  double e = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu.lambda[i] > 0.0) e += std::pow(mu.lambda[i], p.delta) * mu.mass[i];
  return e;
}

namespace detail {

inline double gamma_prefactor(double delta) { return delta / std::tgamma(1.0 - delta); }

inline double default_split(std::vector<double> positive) {
  if (positive.empty()) return 0.0;
  std::sort(positive.begin(), positive.end());
  return -std::log(positive[positive.size() / 2]);
}

}  // namespace detail

/// (delta / Gamma(1-delta)) int_0^inf s^{-delta} energy_t(s) ds, computed
/// on the line s = e^x.
inline double subordinated_energy_quadrature(const SpectralMeasure& mu, const SubordinationParams& p) {
  p.validate();
  std::vector<double> pos;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu.lambda[i] > 0.0 && mu.mass[i] > 0.0) pos.push_back(mu.lambda[i]);
  if (pos.empty()) return 0.0;
  const double delta = p.delta;
  auto h = [&](double x) {
    const double s = std::exp(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) acc += -std::expm1(-s * mu.lambda[i]) * mu.mass[i];
    return std::exp(-delta * x) * acc;
  };
  quad::LineSpec spec;
  spec.split = std::isnan(p.split) ? detail::default_split(pos) : p.split;
  spec.head_rate = 1.0 - delta;
  spec.tail_rate = delta;
  return detail::gamma_prefactor(delta) * quad::integrate_line(h, spec, p.quadrature).value;
}

/// Q exp(-t Lambda) Q^T.
inline Eigen::MatrixXd heat_kernel_matrix(const OperatorSpectrum& spec, double t) {
  if (!(t > 0.0)) throw ArgumentError("t must be positive");
  const Eigen::VectorXd e = (-t * spec.eigenvalues.array()).exp().matrix();
  return spec.eigenvectors * e.asDiagonal() * spec.eigenvectors.transpose();
}

struct JumpKernel {
  Eigen::MatrixXd J;        // zero diagonal
  Eigen::VectorXd killing;  // per vertex
  double error_estimate = 0.0;
};

/// J(x, y) = (delta/Gamma(1-delta)) int_0^inf s^{-1-delta} p_s(x, y) ds for
/// x != y, and the killing density
/// (delta/Gamma(1-delta)) int_0^inf s^{-1-delta} (1 - sum_y p_s(x, y)) ds.
/// The integrand is formed as Q expm1(-s Lambda) Q^T (that is p_s - p_0) so
/// that it keeps full relative accuracy as s -> 0.
inline JumpKernel jump_kernel(const OperatorSpectrum& spec, const SubordinationParams& p) {
  p.validate();
  const Eigen::Index d = spec.dimension();
  const double delta = p.delta;
  const Eigen::Index pairs = d * (d - 1) / 2;
  const auto& Q = spec.eigenvectors;
  const Eigen::ArrayXd lam = spec.eigenvalues.array();
  auto F = [&](double x) {
    const double s = std::exp(x);
    const Eigen::VectorXd m = (-s * lam).unaryExpr([](double v) { return std::expm1(v); }).matrix();
    const Eigen::MatrixXd P = Q * m.asDiagonal() * Q.transpose();
    Eigen::ArrayXd out(pairs + d);
    Eigen::Index k = 0;
    for (Eigen::Index j = 1; j < d; ++j)
      for (Eigen::Index i = 0; i < j; ++i) out[k++] = P(i, j);
    out.tail(d) = P.rowwise().sum().array();
    return Eigen::ArrayXd(std::exp(-delta * x) * out);
  };
  std::vector<double> pos;
  for (Eigen::Index i = 0; i < d; ++i)
    if (lam[i] > 0.0) pos.push_back(lam[i]);
  JumpKernel jk;
  jk.J = Eigen::MatrixXd::Zero(d, d);
  jk.killing = Eigen::VectorXd::Zero(d);
  if (pos.empty() || d == 0) return jk;
  quad::LineSpec ls;
  ls.split = std::isnan(p.split) ? detail::default_split(pos) : p.split;
  ls.head_rate = 1.0 - delta;
  ls.tail_rate = delta;
  const auto r = quad::integrate_line_vec(F, ls, p.quadrature);
  const double c = detail::gamma_prefactor(delta);
  Eigen::Index k = 0;
  for (Eigen::Index j = 1; j < d; ++j)
    for (Eigen::Index i = 0; i < j; ++i) {
      jk.J(i, j) = jk.J(j, i) = c * r.value[k++];
    }
  jk.killing = (-c * r.value.tail(d)).matrix();
  jk.error_estimate = c * r.error;
  return jk;
}

/// (1/2) sum_{x,y} (u(x) - u(y))^2 J(x, y) + sum_x u(x)^2 killing(x).
inline double reconstruct_energy(const JumpKernel& jk, const Eigen::VectorXd& u) {
  double e = 0.0;
  const Eigen::Index d = u.size();
  for (Eigen::Index j = 1; j < d; ++j)
    for (Eigen::Index i = 0; i < j; ++i) {
      const double diff = u[i] - u[j];
      e += diff * diff * jk.J(i, j);
    }
  for (Eigen::Index i = 0; i < d; ++i) e += u[i] * u[i] * jk.killing[i];
  return e;
}

struct DyadicBlock {
  int k;
  double lambda;
};

/// Mass 2^{-(k+1)} at lambda_k in (2^k, 2^{k+1}].
inline SpectralMeasure dyadic_counterexample(const std::vector<DyadicBlock>& blocks) {
  std::vector<std::pair<double, double>> pairs;
  std::vector<int> seen;
  for (const auto& b : blocks) {
    if (b.k < 0) throw ArgumentError("dyadic block index must be nonnegative");
    if (std::find(seen.begin(), seen.end(), b.k) != seen.end())
      throw ArgumentError("dyadic block " + std::to_string(b.k) + " repeated");
    seen.push_back(b.k);
    const double lo = std::ldexp(1.0, b.k), hi = std::ldexp(1.0, b.k + 1);
    if (!(b.lambda > lo && b.lambda <= hi))
      throw ArgumentError("lambda for block " + std::to_string(b.k) + " must lie in (2^k, 2^{k+1}]");
    pairs.emplace_back(b.lambda, std::ldexp(1.0, -(b.k + 1)));
  }
  return SpectralMeasure::from_pairs(std::move(pairs));
}

/// Blocks k = 0..K-1 with lambda_k = (3/2) 2^k.
inline std::vector<DyadicBlock> standard_blocks(int K) {
  std::vector<DyadicBlock> b;
  for (int k = 0; k < K; ++k) b.push_back({k, 1.5 * std::ldexp(1.0, k)});
  return b;
}

/// sum_{k<K} 2^{-(1-delta)(k+1)}.
inline double dyadic_subordinated_bound(int K, double delta) {
  double s = 0.0;
  for (int k = 0; k < K; ++k) s += std::pow(2.0, -(1.0 - delta) * (k + 1));
  return s;
}

/// (int_{lambda>1} lambda^{d1} dmu, int_{lambda>1} lambda^{d2} dmu).
inline std::pair<double, double> tail_monotonicity_check(const SpectralMeasure& mu, double d1, double d2) {
  if (!(d1 > 0.0 && d1 < d2 && d2 < 1.0)) throw ArgumentError("need 0 < d1 < d2 < 1");
  double t1 = 0.0, t2 = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu.lambda[i] > 1.0) {
      t1 += std::pow(mu.lambda[i], d1) * mu.mass[i];
      t2 += std::pow(mu.lambda[i], d2) * mu.mass[i];
    }
  return {t1, t2};
}

/// (E^(delta)(u,u) + |u|^2, 2 (E(u,u) + |u|^2)).
inline std::pair<double, double> domination_check(const OperatorSpectrum& spec, const Eigen::VectorXd& u,
                                                  double delta = 0.5) {
  const auto mu = spectral_measure(spec, u);
  SubordinationParams p;
  p.delta = delta;
  const double n2 = u.squaredNorm();
  return {subordinated_energy(mu, p) + n2, 2.0 * (dirichlet_energy(mu) + n2)};
}

}  // namespace fraclab::spectral
