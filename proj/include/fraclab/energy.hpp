#pragma once

// Discrete energies on pre-fractal graphs: raw sums E_n, weighted energies
// a_n, restrictions to unions of cells, and Besov-type partial sums.
//
// Energies sum over unordered pairs {p, q} inside each cell. A pair shared
// by two carpet cells is counted once per cell.

#include <fraclab/error.hpp>
#include <fraclab/parallel.hpp>
#include <fraclab/prefractal.hpp>
#include <fraclab/rational.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <vector>

namespace fraclab {

template <class T>
struct VertexFunction {
  Kind kind = Kind::SG;
  int level = 0;
  std::vector<T> values;

  VertexFunction() = default;
  VertexFunction(const PrefractalGraph& g, std::vector<T> v) : kind(g.kind), level(g.level), values(std::move(v)) {
    if (values.size() != g.vertex_count()) throw ArgumentError("vertex function size does not match the graph");
  }
  static VertexFunction constant(const PrefractalGraph& g, T c) { return {g, std::vector<T>(g.vertex_count(), c)}; }

  bool matches(const PrefractalGraph& g) const {
    return kind == g.kind && level == g.level && values.size() == g.vertex_count();
  }
};

namespace detail {
template <class T>
void require_match(const PrefractalGraph& g, const VertexFunction<T>& u) {
  if (!u.matches(g)) throw ArgumentError("vertex function is not defined on this graph");
}
}  // namespace detail

struct EnergyConfig {
  Kind kind = Kind::SG;
  double rho = 1.25148;
  double beta_star = 0.0;
  double besov_base = 2.0;

  static constexpr double kDefaultRho = 1.25148;
  static constexpr double kRhoMin = 7.0 / 6.0;
  static constexpr double kRhoMax = 1.5;

  static EnergyConfig sg() { return {Kind::SG, 5.0 / 3.0, std::log(5.0) / std::log(2.0), 2.0}; }
  static EnergyConfig sc(double rho = kDefaultRho) {
    if (!(rho >= kRhoMin && rho <= kRhoMax))
      throw ArgumentError("rho must lie in [7/6, 3/2], got " + std::to_string(rho));
    return {Kind::SC, rho, std::log(8.0 * rho) / std::log(3.0), 3.0};
  }
  static EnergyConfig for_kind(Kind k, double rho = kDefaultRho) { return k == Kind::SG ? sg() : sc(rho); }

  /// Per-level energy weight: 5/3 on SG, rho on SC.
  double weight() const { return kind == Kind::SG ? 5.0 / 3.0 : rho; }
  Rational weight_exact() const { return kind == Kind::SG ? Rational(5, 3) : exact_rational(rho); }

  /// {b*-0.5, b*-0.2, b*-0.05, b*, b*+0.05}
  std::vector<double> default_betas() const {
    return {beta_star - 0.5, beta_star - 0.2, beta_star - 0.05, beta_star, beta_star + 0.05};
  }
};

/// E_n(u) = sum over cell pairs of (u(p) - u(q))^2.
template <class T>
T raw_energy(const PrefractalGraph& g, const VertexFunction<T>& u) {
  detail::require_match(g, u);
  const auto& v = u.values;
  if constexpr (std::is_same_v<T, double>) {
    return deterministic_sum(g.edges.size(), [&](std::size_t i) {
      const double d = v[g.edges[i].a] - v[g.edges[i].b];
      return d * d;
    });
  } else {
    T sum = 0;
    for (const auto& e : g.edges) {
      const T d = v[e.a] - v[e.b];
      sum += d * d;
    }
    return sum;
  }
}

/// a_n(u) = weight^n * E_n(u).
template <class T>
T weighted_energy(const PrefractalGraph& g, const VertexFunction<T>& u, const EnergyConfig& cfg) {
  if (cfg.kind != g.kind) throw ArgumentError("energy config kind does not match the graph");
  if constexpr (std::is_same_v<T, double>) {
    return std::pow(cfg.weight(), g.level) * raw_energy(g, u);
  } else {
    T w = 1;
    const T base = cfg.weight_exact();
    for (int i = 0; i < g.level; ++i) w *= base;
    return w * raw_energy(g, u);
  }
}

/// Union of level-m cells.
struct CellRegion {
  int level = 0;
  int alphabet = 3;
  std::vector<bool> member;

  static CellRegion from_words(const std::vector<Word>& words, int level, int alphabet) {
    CellRegion r{level, alphabet, std::vector<bool>(ipow(static_cast<std::uint64_t>(alphabet), level), false)};
    for (const auto& w : words) {
      if (w.level() != level) throw ArgumentError("region words must all have the same level");
      r.member[w.index(alphabet)] = true;
    }
    return r;
  }
  static CellRegion all(int level, int alphabet) {
    return {level, alphabet, std::vector<bool>(ipow(static_cast<std::uint64_t>(alphabet), level), true)};
  }
  /// All level-m cells except `excluded`.
  static CellRegion complement_of(const Word& excluded, int alphabet) {
    auto r = all(excluded.level(), alphabet);
    r.member[excluded.index(alphabet)] = false;
    return r;
  }
};

/// Complement of the cell 0^ell seen at level n: cells at level min(ell, n)
/// other than the all-zero word. A level-n cell with n < ell contains
/// K_{0^ell} only if it is 0^n itself.
inline CellRegion complement_of_zero_cell(int ell, int n, int alphabet) {
  return CellRegion::complement_of(Word::repeat(0, std::min(ell, n)), alphabet);
}

/// E_n^A(u): only edges whose owning cell lies in the region.
template <class T>
T restricted_energy(const PrefractalGraph& g, const VertexFunction<T>& u, const CellRegion& region) {
  detail::require_match(g, u);
  if (region.level > g.level)
    throw ArgumentError("region level " + std::to_string(region.level) + " exceeds function level " +
                        std::to_string(g.level));
  if (region.alphabet != g.space().alphabet_size) throw ArgumentError("region alphabet does not match the graph");
  const std::uint64_t shift = ipow(static_cast<std::uint64_t>(region.alphabet), g.level - region.level);
  const auto& v = u.values;
  if constexpr (std::is_same_v<T, double>) {
    return deterministic_sum(g.edges.size(), [&](std::size_t i) {
      const auto& e = g.edges[i];
      if (!region.member[e.cell / shift]) return 0.0;
      const double d = v[e.a] - v[e.b];
      return d * d;
    });
  } else {
    T sum = 0;
    for (const auto& e : g.edges) {
      if (!region.member[e.cell / shift]) continue;
      const T d = v[e.a] - v[e.b];
      sum += d * d;
    }
    return sum;
  }
}

template <class T>
T restricted_energy(const PrefractalGraph& g, const VertexFunction<T>& u, const std::vector<Word>& region) {
  if (region.empty()) return T(0);
  return restricted_energy(g, u, CellRegion::from_words(region, region.front().level(), g.space().alphabet_size));
}

/// Per-level energies plus partial sums sum_{n<=N} base^{(beta-beta*)n} a_n.
struct EnergyReport {
  std::vector<int> levels;
  std::vector<double> raw;
  std::vector<double> weighted;
  std::vector<double> betas;
  /// partial[b][i]: partial sum for betas[b] through levels[i].
  std::vector<std::vector<double>> partial;
};

/// `weighted[i]` is a_n for n = i + 1.
inline std::vector<std::vector<double>> besov_partial_sums(std::span<const double> weighted, const EnergyConfig& cfg,
                                                           std::span<const double> betas) {
  if (weighted.empty()) throw ArgumentError("besov partial sums need at least one level");
  std::vector<std::vector<double>> out;
  out.reserve(betas.size());
  for (double beta : betas) {
    std::vector<double> sums(weighted.size());
    double s = 0.0;
    for (std::size_t i = 0; i < weighted.size(); ++i) {
      const double n = static_cast<double>(i + 1);
      s += std::pow(cfg.besov_base, (beta - cfg.beta_star) * n) * weighted[i];
      sums[i] = s;
    }
    out.push_back(std::move(sums));
  }
  return out;
}

inline EnergyReport make_report(std::vector<int> levels, std::vector<double> raw, const EnergyConfig& cfg,
                                std::vector<double> betas) {
  EnergyReport rep;
  rep.levels = std::move(levels);
  rep.raw = std::move(raw);
  rep.weighted.resize(rep.raw.size());
  for (std::size_t i = 0; i < rep.raw.size(); ++i) rep.weighted[i] = std::pow(cfg.weight(), rep.levels[i]) * rep.raw[i];
  rep.betas = std::move(betas);
  if (!rep.weighted.empty()) {
    // The partial sums index a_n by its level; missing levels contribute 0.
    const int top = *std::max_element(rep.levels.begin(), rep.levels.end());
    std::vector<double> dense(static_cast<std::size_t>(std::max(top, 1)), 0.0);
    for (std::size_t i = 0; i < rep.levels.size(); ++i)
      if (rep.levels[i] >= 1) dense[static_cast<std::size_t>(rep.levels[i] - 1)] = rep.weighted[i];
    auto sums = besov_partial_sums(dense, cfg, rep.betas);
    rep.partial.assign(rep.betas.size(), std::vector<double>(rep.levels.size(), 0.0));
    for (std::size_t b = 0; b < rep.betas.size(); ++b)
      for (std::size_t i = 0; i < rep.levels.size(); ++i)
        rep.partial[b][i] = rep.levels[i] >= 1 ? sums[b][static_cast<std::size_t>(rep.levels[i] - 1)] : 0.0;
  }
  return rep;
}

struct MinkowskiCheck {
  double lhs;
  double rhs;
};

/// sqrt(E(uv)) versus max|u| sqrt(E(v)) + max|v| sqrt(E(u)).
inline MinkowskiCheck minkowski_product_bound_check(const PrefractalGraph& g, const VertexFunction<double>& u,
                                                    const VertexFunction<double>& v) {
  detail::require_match(g, u);
  detail::require_match(g, v);
  VertexFunction<double> uv = u;
  double max_u = 0.0, max_v = 0.0;
  for (std::size_t i = 0; i < uv.values.size(); ++i) {
    uv.values[i] = u.values[i] * v.values[i];
    max_u = std::max(max_u, std::abs(u.values[i]));
    max_v = std::max(max_v, std::abs(v.values[i]));
  }
  return {std::sqrt(raw_energy(g, uv)),
          max_u * std::sqrt(raw_energy(g, v)) + max_v * std::sqrt(raw_energy(g, u))};
}

/// Restriction of a level-n function to the level-m vertex set (m <= n).
template <class T>
VertexFunction<T> restrict_to(const PrefractalGraph& fine, const VertexFunction<T>& u, const PrefractalGraph& coarse) {
  detail::require_match(fine, u);
  const auto map = embed_vertices(coarse, fine);
  std::vector<T> vals(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) vals[i] = u.values[map[i]];
  return {coarse, std::move(vals)};
}

}  // namespace fraclab
