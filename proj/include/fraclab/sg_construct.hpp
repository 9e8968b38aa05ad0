#pragma once

// Inductive gasket construction of a function u with a_n(u) = n.
//
// Each level-n cell with corner values (a, b, c) at (p_0, p_1, p_2) receives
// edge-midpoint values x (opposite a), y (opposite b), z (opposite c) from
// extend_cell with parameter alpha_n.

#include <fraclab/energy.hpp>
#include <fraclab/error.hpp>
#include <fraclab/parallel.hpp>
#include <fraclab/prefractal.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace fraclab::sg {

/// phi(alpha) = 15 alpha^2 - 12 alpha + 3.
template <class T>
T phi(const T& alpha) {
  return T(T(15) * alpha * alpha - T(12) * alpha + T(3));
}

struct ExtensionParam {
  double alpha;
};

/// Root of phi(alpha) = (3/5)(n+1)/n in (0, 2/5): alpha_n = 2/5 - 1/(5 sqrt n).
/// The second root lies above 2/5 and is discarded.
inline ExtensionParam solve_alpha(int n) {
  if (n < 1) throw ArgumentError("solve_alpha needs n >= 1");
  return {0.4 - 1.0 / (5.0 * std::sqrt(static_cast<double>(n)))};
}

template <class T>
struct Midpoints {
  T x, y, z;
};

template <class T>
Midpoints<T> extend_cell(const T& a, const T& b, const T& c, const T& alpha) {
  const T w = T(1) - T(2) * alpha;
  return {T(alpha * b + alpha * c + w * a), T(alpha * c + alpha * a + w * b), T(alpha * a + alpha * b + w * c)};
}

/// Sum of the nine squared differences over the three child cells
/// (a, z, y), (z, b, x), (y, x, c).
template <class T>
T child_energy(const T& a, const T& b, const T& c, const Midpoints<T>& m) {
  auto sq = [](const T& v) { return T(v * v); };
  return T(sq(a - m.z) + sq(a - m.y) + sq(m.z - m.y) + sq(m.z - b) + sq(m.z - m.x) + sq(b - m.x) + sq(m.y - m.x) +
           sq(m.y - c) + sq(m.x - c));
}

template <class T>
T parent_energy(const T& a, const T& b, const T& c) {
  return T((a - b) * (a - b) + (b - c) * (b - c) + (c - a) * (c - a));
}

/// Extends u from graph `coarse` (level n) to the next level with one alpha.
inline VertexFunction<double> extend(const PrefractalGraph& coarse, const VertexFunction<double>& u,
                                     const PrefractalGraph& fine, double alpha) {
  if (coarse.kind != Kind::SG || fine.kind != Kind::SG || fine.level != coarse.level + 1)
    throw ArgumentError("extend needs consecutive gasket levels");
  detail::require_match(coarse, u);
  std::vector<double> out(fine.vertex_count(), 0.0);
  parallel_for(coarse.cell_count(), [&](std::size_t c) {
    const auto p = coarse.cell(c);
    const double a = u.values[p[0]], b = u.values[p[1]], cc = u.values[p[2]];
    const auto m = extend_cell(a, b, cc, alpha);
    const auto c0 = fine.cell(3 * c), c1 = fine.cell(3 * c + 1), c2 = fine.cell(3 * c + 2);
    // Corners p_i of the parent are p_i of child i; the midpoints lie only
    // inside this parent cell, so each write has one owner.
    out[c0[0]] = a;
    out[c1[1]] = b;
    out[c2[2]] = cc;
    out[c0[1]] = m.z;
    out[c0[2]] = m.y;
    out[c1[2]] = m.x;
  });
  return {fine, std::move(out)};
}

struct SgWitness {
  /// graphs[i] and levels[i] are level i + 1.
  std::vector<PrefractalGraph> graphs;
  std::vector<VertexFunction<double>> levels;
  /// alphas[i] extends level i + 1 to level i + 2.
  std::vector<double> alphas;

  int depth() const { return static_cast<int>(levels.size()); }
  std::vector<double> raw_energies() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < levels.size(); ++i) out.push_back(raw_energy(graphs[i], levels[i]));
    return out;
  }
  std::vector<double> weighted_energies() const {
    std::vector<double> out;
    const auto cfg = EnergyConfig::sg();
    for (std::size_t i = 0; i < levels.size(); ++i) out.push_back(weighted_energy(graphs[i], levels[i], cfg));
    return out;
  }
};


inline SgWitness build_witness(int N) {
  if (N < 1) throw ArgumentError("witness depth must be at least 1");
  const int cap = SpaceKind::of(Kind::SG).level_cap();
  if (N > cap) throw CapError("witness depth " + std::to_string(N) + " exceeds the sg level cap of " +
                              std::to_string(cap), cap);
  SgWitness w;
  w.graphs.push_back(build_graph(Kind::SG, 1));
  std::vector<double> seed(w.graphs[0].vertex_count(), 0.0);
  seed[*w.graphs[0].find(base_point(Kind::SG, 0))] = std::sqrt(30.0) / 10.0;
  w.levels.emplace_back(w.graphs[0], std::move(seed));
  for (int n = 1; n < N; ++n) {
    const double alpha = solve_alpha(n).alpha;
    w.graphs.push_back(build_graph(Kind::SG, n + 1));
    w.levels.push_back(extend(w.graphs[n - 1], w.levels[n - 1], w.graphs[n], alpha));
    w.alphas.push_back(alpha);
  }
  return w;
}

/// Entry n - 1: max over level-n cells of the value range on the cell.
inline std::vector<double> oscillation_profile(const SgWitness& w) {
  std::vector<double> out;
  for (std::size_t i = 0; i < w.levels.size(); ++i) {
    const auto& g = w.graphs[i];
    const auto& v = w.levels[i].values;
    double worst = 0.0;
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
      const auto p = g.cell(c);
      const auto [lo, hi] = std::minmax({v[p[0]], v[p[1]], v[p[2]]});
      worst = std::max(worst, hi - lo);
    }
    out.push_back(worst);
  }
  return out;
}

}  // namespace fraclab::sg
