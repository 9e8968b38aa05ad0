#pragma once

// Independent reference computations used only by the tests. None of these
// share code paths with the library beyond basic types.

#include <boost/multiprecision/cpp_int.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

using Q = boost::multiprecision::cpp_rational;
using QPoint = std::pair<Q, Q>;

/// V_0 in true coordinates (SG in the skewed frame with apex (1/2, 1)).
inline std::vector<QPoint> base(bool carpet) {
  if (!carpet) return {{Q(0), Q(0)}, {Q(1), Q(0)}, {Q(1, 2), Q(1)}};
  return {{Q(0), Q(0)}, {Q(1, 2), Q(0)}, {Q(1), Q(0)}, {Q(1), Q(1, 2)},
          {Q(1), Q(1)}, {Q(1, 2), Q(1)}, {Q(0), Q(1)}, {Q(0), Q(1, 2)}};
}

/// Corners used by the contraction maps: SG uses V_0, SC uses the 8 boundary
/// points of the unit square.
inline QPoint map(bool carpet, int i, const QPoint& p) {
  const Q r = carpet ? Q(3) : Q(2);
  const auto c = base(carpet)[static_cast<std::size_t>(i)];
  return {p.first / r + (1 - 1 / r) * c.first, p.second / r + (1 - 1 / r) * c.second};
}

struct BruteGraph {
  std::set<QPoint> vertices;
  /// Each cell as its list of 8 (or 3) points, in V_0 order.
  std::vector<std::vector<QPoint>> cells;
};

/// Recursive composition f_{w_1} o ... o f_{w_n} applied to V_0; dedup by set.
inline BruteGraph brute_graph(bool carpet, int n) {
  BruteGraph g;
  const int k = carpet ? 8 : 3;
  std::vector<std::vector<int>> words{{}};
  for (int d = 0; d < n; ++d) {
    std::vector<std::vector<int>> nw;
    for (auto& w : words)
      for (int i = 0; i < k; ++i) {
        auto x = w;
        x.push_back(i);
        nw.push_back(std::move(x));
      }
    words.swap(nw);
  }
  for (auto& w : words) {
    std::vector<QPoint> pts = base(carpet);
    for (auto it = w.rbegin(); it != w.rend(); ++it)
      for (auto& p : pts) p = map(carpet, *it, p);
    for (auto& p : pts) g.vertices.insert(p);
    g.cells.push_back(std::move(pts));
  }
  return g;
}

}  // namespace oracle

namespace oracle {

/// Self-similar f on [0,1] at triadic and half-triadic points, by the
/// relation f(d/3 + y/3) = f(d/3) + (f((d+1)/3) - f(d/3)) f(y).
inline Q f(const Q& x) {
  if (x == 0) return Q(0);
  if (x == 1) return Q(1);
  if (x == Q(1, 3)) return Q(2, 7);
  if (x == Q(2, 3)) return Q(5, 7);
  if (x == Q(1, 2)) return Q(1, 2);
  const Q three_x = 3 * x;
  const boost::multiprecision::cpp_int d = numerator(three_x) / denominator(three_x);
  const Q lo = f(Q(d, 3));
  const Q hi = f(Q(d + 1, 3));
  return lo + (hi - lo) * f(three_x - Q(d));
}

/// Bisection for a root of g on [lo, hi] with a sign change.
template <class G>
double bisect(G g, double lo, double hi) {
  double glo = g(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm > 0) == (glo > 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Golden-section search for the minimizer of a unimodal g on [lo, hi].
template <class G>
double golden_min(G g, double lo, double hi) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  for (int i = 0; i < 200; ++i) {
    if (g(c) < g(d)) b = d; else a = c;
    c = b - r * (b - a);
    d = a + r * (b - a);
  }
  return 0.5 * (a + b);
}

}  // namespace oracle

namespace oracle {

/// Dense solve of the Dirichlet problem: minimize sum over `edges` of
/// (u_a - u_b)^2 with u fixed where `fixed_mask` is set.
inline std::vector<double> dense_dirichlet(std::size_t nv, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                           const std::vector<char>& fixed_mask, const std::vector<double>& fixed_val) {
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nv), static_cast<Eigen::Index>(nv));
  for (auto [a, b] : edges) {
    const auto i = static_cast<Eigen::Index>(a), j = static_cast<Eigen::Index>(b);
    L(i, i) += 1;
    L(j, j) += 1;
    L(i, j) -= 1;
    L(j, i) -= 1;
  }
  std::vector<Eigen::Index> fr;
  for (std::size_t i = 0; i < nv; ++i)
    if (!fixed_mask[i]) fr.push_back(static_cast<Eigen::Index>(i));
  const auto m = static_cast<Eigen::Index>(fr.size());
  Eigen::MatrixXd A(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) A(r, c) = L(fr[r], fr[c]);
    for (std::size_t j = 0; j < nv; ++j)
      if (fixed_mask[j]) rhs[r] -= L(fr[r], static_cast<Eigen::Index>(j)) * fixed_val[j];
  }
  Eigen::VectorXd x = A.ldlt().solve(rhs);
  std::vector<double> u = fixed_val;
  for (Eigen::Index r = 0; r < m; ++r) u[static_cast<std::size_t>(fr[r])] = x[r];
  return u;
}

}  // namespace oracle
