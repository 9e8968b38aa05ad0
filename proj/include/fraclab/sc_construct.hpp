#pragma once

// Carpet constructions: the self-similar function f, the product u2,
// resistance potentials between S and L, and the gluing iteration.

#include <fraclab/energy.hpp>
#include <fraclab/error.hpp>
#include <fraclab/parallel.hpp>
#include <fraclab/prefractal.hpp>
#include <fraclab/rational.hpp>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace fraclab::sc {

// ---------------------------------------------------------------------------
// f on triadic points

namespace detail {

/// Exponent m with den = 3^m, or -1.
inline int triadic_exponent(const BigInt& den) {
  BigInt d = den;
  int m = 0;
  while (d % 3 == 0) {
    d /= 3;
    ++m;
  }
  return d == 1 ? m : -1;
}

}  // namespace detail

/// Memoized f with f(0) = 0, f(1) = 1 and
///   f((3i+1)/3^{n+1}) = 5/7 f(i/3^n) + 2/7 f((i+1)/3^n)
///   f((3i+2)/3^{n+1}) = 2/7 f(i/3^n) + 5/7 f((i+1)/3^n).
/// Half-triadic lattice points k/(2*3^n) extend f by self-similarity, which
/// puts f at an odd multiple of 1/(2*3^n) at the mean of its two neighbours.
class TriadicFunction {
 public:
  /// Exact f(q); q must be i/3^m in [0, 1].
  Rational eval(const Rational& q) {
    if (q < 0 || q > 1) throw ArgumentError("f is defined on [0, 1] only");
    const int m = detail::triadic_exponent(denominator(q));
    if (m < 0) throw ArgumentError("f_eval needs a triadic rational i/3^m");
    std::lock_guard lock(mutex_);
    return eval_locked(q);
  }

  /// f(i/3^m) for i = 0..3^m.
  const std::vector<Rational>& triadic_table(int m) {
    std::lock_guard lock(mutex_);
    return triadic_locked(m);
  }

  /// f(k/(2*3^n)) for k = 0..2*3^n.
  const std::vector<Rational>& lattice_table(int n) {
    std::lock_guard lock(mutex_);
    auto it = lattice_.find(n);
    if (it != lattice_.end()) return it->second;
    const auto& t = triadic_locked(n);
    std::vector<Rational> out(2 * (t.size() - 1) + 1);
    for (std::size_t i = 0; i < t.size(); ++i) out[2 * i] = t[i];
    for (std::size_t i = 0; i + 1 < t.size(); ++i) out[2 * i + 1] = (t[i] + t[i + 1]) / 2;
    return lattice_.emplace(n, std::move(out)).first->second;
  }

  std::vector<double> lattice_table_double(int n) {
    const auto& t = lattice_table(n);
    std::vector<double> out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = to_double(t[i]);
    return out;
  }

 private:
  Rational eval_locked(const Rational& q) {
    if (q == 0) return Rational(0);
    if (q == 1) return Rational(1);
    auto it = memo_.find(q);
    if (it != memo_.end()) return it->second;
    const BigInt den = denominator(q);
    const BigInt num = numerator(q);
    const BigInt i = num / 3, r = num % 3;
    const BigInt parent = den / 3;
    const Rational lo = eval_locked(Rational(i, parent));
    const Rational hi = eval_locked(Rational(i + 1, parent));
    const Rational v = r == 1 ? Rational(Rational(5, 7) * lo + Rational(2, 7) * hi)
                              : Rational(Rational(2, 7) * lo + Rational(5, 7) * hi);
    memo_.emplace(q, v);
    return v;
  }

  const std::vector<Rational>& triadic_locked(int m) {
    if (m < 0) throw ArgumentError("negative triadic level");
    if (m > 12) throw CapError("triadic table level exceeds 12", 12);
    auto it = triadic_.find(m);
    if (it != triadic_.end()) return it->second;
    std::vector<Rational> t;
    if (m == 0) {
      t = {Rational(0), Rational(1)};
    } else {
      const auto& p = triadic_locked(m - 1);
      t.resize(3 * (p.size() - 1) + 1);
      for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        t[3 * i] = p[i];
        t[3 * i + 1] = Rational(5, 7) * p[i] + Rational(2, 7) * p[i + 1];
        t[3 * i + 2] = Rational(2, 7) * p[i] + Rational(5, 7) * p[i + 1];
      }
      t.back() = p.back();
    }
    return triadic_.emplace(m, std::move(t)).first->second;
  }

  std::mutex mutex_;
  std::map<Rational, Rational> memo_;
  std::map<int, std::vector<Rational>> triadic_;
  std::map<int, std::vector<Rational>> lattice_;
};

inline TriadicFunction& shared_f() {
  static TriadicFunction f;
  return f;
}

inline Rational f_eval(const Rational& q) { return shared_f().eval(q); }

/// u2(x, y) = f(x) f(1-x) f(y) f(1-y) at a triadic point.
inline Rational u2_eval(const LatticePoint& p) {
  const Rational x = p.xq(), y = p.yq();
  return f_eval(x) * f_eval(Rational(1 - x)) * f_eval(y) * f_eval(Rational(1 - y));
}

/// (x, y) -> f(x) on the carpet graph.
inline VertexFunction<Rational> f_function_exact(const PrefractalGraph& g) {
  if (g.kind != Kind::SC) throw UnsupportedKindError("f is a carpet function");
  const auto& t = shared_f().lattice_table(g.level);
  std::vector<Rational> v(g.vertex_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = t[static_cast<std::size_t>(g.coords[i][0])];
  return {g, std::move(v)};
}

inline VertexFunction<double> f_function(const PrefractalGraph& g) {
  if (g.kind != Kind::SC) throw UnsupportedKindError("f is a carpet function");
  const auto t = shared_f().lattice_table_double(g.level);
  std::vector<double> v(g.vertex_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = t[static_cast<std::size_t>(g.coords[i][0])];
  return {g, std::move(v)};
}

inline VertexFunction<Rational> u2_function_exact(const PrefractalGraph& g) {
  if (g.kind != Kind::SC) throw UnsupportedKindError("u2 is a carpet function");
  const auto& t = shared_f().lattice_table(g.level);
  const auto d = static_cast<std::size_t>(g.denominator);
  std::vector<Rational> v(g.vertex_count());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto x = static_cast<std::size_t>(g.coords[i][0]), y = static_cast<std::size_t>(g.coords[i][1]);
    v[i] = t[x] * t[d - x] * t[y] * t[d - y];
  }
  return {g, std::move(v)};
}

inline VertexFunction<double> u2_function(const PrefractalGraph& g) {
  if (g.kind != Kind::SC) throw UnsupportedKindError("u2 is a carpet function");
  const auto t = shared_f().lattice_table_double(g.level);
  const auto d = static_cast<std::size_t>(g.denominator);
  std::vector<double> v(g.vertex_count());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto x = static_cast<std::size_t>(g.coords[i][0]), y = static_cast<std::size_t>(g.coords[i][1]);
    v[i] = t[x] * t[d - x] * t[y] * t[d - y];
  }
  return {g, std::move(v)};
}

// ---------------------------------------------------------------------------
// Resistance between S and L

inline constexpr int kResistanceCap = 5;

struct ResistanceProblem {
  PrefractalGraph graph;
  std::vector<std::uint32_t> source;  // S
  std::vector<std::uint32_t> ground;  // L
  VertexFunction<double> potential;
  double energy = 0.0;
  double resistance = 0.0;
  double residual = 0.0;
  double rhs_norm = 0.0;
  int iterations = 0;
};

/// Graph Laplacian with one unit of conductance per cell edge.
inline Eigen::SparseMatrix<double> laplacian(const PrefractalGraph& g) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(g.edges.size() * 4);
  for (const auto& e : g.edges) {
    const auto a = static_cast<int>(e.a), b = static_cast<int>(e.b);
    trip.emplace_back(a, a, 1.0);
    trip.emplace_back(b, b, 1.0);
    trip.emplace_back(a, b, -1.0);
    trip.emplace_back(b, a, -1.0);
  }
  const auto n = static_cast<Eigen::Index>(g.vertex_count());
  Eigen::SparseMatrix<double> L(n, n);
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

/// Minimizes E_n(u) subject to u = 1 on S and u = 0 on L. An optional
/// initial guess covers every vertex.
inline ResistanceProblem solve_resistance(int n, const std::vector<double>* guess = nullptr) {
  if (n < 1) throw ArgumentError("resistance level must be at least 1");
  if (n > kResistanceCap)
    throw CapError("resistance level " + std::to_string(n) + " exceeds the cap of " + std::to_string(kResistanceCap),
                   kResistanceCap);
  ResistanceProblem p;
  p.graph = build_graph(Kind::SC, n);
  const auto& g = p.graph;
  p.source = boundary_vertices(g, {BoundaryName::S});
  p.ground = boundary_vertices(g, {BoundaryName::L});

  const std::size_t nv = g.vertex_count();
  std::vector<double> fixed(nv, 0.0);
  std::vector<int> free_index(nv, 0);
  for (auto s : p.source) free_index[s] = -1, fixed[s] = 1.0;
  for (auto l : p.ground) free_index[l] = -1;
  std::vector<std::uint32_t> free;
  for (std::size_t i = 0; i < nv; ++i)
    if (free_index[i] >= 0) {
      free_index[i] = static_cast<int>(free.size());
      free.push_back(static_cast<std::uint32_t>(i));
    }

  const auto nf = static_cast<Eigen::Index>(free.size());
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
  for (const auto& e : g.edges) {
    const int fa = free_index[e.a], fb = free_index[e.b];
    if (fa >= 0) trip.emplace_back(fa, fa, 1.0);
    if (fb >= 0) trip.emplace_back(fb, fb, 1.0);
    if (fa >= 0 && fb >= 0) {
      trip.emplace_back(fa, fb, -1.0);
      trip.emplace_back(fb, fa, -1.0);
    } else if (fa >= 0) {
      rhs[fa] += fixed[e.b];
    } else if (fb >= 0) {
      rhs[fb] += fixed[e.a];
    }
  }
  Eigen::SparseMatrix<double> A(nf, nf);
  A.setFromTriplets(trip.begin(), trip.end());

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(1e-13);
  cg.setMaxIterations(static_cast<Eigen::Index>(20 * nf + 100));
  cg.compute(A);
  Eigen::VectorXd x;
  if (guess) {
    if (guess->size() != nv) throw ArgumentError("initial guess size does not match the graph");
    Eigen::VectorXd x0(nf);
    for (Eigen::Index i = 0; i < nf; ++i) x0[i] = (*guess)[free[static_cast<std::size_t>(i)]];
    x = cg.solveWithGuess(rhs, x0);
  } else {
    x = cg.solve(rhs);
  }
  p.rhs_norm = rhs.norm();
  p.residual = (A * x - rhs).norm();
  p.iterations = static_cast<int>(cg.iterations());
  if (!(p.residual <= 1e-10 * p.rhs_norm))
    throw NumericError("resistance solve at level " + std::to_string(n) + " did not converge: residual " +
                       std::to_string(p.residual) + " vs rhs norm " + std::to_string(p.rhs_norm));

  std::vector<double> u = fixed;
  for (Eigen::Index i = 0; i < nf; ++i) u[free[static_cast<std::size_t>(i)]] = x[i];
  p.potential = VertexFunction<double>(g, std::move(u));
  p.energy = raw_energy(g, p.potential);
  p.resistance = 1.0 / p.energy;
  return p;
}

struct RhoEstimate {
  std::vector<double> resistances;  // R_1..R_N
  std::vector<double> ratios;       // R_{n+1}/R_n
  double extrapolated = 0.0;
  double uncertainty = 0.0;
  /// Whether extrapolated +- uncertainty meets [1.25147, 1.25149]. Informational.
  bool overlaps_reference = false;
};

inline constexpr double kReferenceRhoLo = 1.25147;
inline constexpr double kReferenceRhoHi = 1.25149;

/// Ratios of successive resistances and an Aitken extrapolation of their limit.
inline RhoEstimate estimate_rho(int max_level) {
  if (max_level < 1) throw ArgumentError("max_level must be at least 1");
  if (max_level > kResistanceCap)
    throw CapError("max_level exceeds the resistance cap of " + std::to_string(kResistanceCap), kResistanceCap);
  RhoEstimate est;
  for (int n = 1; n <= max_level; ++n) est.resistances.push_back(solve_resistance(n).resistance);
  for (std::size_t i = 1; i < est.resistances.size(); ++i)
    est.ratios.push_back(est.resistances[i] / est.resistances[i - 1]);
  const auto& r = est.ratios;
  const std::size_t k = r.size();
  if (k == 0) return est;
  est.extrapolated = r.back();
  if (k >= 2) est.uncertainty = std::abs(r[k - 1] - r[k - 2]);
  if (k >= 3) {
    const double d1 = r[k - 2] - r[k - 3], d2 = r[k - 1] - r[k - 2];
    const double denom = d2 - d1;
    if (std::abs(denom) > 1e-300) est.extrapolated = r[k - 1] - d2 * d2 / denom;
  }
  est.overlaps_reference =
      est.extrapolated - est.uncertainty <= kReferenceRhoHi && est.extrapolated + est.uncertainty >= kReferenceRhoLo;
  return est;
}

// ---------------------------------------------------------------------------
// u1 surrogate

struct U1Surrogate {
  int level = 0;
  double rho = 0.0;
  double scale = 0.0;
  /// graphs[j], values[j], energies[j] for j = 0..level.
  std::vector<PrefractalGraph> graphs;
  std::vector<VertexFunction<double>> values;
  std::vector<double> energies;
  /// max over 1 <= n <= level of max(E_n rho^n, 1/(E_n rho^n)).
  double c_hat = 1.0;
};

/// Level-m S-L potential scaled so that E_m = rho^{-m}, restricted to all
/// coarser levels.
inline U1Surrogate u1_surrogate(int m, double rho) {
  auto prob = solve_resistance(m);
  U1Surrogate s;
  s.level = m;
  s.rho = rho;
  s.scale = std::sqrt(std::pow(rho, -m) / prob.energy);
  VertexFunction<double> top = prob.potential;
  for (auto& v : top.values) v *= s.scale;
  for (int j = 0; j < m; ++j) {
    s.graphs.push_back(build_graph(Kind::SC, j));
    s.values.push_back(restrict_to(prob.graph, top, s.graphs.back()));
  }
  s.graphs.push_back(std::move(prob.graph));
  s.values.push_back(std::move(top));
  for (int j = 0; j <= m; ++j) {
    s.energies.push_back(raw_energy(s.graphs[static_cast<std::size_t>(j)], s.values[static_cast<std::size_t>(j)]));
    if (j >= 1) {
      const double q = s.energies.back() * std::pow(rho, j);
      s.c_hat = std::max({s.c_hat, q, 1.0 / q});
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Gluing

enum class Template { U1, U2 };

inline const char* to_string(Template t) { return t == Template::U1 ? "u1" : "u2"; }

/// Template functions at every level needed by the gluing.
struct GlueTemplates {
  int cap = 6;
  double rho = EnergyConfig::kDefaultRho;
  U1Surrogate u1;
  std::vector<PrefractalGraph> graphs;  // 0..cap
  std::vector<VertexFunction<double>> u2;
  std::vector<double> u2_energy;

  static std::shared_ptr<const GlueTemplates> make(int cap, double rho) {
    const int sc_cap = SpaceKind::of(Kind::SC).level_cap();
    if (cap < 3 || cap > sc_cap)
      throw ArgumentError("glue cap must lie in [3, " + std::to_string(sc_cap) + "]");
    auto t = std::make_shared<GlueTemplates>();
    t->cap = cap;
    t->rho = rho;
    t->u1 = u1_surrogate(std::min(kResistanceCap, cap - 1), rho);
    for (int j = 0; j <= cap; ++j) {
      t->graphs.push_back(build_graph(Kind::SC, j));
      t->u2.push_back(u2_function(t->graphs.back()));
      t->u2_energy.push_back(raw_energy(t->graphs.back(), t->u2.back()));
    }
    return t;
  }

  const PrefractalGraph& graph(Template tp, int j) const {
    check(tp, j);
    return tp == Template::U1 ? u1.graphs[static_cast<std::size_t>(j)] : graphs[static_cast<std::size_t>(j)];
  }
  const VertexFunction<double>& values(Template tp, int j) const {
    check(tp, j);
    return tp == Template::U1 ? u1.values[static_cast<std::size_t>(j)] : u2[static_cast<std::size_t>(j)];
  }
  double energy(Template tp, int j) const {
    check(tp, j);
    return tp == Template::U1 ? u1.energies[static_cast<std::size_t>(j)] : u2_energy[static_cast<std::size_t>(j)];
  }

 private:
  void check(Template tp, int j) const {
    const int top = tp == Template::U1 ? u1.level : cap;
    if (j < 0 || j > top)
      throw CapError(std::string("template ") + to_string(tp) + " is not available at level " + std::to_string(j),
                     top);
  }
};

/// u restricted to K_prefix equals scale * template o f_prefix^{-1}.
struct Piece {
  Word prefix;
  Template tmpl = Template::U2;
  double scale = 0.0;
};

struct GlueStepRecord {
  int k = 0;
  int n_k = 0;
  /// "violation": smallest level breaking the upper bound; "fallback": no
  /// level up to the cap breaks it, so the smallest admissible level is used.
  std::string rule;
  double target = 0.0;
  double other_energy = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  int delta2_halvings = 0;
  double restricted_energy = 0.0;
  double sup_delta = 0.0;
};

struct GlueState {
  std::shared_ptr<const GlueTemplates> templates;
  int step = 0;
  double rho = EnergyConfig::kDefaultRho;
  double C = 0.0;
  double C1 = 0.0;
  std::vector<int> thresholds;
  std::vector<double> delta1s;
  std::vector<double> delta2s;
  std::vector<Piece> pieces;
  std::vector<GlueStepRecord> records;

  int cap() const { return templates->cap; }
  double bound(int n) const { return C * n * std::pow(rho, -n); }
  double target(int n) const { return n * std::pow(rho, -n) / (2.0 * C); }
};

/// E_n of the assembly from the template energies; pieces longer than n
/// contribute nothing because templates vanish on V_0.
inline double ledger_energy(const GlueState& s, int n) {
  double e = 0.0;
  for (const auto& p : s.pieces) {
    const int l = p.prefix.level();
    if (n > l) e += p.scale * p.scale * s.templates->energy(p.tmpl, n - l);
  }
  return e;
}

/// E_n restricted to the complement of the cell 0^ell.
inline double ledger_restricted(const GlueState& s, int n, int ell) {
  const int e = std::min(ell, n);
  double sum = 0.0;
  for (const auto& p : s.pieces) {
    const int l = p.prefix.level();
    if (n <= l) continue;
    const bool zero = std::all_of(p.prefix.letters.begin(), p.prefix.letters.end(), [](int c) { return c == 0; });
    const double w = p.scale * p.scale;
    if (!zero) {
      sum += w * s.templates->energy(p.tmpl, n - l);
    } else if (l < e) {
      const auto& g = s.templates->graph(p.tmpl, n - l);
      sum += w * restricted_energy(g, s.templates->values(p.tmpl, n - l), complement_of_zero_cell(e - l, n - l, 8));
    }
  }
  return sum;
}

inline bool upper_bound_holds(const GlueState& s, int lo, int hi, int* failing = nullptr) {
  for (int n = lo; n <= hi; ++n)
    if (!(ledger_energy(s, n) < s.bound(n))) {
      if (failing) *failing = n;
      return false;
    }
  return true;
}

/// Seed u^(1) = delta2 * u2 with delta2 halved from 1/2 until the upper
/// bound holds at levels 1 and 2.
inline GlueState glue_seed(std::shared_ptr<const GlueTemplates> templates, std::optional<double> C = std::nullopt) {
  GlueState s;
  s.templates = std::move(templates);
  s.rho = s.templates->rho;
  s.C1 = s.templates->u1.c_hat;
  s.C = C ? *C : s.C1 + 1.0;
  if (!(s.C > 0)) throw ArgumentError("C must be positive");
  double d2 = 0.5;
  s.pieces = {Piece{Word(), Template::U2, d2}};
  while (!upper_bound_holds(s, 1, 2)) {
    d2 /= 2;
    if (d2 < 1e-150) throw NumericError("seed scale underflow");
    s.pieces[0].scale = d2;
  }
  s.delta2s.push_back(d2);
  return s;
}

/// Values of the assembly on the level-n graph; `mismatch` receives the
/// largest disagreement at a vertex shared by two cells.
inline VertexFunction<double> materialize(const GlueState& s, int n, double* mismatch = nullptr) {
  const auto& T = *s.templates;
  if (n < 0 || n > T.cap) throw CapError("materialize level exceeds the glue cap", T.cap);
  const auto& g = T.graphs[static_cast<std::size_t>(n)];
  std::vector<std::unordered_map<std::uint64_t, std::size_t>> by_len(static_cast<std::size_t>(n) + 1);
  for (std::size_t i = 0; i < s.pieces.size(); ++i) {
    const int l = s.pieces[i].prefix.level();
    if (l <= n) by_len[static_cast<std::size_t>(l)].emplace(s.pieces[i].prefix.index(8), i);
  }
  std::vector<double> v(g.vertex_count(), 0.0);
  std::vector<char> seen(g.vertex_count(), 0);
  double worst = 0.0;
  auto put = [&](std::uint32_t idx, double val) {
    if (seen[idx]) {
      worst = std::max(worst, std::abs(v[idx] - val));
    } else {
      seen[idx] = 1;
      v[idx] = val;
    }
  };
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const auto cell = g.cell(c);
    const Piece* piece = nullptr;
    int l = 0;
    for (; l <= n; ++l) {
      const auto& m = by_len[static_cast<std::size_t>(l)];
      if (m.empty()) continue;
      auto it = m.find(c / ipow(8, n - l));
      if (it != m.end()) {
        piece = &s.pieces[it->second];
        break;
      }
    }
    if (!piece) {
      for (auto idx : cell) put(idx, 0.0);
      continue;
    }
    const int j = n - l;
    const auto& tg = T.graph(piece->tmpl, j);
    const auto& tv = T.values(piece->tmpl, j);
    const auto local = tg.cell(c % ipow(8, j));
    for (std::size_t i = 0; i < 8; ++i) put(cell[i], piece->scale * tv.values[local[i]]);
  }
  if (mismatch) *mismatch = worst;
  return {g, std::move(v)};
}

/// One induction step of the gluing; see GlueStepRecord for the threshold rule.
inline GlueState glue_step(const GlueState& prev) {
  GlueState s = prev;
  const int k = prev.step + 1;
  const int cap = prev.cap();
  const int n_prev = k == 1 ? 1 : prev.thresholds.back();
  const Word excluded = Word::repeat(0, n_prev - 1);

  auto it = std::find_if(s.pieces.begin(), s.pieces.end(), [&](const Piece& p) { return p.prefix == excluded; });
  if (it == s.pieces.end() || it->tmpl != Template::U2)
    throw NumericError("glue state has no u2 piece at the excluded cell");
  s.pieces.erase(it);

  // Energy off 0^{n-1} at level n from the pieces that stay.
  auto other = [&](int n) { return ledger_restricted(s, n, n - 1); };

  const int lo = std::max(n_prev + 1, 3);
  int n_k = -1;
  std::string rule;
  for (int n = lo; n <= cap && n_k < 0; ++n)
    if (ledger_energy(prev, n) >= prev.bound(n) && other(n) < s.target(n)) n_k = n, rule = "violation";
  for (int n = lo; n <= cap && n_k < 0; ++n)
    if (other(n) < s.target(n)) n_k = n, rule = "fallback";
  if (n_k < 0)
    throw CapError("no admissible threshold level up to the cap; largest level checked " + std::to_string(cap), cap);

  GlueStepRecord rec;
  rec.k = k;
  rec.n_k = n_k;
  rec.rule = rule;
  rec.target = s.target(n_k);
  rec.other_energy = other(n_k);
  const int d = n_k - n_prev;
  const double copies = static_cast<double>(ipow(8, d) - 1);
  const double e1 = s.templates->energy(Template::U1, 1);
  // Nudged so that the >= comparison survives summation order.
  const double d1 = std::sqrt((rec.target - rec.other_energy) / (copies * e1) * (1.0 + 1e-12));
  rec.delta1 = d1;

  const std::uint64_t count = ipow(8, d);
  for (std::uint64_t w = 1; w < count; ++w)
    s.pieces.push_back(Piece{excluded + Word::from_index(w, d, 8), Template::U1, d1});
  s.pieces.push_back(Piece{Word::repeat(0, n_k - 1), Template::U2, 0.0});
  Piece& tail = s.pieces.back();

  int failing = 0;
  if (!upper_bound_holds(s, 1, cap, &failing))
    throw NumericError("u1 copies alone break the upper bound at level " + std::to_string(failing));
  const double limit = 1.0 / (static_cast<double>(k) * k);
  double d2 = std::min(limit, prev.delta2s.empty() ? limit : prev.delta2s.back());
  int halvings = 0;
  if (d2 >= limit) d2 /= 2, ++halvings;
  tail.scale = d2;
  while (!upper_bound_holds(s, 1, cap, &failing)) {
    d2 /= 2;
    ++halvings;
    if (d2 < 1e-150) throw NumericError("delta2 scan exhausted precision at level " + std::to_string(failing));
    tail.scale = d2;
  }
  rec.delta2 = d2;
  rec.delta2_halvings = halvings;
  rec.restricted_energy = ledger_restricted(s, n_k, n_k - 1);

  // Sup-norm change on the finest computed level.
  const auto before = materialize(prev, cap);
  const auto after = materialize(s, cap);
  for (std::size_t i = 0; i < before.values.size(); ++i)
    rec.sup_delta = std::max(rec.sup_delta, std::abs(after.values[i] - before.values[i]));

  s.step = k;
  s.thresholds.push_back(n_k);
  s.delta1s.push_back(d1);
  s.delta2s.push_back(d2);
  s.records.push_back(rec);
  return s;
}

struct GlueVerification {
  std::vector<int> levels;
  std::vector<double> ledger;
  std::vector<double> materialized;
  std::vector<double> bound;
  /// Per threshold n_i: materialized energy off 0^{n_i - 1} at level n_i and its target.
  std::vector<double> restricted;
  std::vector<double> restricted_target;
  double max_mismatch = 0.0;
  double max_ledger_gap = 0.0;
  bool upper_ok = true;
  bool lower_ok = true;
};

/// Recomputes every energy from the materialized assembly.
inline GlueVerification verify(const GlueState& s) {
  GlueVerification v;
  for (int n = 1; n <= s.cap(); ++n) {
    double mm = 0.0;
    const auto u = materialize(s, n, &mm);
    const auto& g = s.templates->graphs[static_cast<std::size_t>(n)];
    const double e = raw_energy(g, u);
    v.levels.push_back(n);
    v.ledger.push_back(ledger_energy(s, n));
    v.materialized.push_back(e);
    v.bound.push_back(s.bound(n));
    v.max_mismatch = std::max(v.max_mismatch, mm);
    v.max_ledger_gap = std::max(v.max_ledger_gap, std::abs(e - v.ledger.back()) / std::max(e, 1e-300));
    if (!(e < s.bound(n))) v.upper_ok = false;
  }
  for (int nk : s.thresholds) {
    const auto u = materialize(s, nk);
    const auto& g = s.templates->graphs[static_cast<std::size_t>(nk)];
    const double r = restricted_energy(g, u, complement_of_zero_cell(nk - 1, nk, 8));
    v.restricted.push_back(r);
    v.restricted_target.push_back(s.target(nk));
    if (!(r >= s.target(nk))) v.lower_ok = false;
  }
  return v;
}

/// Seed plus `steps` gluing steps.
inline GlueState run_glue(int steps, int cap, double rho, std::optional<double> C = std::nullopt) {
  if (steps < 0) throw ArgumentError("steps must be nonnegative");
  auto s = glue_seed(GlueTemplates::make(cap, rho), C);
  for (int k = 0; k < steps; ++k) s = glue_step(s);
  return s;
}

}  // namespace fraclab::sc
