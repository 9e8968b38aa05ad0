#pragma once

// Word spaces, contraction maps and level-n pre-fractal graphs of the
// Sierpinski gasket (SG) and Sierpinski carpet (SC).
//
// Coordinates are exact: a level-n vertex is a pair of integer numerators
// over the common denominator 2*r^n (r = 2 for SG, 3 for SC). The SG is
// stored in the affine frame p0 = (0,0), p1 = (1,0), p2 = (1/2,1), i.e. the
// y axis is rescaled by 2/sqrt(3); the contraction maps commute with that
// rescaling, so cell structure and energies are unaffected.

#include <fraclab/error.hpp>
#include <fraclab/rational.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fraclab {

enum class Kind { SG, SC };

inline const char* to_string(Kind k) { return k == Kind::SG ? "sg" : "sc"; }

inline Kind parse_kind(std::string_view s) {
  if (s == "sg" || s == "SG") return Kind::SG;
  if (s == "sc" || s == "SC") return Kind::SC;
  throw ArgumentError("unknown space kind '" + std::string(s) + "' (expected sg or sc)");
}

struct SpaceKind {
  Kind tag;
  int alphabet_size;  // 3 or 8
  int scale;          // inverse contraction ratio: 2 or 3
  double alpha;       // Hausdorff dimension

  static SpaceKind of(Kind k) {
    if (k == Kind::SG) return {Kind::SG, 3, 2, std::log(3.0) / std::log(2.0)};
    return {Kind::SC, 8, 3, std::log(8.0) / std::log(3.0)};
  }
  Rational contraction_ratio() const { return Rational(1, scale); }
  int level_cap() const { return tag == Kind::SG ? 12 : 7; }
};

/// V_0 as numerators over 2, in the order p_0, p_1, ...
inline std::span<const std::array<std::int64_t, 2>> base_points(Kind k) {
  static constexpr std::array<std::array<std::int64_t, 2>, 3> sg = {{{0, 0}, {2, 0}, {1, 2}}};
  static constexpr std::array<std::array<std::int64_t, 2>, 8> sc = {
      {{0, 0}, {1, 0}, {2, 0}, {2, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}}};
  if (k == Kind::SG) return sg;
  return sc;
}

/// Local vertex pairs (indices into V_0) joined inside every cell: all pairs
/// for SG, pairs at distance 1/2 (scaled) for SC.
inline const std::vector<std::pair<int, int>>& local_edges(Kind k) {
  auto make = [](Kind kind) {
    std::vector<std::pair<int, int>> out;
    auto pts = base_points(kind);
    for (int i = 0; i < static_cast<int>(pts.size()); ++i)
      for (int j = i + 1; j < static_cast<int>(pts.size()); ++j) {
        const auto dx = pts[i][0] - pts[j][0];
        const auto dy = pts[i][1] - pts[j][1];
        if (kind == Kind::SG || dx * dx + dy * dy == 1) out.emplace_back(i, j);
      }
    return out;
  };
  static const auto sg = make(Kind::SG);
  static const auto sc = make(Kind::SC);
  return k == Kind::SG ? sg : sc;
}

// ---------------------------------------------------------------------------
// Words

struct Word {
  std::vector<int> letters;

  Word() = default;
  explicit Word(std::vector<int> l) : letters(std::move(l)) {}

  int level() const { return static_cast<int>(letters.size()); }
  bool empty() const { return letters.empty(); }

  static Word repeat(int letter, int n) { return Word(std::vector<int>(static_cast<std::size_t>(n), letter)); }

  /// Cell index in lexicographic order (first letter most significant).
  std::uint64_t index(int alphabet) const {
    std::uint64_t idx = 0;
    for (int l : letters) idx = idx * static_cast<std::uint64_t>(alphabet) + static_cast<std::uint64_t>(l);
    return idx;
  }
  static Word from_index(std::uint64_t idx, int level, int alphabet) {
    std::vector<int> l(static_cast<std::size_t>(level));
    for (int i = level - 1; i >= 0; --i) {
      l[static_cast<std::size_t>(i)] = static_cast<int>(idx % static_cast<std::uint64_t>(alphabet));
      idx /= static_cast<std::uint64_t>(alphabet);
    }
    return Word(std::move(l));
  }

  bool has_prefix(const Word& p) const {
    return p.letters.size() <= letters.size() && std::equal(p.letters.begin(), p.letters.end(), letters.begin());
  }

  std::string to_string() const {
    std::string s;
    for (int l : letters) s += static_cast<char>('0' + l);
    return s;
  }
  static Word parse(std::string_view s, int alphabet) {
    std::vector<int> l;
    for (char c : s) {
      const int d = c - '0';
      if (d < 0 || d >= alphabet) throw ArgumentError("invalid letter in word '" + std::string(s) + "'");
      l.push_back(d);
    }
    return Word(std::move(l));
  }

  friend Word operator+(const Word& a, const Word& b) {
    Word w = a;
    w.letters.insert(w.letters.end(), b.letters.begin(), b.letters.end());
    return w;
  }
  friend bool operator==(const Word&, const Word&) = default;
  friend auto operator<=>(const Word&, const Word&) = default;
};

inline std::uint64_t ipow(std::uint64_t base, int e) {
  std::uint64_t r = 1;
  while (e-- > 0) r *= base;
  return r;
}

// ---------------------------------------------------------------------------
// Points

/// Exact point (x_num/den, y_num/den).
struct LatticePoint {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t den = 1;

  LatticePoint reduced() const {
    const auto g = std::gcd(std::gcd(x, y), den);
    return g > 1 ? LatticePoint{x / g, y / g, den / g} : *this;
  }
  double xd() const { return static_cast<double>(x) / static_cast<double>(den); }
  double yd() const { return static_cast<double>(y) / static_cast<double>(den); }
  Rational xq() const { return Rational(x, den); }
  Rational yq() const { return Rational(y, den); }

  friend bool operator==(const LatticePoint& a, const LatticePoint& b) {
    return static_cast<__int128>(a.x) * b.den == static_cast<__int128>(b.x) * a.den &&
           static_cast<__int128>(a.y) * b.den == static_cast<__int128>(b.y) * a.den;
  }
};

/// f_w(p) = f_{w_1} o ... o f_{w_n}(p), exact.
inline LatticePoint apply_word(Kind kind, const Word& w, LatticePoint p) {
  const auto sk = SpaceKind::of(kind);
  const auto base = base_points(kind);
  for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it) {
    if (*it < 0 || *it >= sk.alphabet_size) throw ArgumentError("word letter out of range");
    // f_i(x) = x/r + (r-1)/r * p_i, with p_i = P/2: new den = 2*r*den.
    const auto& P = base[static_cast<std::size_t>(*it)];
    const std::int64_t r = sk.scale;
    p = LatticePoint{2 * p.x + (r - 1) * P[0] * p.den, 2 * p.y + (r - 1) * P[1] * p.den, 2 * r * p.den}.reduced();
  }
  return p;
}

inline LatticePoint base_point(Kind kind, int i) {
  const auto& P = base_points(kind)[static_cast<std::size_t>(i)];
  return LatticePoint{P[0], P[1], 2}.reduced();
}

// ---------------------------------------------------------------------------
// Graphs

struct Edge {
  std::uint32_t a;
  std::uint32_t b;
  std::uint32_t cell;
};

struct PrefractalGraph {
  Kind kind = Kind::SG;
  int level = 0;
  std::int64_t denominator = 2;
  /// Vertex numerators, sorted lexicographically by (x, y).
  std::vector<std::array<std::int64_t, 2>> coords;
  /// Flat cell -> vertex table; cell c owns entries [c*k, (c+1)*k), listed
  /// as the images of p_0, ..., p_{k-1}.
  std::vector<std::uint32_t> cell_table;
  std::vector<Edge> edges;

  SpaceKind space() const { return SpaceKind::of(kind); }
  std::size_t vertex_count() const { return coords.size(); }
  std::size_t cell_count() const { return cell_table.size() / static_cast<std::size_t>(space().alphabet_size); }

  std::span<const std::uint32_t> cell(std::size_t c) const {
    const auto k = static_cast<std::size_t>(space().alphabet_size);
    return {cell_table.data() + c * k, k};
  }
  Word cell_word(std::size_t c) const { return Word::from_index(c, level, space().alphabet_size); }

  LatticePoint vertex(std::size_t i) const { return {coords[i][0], coords[i][1], denominator}; }

  /// Index of an exact point, if it is a vertex.
  std::optional<std::uint32_t> find(const LatticePoint& p) const {
    const LatticePoint q = p.reduced();
    if (denominator % q.den != 0) return std::nullopt;
    const auto m = denominator / q.den;
    const std::array<std::int64_t, 2> key{q.x * m, q.y * m};
    auto it = std::lower_bound(coords.begin(), coords.end(), key);
    if (it == coords.end() || *it != key) return std::nullopt;
    return static_cast<std::uint32_t>(it - coords.begin());
  }
};

/// Builds the level-n graph. Vertices are deduplicated by exact coordinates.
inline PrefractalGraph build_graph(Kind kind, int n) {
  const auto sk = SpaceKind::of(kind);
  if (n < 0) throw ArgumentError("level must be nonnegative");
  if (n > sk.level_cap())
    throw CapError("level " + std::to_string(n) + " exceeds the " + to_string(kind) + " level cap of " +
                       std::to_string(sk.level_cap()),
                   sk.level_cap());

  const std::int64_t r = sk.scale;
  const auto k = static_cast<std::size_t>(sk.alphabet_size);
  const auto base = base_points(kind);

  // Cell offsets (numerators over 2*r^n), built letter by letter.
  std::vector<std::array<std::int64_t, 2>> offsets{{0, 0}};
  for (int lvl = 0; lvl < n; ++lvl) {
    std::vector<std::array<std::int64_t, 2>> next(offsets.size() * k);
    for (std::size_t c = 0; c < offsets.size(); ++c)
      for (std::size_t i = 0; i < k; ++i)
        next[c * k + i] = {r * offsets[c][0] + (r - 1) * base[i][0], r * offsets[c][1] + (r - 1) * base[i][1]};
    offsets.swap(next);
  }

  PrefractalGraph g;
  g.kind = kind;
  g.level = n;
  g.denominator = 2 * static_cast<std::int64_t>(ipow(static_cast<std::uint64_t>(r), n));

  std::vector<std::array<std::int64_t, 2>> pts;
  pts.reserve(offsets.size() * k);
  for (const auto& o : offsets)
    for (std::size_t i = 0; i < k; ++i) pts.push_back({o[0] + base[i][0], o[1] + base[i][1]});

  g.coords = pts;
  std::sort(g.coords.begin(), g.coords.end());
  g.coords.erase(std::unique(g.coords.begin(), g.coords.end()), g.coords.end());

  g.cell_table.resize(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    g.cell_table[i] = static_cast<std::uint32_t>(std::lower_bound(g.coords.begin(), g.coords.end(), pts[i]) -
                                                 g.coords.begin());

  const auto& pairs = local_edges(kind);
  g.edges.reserve(offsets.size() * pairs.size());
  for (std::size_t c = 0; c < offsets.size(); ++c)
    for (auto [i, j] : pairs)
      g.edges.push_back({g.cell_table[c * k + static_cast<std::size_t>(i)],
                         g.cell_table[c * k + static_cast<std::size_t>(j)], static_cast<std::uint32_t>(c)});
  return g;
}

/// Closed form vertex count of the SG level-n graph.
inline std::uint64_t sg_vertex_count(int n) { return (ipow(3, n + 1) + 3) / 2; }

// ---------------------------------------------------------------------------
// Carpet boundary curves

enum class BoundaryName { L, S };

struct BoundarySet {
  BoundaryName name;

  /// Exact membership of x/den, y/den.
  bool contains(const LatticePoint& p) const {
    const auto x = p.x, y = p.y, d = p.den;
    if (name == BoundaryName::L) return x == 0 || x == d || y == 0 || y == d;
    auto on_third = [d](std::int64_t v) { return 3 * v == d || 3 * v == 2 * d; };
    auto in_middle = [d](std::int64_t v) { return 3 * v >= d && 3 * v <= 2 * d; };
    return (on_third(x) && in_middle(y)) || (on_third(y) && in_middle(x));
  }
};

inline std::vector<std::uint32_t> boundary_vertices(const PrefractalGraph& g, BoundarySet b) {
  if (g.kind != Kind::SC) throw UnsupportedKindError("boundary sets L and S are defined on the carpet only");
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < g.vertex_count(); ++i)
    if (b.contains(g.vertex(i))) out.push_back(static_cast<std::uint32_t>(i));
  return out;
}

/// Maps every vertex of `coarse` to its index in `fine` (V_m is a subset of
/// V_n for m <= n).
inline std::vector<std::uint32_t> embed_vertices(const PrefractalGraph& coarse, const PrefractalGraph& fine) {
  if (coarse.kind != fine.kind || coarse.level > fine.level)
    throw ArgumentError("embed_vertices: coarse graph must be a lower level of the same space");
  std::vector<std::uint32_t> out(coarse.vertex_count());
  for (std::size_t i = 0; i < coarse.vertex_count(); ++i) {
    auto j = fine.find(coarse.vertex(i));
    if (!j) throw NumericError("nested refinement violated: vertex missing from finer level");
    out[i] = *j;
  }
  return out;
}

}  // namespace fraclab
