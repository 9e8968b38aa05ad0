#pragma once

// Gamma-type integrals, two-sided bounds for the subordinated jump kernel
// under stable and sub-Gaussian heat kernel envelopes, and the indicator
// scaling probe on carpet graphs.

#include <fraclab/error.hpp>
#include <fraclab/prefractal.hpp>
#include <fraclab/quadrature.hpp>

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace fraclab::kernels {

namespace detail {

inline void check_gamma_args(double a, double b, double c) {
  if (!(a > 1.0)) throw ArgumentError("gamma integral needs a > 1");
  if (!(b > 0.0)) throw ArgumentError("gamma integral needs b > 0");
  if (!(c > 0.0)) throw ArgumentError("gamma integral needs c > 0");
}

}  // namespace detail

/// int_0^inf t^{-a} exp(-c / t^b) dt = Gamma((a-1)/b) / (b c^{(a-1)/b}).
inline double gamma_integral_closed(double a, double b, double c) {
  detail::check_gamma_args(a, b, c);
  const double s = (a - 1.0) / b;
  return std::tgamma(s) / (b * std::pow(c, s));
}

/// int_0^d t^{-a} exp(-c / t^b) dt via the upper incomplete Gamma function.
inline double gamma_integral_truncated(double a, double b, double c, double d) {
  detail::check_gamma_args(a, b, c);
  if (!(d > 0.0)) throw ArgumentError("gamma integral needs d > 0");
  const double s = (a - 1.0) / b;
  return boost::math::tgamma(s, c / std::pow(d, b)) / (b * std::pow(c, s));
}

/// The same integrals by adaptive quadrature on t = e^x.
inline double gamma_integral_quadrature(double a, double b, double c,
                                        double d = std::numeric_limits<double>::infinity(),
                                        const quad::Options& opt = {1e-12, 0.0, 4000}) {
  detail::check_gamma_args(a, b, c);
  auto h = [=](double x) { return std::exp((1.0 - a) * x - c * std::exp(-b * x)); };
  quad::LineSpec spec;
  spec.split = std::log(c) / b;
  spec.head_rate = b;
  spec.tail_rate = a - 1.0;
  if (std::isfinite(d)) spec.hi = std::log(d);
  return quad::integrate_line(h, spec, opt).value;
}

enum class Profile { Stable, SubGaussian };

inline const char* to_string(Profile p) { return p == Profile::Stable ? "stable" : "subgaussian"; }

inline Profile parse_profile(std::string_view s) {
  if (s == "stable") return Profile::Stable;
  if (s == "subgaussian") return Profile::SubGaussian;
  throw ArgumentError("unknown profile '" + std::string(s) + "' (expected stable or subgaussian)");
}

/// Heat kernel envelopes C1 t^{-alpha/beta0} Phi(C2 r / t^{1/beta0}) (lower)
/// and C3 t^{-alpha/beta0} Phi(C4 r / t^{1/beta0}) (upper).
struct KernelBoundParams {
  double alpha = 1.0;
  double beta0 = 2.0;
  double delta = 0.5;
  double C1 = 1.0, C2 = 1.0, C3 = 1.0, C4 = 1.0;
  /// Exponent constant c in the sub-Gaussian Phi(s) = exp(-c s^{beta0/(beta0-1)}).
  double c = 1.0;
  double diam = std::numeric_limits<double>::infinity();
  Profile profile = Profile::Stable;

  void validate() const {
    if (!(alpha > 0.0)) throw ArgumentError("alpha must be positive");
    if (!(beta0 > 0.0)) throw ArgumentError("beta0 must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("delta must lie in (0, 1)");
    if (!(C1 > 0 && C2 > 0 && C3 > 0 && C4 > 0 && c > 0)) throw ArgumentError("kernel constants must be positive");
    if (C1 > C3 || C2 < C4) throw ArgumentError("lower envelope must lie below the upper one: need C1 <= C3, C2 >= C4");
    if (!(diam > 0.0)) throw ArgumentError("diam must be positive");
    if (profile == Profile::SubGaussian && !(beta0 > 1.0))
      throw ArgumentError("sub-Gaussian profile needs beta0 > 1");
  }

  double phi(double s) const {
    if (profile == Profile::Stable) return std::pow(1.0 + s, -(alpha + beta0));
    return std::exp(-c * std::pow(s, beta0 / (beta0 - 1.0)));
  }
};

namespace detail {

/// (delta/Gamma(1-delta)) [int_0^T t^{-1-delta} C t^{-alpha/beta0} Phi(C' r t^{-1/beta0}) dt + tail].
inline double envelope_integral(double r, const KernelBoundParams& p, double C, double Cp, const quad::Options& opt) {
  const double a = p.alpha, b = p.beta0, d = p.delta;
  auto h = [&](double x) {
    const double s = Cp * r * std::exp(-x / b);
    return C * std::exp(-(d + a / b) * x) * p.phi(s);
  };
  quad::LineSpec spec;
  spec.split = b * std::log(Cp * r);
  spec.head_rate = 1.0 - d;
  spec.tail_rate = d + a / b;
  double tail = 0.0;
  if (std::isfinite(p.diam)) {
    spec.hi = b * std::log(p.diam);
    tail = C * std::pow(p.diam, -a) * std::pow(p.diam, -d * b) / d;
  }
  const double body = quad::integrate_line(h, spec, opt).value;
  return d / std::tgamma(1.0 - d) * (body + tail);
}

}  // namespace detail

struct JBounds {
  double lower;
  double upper;
};

inline JBounds j_delta_bounds(double r, const KernelBoundParams& p, const quad::Options& opt = {1e-12, 0.0, 4000}) {
  p.validate();
  if (!(r > 0.0 && r < p.diam)) throw ArgumentError("r must lie in (0, diam)");
  return {detail::envelope_integral(r, p, p.C1, p.C2, opt), detail::envelope_integral(r, p, p.C3, p.C4, opt)};
}

/// int_0^inf t^{-1-delta} min(t^{-alpha/beta0}, t r^{-(alpha+beta0)}) dt in closed form.
inline double stable_min_envelope_closed(double r, double alpha, double beta0, double delta) {
  return (1.0 / (1.0 - delta) + beta0 / (alpha + delta * beta0)) * std::pow(r, -(alpha + delta * beta0));
}

inline double stable_min_envelope_quadrature(double r, double alpha, double beta0, double delta,
                                             const quad::Options& opt = {1e-12, 0.0, 4000}) {
  const double kink = beta0 * std::log(r);
  auto h = [=](double x) {
    // t^{-1-delta} dt = e^{-delta x} dx
    const double t_part = std::min(std::exp(-alpha / beta0 * x), std::exp(x) * std::pow(r, -(alpha + beta0)));
    return std::exp(-delta * x) * t_part;
  };
  quad::LineSpec lo;
  lo.hi = kink;
  lo.split = kink;
  lo.head_rate = 1.0 - delta;
  quad::LineSpec hi;
  hi.lo = kink;
  hi.split = kink;
  hi.tail_rate = delta + alpha / beta0;
  return quad::integrate_line(h, lo, opt).value + quad::integrate_line(h, hi, opt).value;
}

struct Sandwich {
  double lower, middle, upper;
};

/// (2^{-(alpha+beta0)} m, t^{-alpha/beta0} (1 + r t^{-1/beta0})^{-(alpha+beta0)}, m)
/// with m = min(t^{-alpha/beta0}, t r^{-(alpha+beta0)}).
inline Sandwich stable_sandwich(double t, double r, double alpha, double beta0) {
  const double p = alpha + beta0;
  const double m = std::min(std::pow(t, -alpha / beta0), t * std::pow(r, -p));
  const double mid = std::pow(t, -alpha / beta0) * std::pow(1.0 + r * std::pow(t, -1.0 / beta0), -p);
  return {std::pow(2.0, -p) * m, mid, m};
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("slope fit needs at least two points");
  double mx = 0, my = 0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw ArgumentError("slope fit needs positive data");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw ArgumentError("slope fit needs distinct x values");
  return sxy / sxx;
}

// ---------------------------------------------------------------------------
// Indicator probe

struct ProbeResult {
  std::vector<double> radii;  // ascending
  std::vector<double> D;
  double slope = std::numeric_limits<double>::quiet_NaN();
};

/// D(r) = r^{-(alpha+beta0)} |V|^{-2} sum_{x,y: |x-y|<r} (u(x) - u(y))^2 for
/// u the indicator of the open ball B(x0, r); the slope of log D against log r.
inline ProbeResult indicator_scaling_probe(const PrefractalGraph& g, std::uint32_t x0, std::vector<double> radii,
                                           double alpha, double beta0) {
  if (g.kind != Kind::SC) throw UnsupportedKindError("indicator probe runs on carpet graphs");
  if (g.level < 4) throw ArgumentError("indicator probe needs level >= 4");
  if (x0 >= g.vertex_count()) throw ArgumentError("x0 is not a vertex");
  if (radii.empty()) throw ArgumentError("no radii given");
  std::sort(radii.begin(), radii.end());
  const double den = static_cast<double>(g.denominator);
  const double cx = g.coords[x0][0] / den, cy = g.coords[x0][1] / den;
  auto dist2 = [&](std::size_t i, double px, double py) {
    const double dx = g.coords[i][0] / den - px, dy = g.coords[i][1] / den - py;
    return dx * dx + dy * dy;
  };
  double nearest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.vertex_count(); ++i)
    if (i != x0) nearest = std::min(nearest, std::sqrt(dist2(i, cx, cy)));

  ProbeResult out;
  out.radii = radii;
  const double nv = static_cast<double>(g.vertex_count());
  for (double r : radii) {
    if (!(r > 0.0)) throw ArgumentError("radii must be positive");
    if (r <= nearest)
      throw ArgumentError("ball B(x0, " + std::to_string(r) + ") holds no other vertex at level " +
                          std::to_string(g.level) + "; the minimum feasible radius exceeds " + std::to_string(nearest));
    std::vector<std::size_t> inside, ring;
    for (std::size_t i = 0; i < g.vertex_count(); ++i) {
      const double d2 = dist2(i, cx, cy);
      if (d2 < r * r) inside.push_back(i);
      else if (d2 < 4 * r * r) ring.push_back(i);
    }
    // Only pairs straddling the sphere contribute; each is counted twice.
    double count = 0.0;
    for (auto i : inside) {
      const double px = g.coords[i][0] / den, py = g.coords[i][1] / den;
      for (auto j : ring)
        if (dist2(j, px, py) < r * r) count += 1.0;
    }
    out.D.push_back(std::pow(r, -(alpha + beta0)) * 2.0 * count / (nv * nv));
  }
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < out.D.size(); ++i)
    if (out.D[i] > 0.0) xs.push_back(out.radii[i]), ys.push_back(out.D[i]);
  if (xs.size() >= 2) out.slope = loglog_slope(xs, ys);
  return out;
}

}  // namespace fraclab::kernels
