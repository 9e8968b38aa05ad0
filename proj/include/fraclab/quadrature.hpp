#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature, plus an integrator for
// integrands on the real line that decay exponentially at both ends (the
// shape every s = e^x substituted integral in this library has).

#include <fraclab/error.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

namespace fraclab::quad {

struct Options {
  double rel_tol = 1e-11;
  double abs_tol = 0.0;
  int max_subdivisions = 4000;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
};

class QuadratureError : public NumericError {
 public:
  QuadratureError(const std::string& what, double value, double error)
      : NumericError(what), value_(value), error_(error) {}
  double value() const noexcept { return value_; }
  double error_estimate() const noexcept { return error_; }

 private:
  double value_;
  double error_;
};

namespace detail {

inline constexpr std::array<double, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kKronrod = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for nodes 1, 3, 5, 7 of kNodes.
inline constexpr std::array<double, 4> kGauss = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = fc * kKronrod[7];
  double gauss = fc * kGauss[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = h * kNodes[i];
    const double s = f(c - dx) + f(c + dx);
    kronrod += kKronrod[i] * s;
    if (i % 2 == 1) gauss += kGauss[i / 2] * s;
  }
  return {a, b, kronrod * h, std::abs((kronrod - gauss) * h)};
}

}  // namespace detail

/// Adaptive quadrature of f over the finite interval [a, b]. Throws
/// QuadratureError (carrying the achieved estimate) when the subdivision
/// budget is exhausted before the tolerance is met.
template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  if (!(std::isfinite(a) && std::isfinite(b))) throw ArgumentError("quadrature: interval must be finite");
  if (a == b) return {};
  std::priority_queue<detail::Segment> heap;
  auto first = detail::gk15(f, a, b);
  double total = first.value;
  double err = first.error;
  heap.push(first);
  int evals = 15;
  int subdivisions = 0;
  while (err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
    if (subdivisions >= opt.max_subdivisions) {
      std::ostringstream os;
      os << "quadrature budget of " << opt.max_subdivisions << " subdivisions exhausted on [" << a << ", "
         << b << "]; estimate " << total << " +/- " << err;
      throw QuadratureError(os.str(), total, err);
    }
    auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // interval cannot be split further in floating point; accept it
      if (heap.empty()) break;
      continue;
    }
    auto left = detail::gk15(f, worst.a, mid);
    auto right = detail::gk15(f, mid, worst.b);
    evals += 30;
    ++subdivisions;
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum from the heap to remove accumulated cancellation in `total`.
  double value = 0.0;
  double error = 0.0;
  std::vector<detail::Segment> parts;
  parts.reserve(heap.size());
  while (!heap.empty()) {
    parts.push_back(heap.top());
    heap.pop();
  }
  std::sort(parts.begin(), parts.end(), [](const auto& l, const auto& r) { return l.a < r.a; });
  for (const auto& p : parts) {
    value += p.value;
    error += p.error;
  }
  return {value, error, evals};
}

/// Integrand on (lo, hi) with lo possibly -inf and hi possibly +inf. When an
/// end is infinite the integrand must decay like exp(-rate*|x|) there; the
/// integral is extended segment by segment until the remaining exponential
/// tail, closed analytically as h(X)/rate, is negligible.
struct LineSpec {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double split = 0.0;
  double head_rate = 1.0;  // decay rate as x -> -inf
  double tail_rate = 1.0;  // decay rate as x -> +inf
};

template <class F>
Result integrate_line(F&& h, const LineSpec& spec, const Options& opt = {}) {
  if (spec.head_rate <= 0.0 || spec.tail_rate <= 0.0) throw ArgumentError("quadrature: decay rates must be positive");
  const double split = std::clamp(spec.split, std::isfinite(spec.lo) ? spec.lo : spec.split,
                                  std::isfinite(spec.hi) ? spec.hi : spec.split);
  constexpr double kCore = 12.0;
  const double core_lo = std::isfinite(spec.lo) ? std::max(spec.lo, split - kCore) : split - kCore;
  const double core_hi = std::isfinite(spec.hi) ? std::min(spec.hi, split + kCore) : split + kCore;

  Result out;
  auto accumulate = [&](const Result& r) {
    out.value += r.value;
    out.error += r.error;
    out.evaluations += r.evaluations;
  };
  accumulate(integrate(h, core_lo, split, opt));
  accumulate(integrate(h, split, core_hi, opt));

  auto extend = [&](double start, double limit, double rate, int direction) {
    const double width = std::max(4.0, 8.0 / rate);
    double x = start;
    for (int seg = 0; seg < 2000; ++seg) {
      if (std::isfinite(limit) && (direction > 0 ? x >= limit : x <= limit)) return;
      const double closure = std::abs(h(x)) / rate;
      const double scale = std::max(std::abs(out.value), opt.abs_tol);
      if (!std::isfinite(limit) && closure <= 1e-3 * opt.rel_tol * scale) {
        out.value += closure;
        out.error += closure;
        return;
      }
      double next = x + direction * width;
      if (std::isfinite(limit)) next = direction > 0 ? std::min(next, limit) : std::max(next, limit);
      Options seg_opt = opt;
      seg_opt.abs_tol = std::max(opt.abs_tol, 1e-2 * opt.rel_tol * scale);
      accumulate(direction > 0 ? integrate(h, x, next, seg_opt) : integrate(h, next, x, seg_opt));
      x = next;
    }
    throw QuadratureError("quadrature: exponential tail did not decay within the search range", out.value,
                          out.error);
  };
  extend(core_hi, spec.hi, spec.tail_rate, +1);
  extend(core_lo, spec.lo, spec.head_rate, -1);
  return out;
}

// ---------------------------------------------------------------------------
// Vector-valued integrands on a shared adaptive mesh. Errors are measured in
// the max norm relative to the largest component of the running total.

struct VecResult {
  Eigen::ArrayXd value;
  double error = 0.0;
  int evaluations = 0;
};

namespace detail {

struct VecSegment {
  double a, b;
  Eigen::ArrayXd value;
  double error;
  bool operator<(const VecSegment& o) const { return error < o.error; }
};

template <class F>
VecSegment gk15_vec(F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const Eigen::ArrayXd fc = f(c);
  Eigen::ArrayXd k = kKronrod[7] * fc;
  Eigen::ArrayXd g = kGauss[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = h * kNodes[static_cast<std::size_t>(i)];
    const Eigen::ArrayXd s = f(c - dx) + f(c + dx);
    k += kKronrod[static_cast<std::size_t>(i)] * s;
    if (i % 2 == 1) g += kGauss[static_cast<std::size_t>(i / 2)] * s;
  }
  return {a, b, h * k, h * (k - g).abs().maxCoeff()};
}

}  // namespace detail

template <class F>
VecResult integrate_vec(F&& f, double a, double b, const Options& opt = {}) {
  std::priority_queue<detail::VecSegment> heap;
  auto first = detail::gk15_vec(f, a, b);
  Eigen::ArrayXd total = first.value;
  double err = first.error;
  heap.push(std::move(first));
  int evals = 15, subdivisions = 0;
  while (err > std::max(opt.abs_tol, opt.rel_tol * total.abs().maxCoeff())) {
    if (subdivisions >= opt.max_subdivisions) {
      std::ostringstream os;
      os << "vector quadrature budget of " << opt.max_subdivisions << " subdivisions exhausted on [" << a << ", "
         << b << "]; error estimate " << err;
      throw QuadratureError(os.str(), total.abs().maxCoeff(), err);
    }
    auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      if (heap.empty()) break;
      continue;
    }
    auto left = detail::gk15_vec(f, worst.a, mid);
    auto right = detail::gk15_vec(f, mid, worst.b);
    evals += 30;
    ++subdivisions;
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(std::move(left));
    heap.push(std::move(right));
  }
  std::vector<detail::VecSegment> parts;
  while (!heap.empty()) {
    parts.push_back(heap.top());
    heap.pop();
  }
  std::sort(parts.begin(), parts.end(), [](const auto& l, const auto& r) { return l.a < r.a; });
  VecResult out{Eigen::ArrayXd::Zero(total.size()), 0.0, evals};
  for (const auto& p : parts) {
    out.value += p.value;
    out.error += p.error;
  }
  return out;
}

/// Vector analogue of integrate_line for integrands decaying exponentially
/// at both infinite ends; tails are closed with the signed term F(X)/rate.
template <class F>
VecResult integrate_line_vec(F&& h, const LineSpec& spec, const Options& opt = {}) {
  if (spec.head_rate <= 0.0 || spec.tail_rate <= 0.0) throw ArgumentError("quadrature: decay rates must be positive");
  constexpr double kCore = 12.0;
  const double split = spec.split;
  VecResult out = integrate_vec(h, split - kCore, split, opt);
  auto add = [&](const VecResult& r) {
    out.value += r.value;
    out.error += r.error;
    out.evaluations += r.evaluations;
  };
  add(integrate_vec(h, split, split + kCore, opt));
  auto extend = [&](double start, double rate, int direction) {
    const double width = std::max(4.0, 8.0 / rate);
    double x = start;
    for (int seg = 0; seg < 2000; ++seg) {
      const Eigen::ArrayXd closure = h(x) / rate;
      const double scale = std::max(out.value.abs().maxCoeff(), opt.abs_tol);
      if (closure.abs().maxCoeff() <= 1e-3 * opt.rel_tol * scale) {
        out.value += closure;
        out.error += closure.abs().maxCoeff();
        return;
      }
      const double next = x + direction * width;
      Options seg_opt = opt;
      seg_opt.abs_tol = std::max(opt.abs_tol, 1e-2 * opt.rel_tol * scale);
      if (direction > 0) {
        add(integrate_vec(h, x, next, seg_opt));
      } else {
        VecResult r = integrate_vec(h, next, x, seg_opt);
        add(r);
      }
      x = next;
    }
    throw QuadratureError("quadrature: exponential tail did not decay within the search range",
                          out.value.abs().maxCoeff(), out.error);
  };
  extend(split + kCore, spec.tail_rate, +1);
  extend(split - kCore, spec.head_rate, -1);
  return out;
}

}  // namespace fraclab::quad
