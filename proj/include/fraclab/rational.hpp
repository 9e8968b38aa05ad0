#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>

namespace fraclab {

/// Arbitrary-precision rational used by the exact arithmetic backend.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline Rational make_rational(std::int64_t num, std::int64_t den) { return Rational(num, den); }

inline double to_double(const Rational& q) { return q.convert_to<double>(); }
inline double to_double(double x) { return x; }

/// Exact rational value of a finite double.
inline Rational exact_rational(double x) { return Rational(x); }

}  // namespace fraclab
