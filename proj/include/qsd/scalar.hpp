#ifndef QSD_SCALAR_HPP
#define QSD_SCALAR_HPP

#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>

#include "qsd/errors.hpp"
#include "qsd/rational.hpp"

namespace qsd {

// All numeric code in this library is generic over a Scalar type S with
// field operations.  Two backends are provided: exact rationals (the
// reference) and binary64 floats.  scalar_traits adapts the handful of
// places where their behaviour differs.
template <class S>
struct scalar_traits;

template <>
struct scalar_traits<Rational> {
  static constexpr bool exact = true;
  static const char* name() { return "rational"; }
  static Rational zero() { return Rational(0); }
  static Rational one() { return Rational(1); }
  static Rational from_long(long n) { return Rational(n); }
  static Rational from_fraction(long num, long den) { return Rational(num, den); }
  static Rational parse(std::string_view s) { return Rational::parse(s); }
  static std::string str(const Rational& r) { return r.str(); }
  static double to_double(const Rational& r) { return r.to_double(); }
  static bool is_zero(const Rational& r) { return r.sign() == 0; }

  // e^{rho n}: only rho == 0 keeps the value rational.
  static Rational exp_weight(const Rational& rho, long n) {
    if (rho.sign() != 0)
      throw BackendError("rational backend requires rho == 0 (e^rho is irrational otherwise)");
    (void)n;
    return Rational(1);
  }

  // Exact arithmetic cannot produce NaN/Inf; nothing to enforce.
  static void check(const Rational&) {}
};

template <>
struct scalar_traits<double> {
  static constexpr bool exact = false;
  static const char* name() { return "float"; }
  static double zero() { return 0.0; }
  static double one() { return 1.0; }
  static double from_long(long n) { return static_cast<double>(n); }
  static double from_fraction(long num, long den) {
    return static_cast<double>(num) / static_cast<double>(den);
  }
  static double parse(std::string_view s) {
    // Model files carry rationals; reuse the exact parser for "num/den" forms.
    return Rational::parse(s).to_double();
  }
  static std::string str(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }
  static double to_double(double v) { return v; }
  static bool is_zero(double v) { return v == 0.0; }

  static double exp_weight(double rho, long n) { return std::exp(rho * static_cast<double>(n)); }

  static void check(double v) {
    if (!std::isfinite(v)) throw NumericError("non-finite float value");
  }
};

template <class S>
S abs_value(const S& v) {
  if constexpr (scalar_traits<S>::exact) {
    return abs(v);
  } else {
    return std::fabs(v);
  }
}

// n^r with 0^0 == 1, as a scalar.
template <class S>
S power_weight(long n, int r) {
  S acc = scalar_traits<S>::one();
  const S base = scalar_traits<S>::from_long(n);
  for (int t = 0; t < r; ++t) acc *= base;
  return acc;
}

inline long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long acc = 1;
  for (int t = 1; t <= k; ++t) acc = acc * (n - k + t) / t;
  return acc;
}

inline long long factorial(int n) {
  long long acc = 1;
  for (int t = 2; t <= n; ++t) acc *= t;
  return acc;
}

}  // namespace qsd

#endif  // QSD_SCALAR_HPP
