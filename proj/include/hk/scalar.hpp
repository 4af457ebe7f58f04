#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "hk/bigfloat.hpp"
#include "hk/rational.hpp"

namespace hk {

enum class Backend { exact, f64, bigfloat };

inline std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::exact: return "exact";
    case Backend::f64: return "f64";
    case Backend::bigfloat: return "bigfloat";
  }
  throw std::logic_error("backend_name: bad enum");
}

inline Backend backend_from_name(std::string_view s) {
  if (s == "exact") return Backend::exact;
  if (s == "f64") return Backend::f64;
  if (s == "bigfloat") return Backend::bigfloat;
  throw std::invalid_argument("unknown backend \"" + std::string(s) + "\"");
}

// How arithmetic behaves throughout a computation: which scalar backend, how
// wide the bigfloat mantissa is, and how much slack approximate comparisons
// get.  An unset tolerance means the backend default: 0 for exact, 1e-12 for
// f64, 2^(-bits/2) for bigfloat.
struct PrecisionPolicy {
  Backend backend = Backend::f64;
  long mantissa_bits = 256;           // bigfloat only
  std::optional<double> tolerance;    // resolved per backend when unset

  void validate() const {
    if (backend == Backend::bigfloat && mantissa_bits < 64)
      throw std::invalid_argument("PrecisionPolicy: bigfloat needs at least 64 mantissa bits");
    if (tolerance) {
      if (*tolerance < 0 || !std::isfinite(*tolerance))
        throw std::invalid_argument("PrecisionPolicy: tolerance must be finite and nonnegative");
      if (backend == Backend::exact && *tolerance != 0)
        throw std::invalid_argument("PrecisionPolicy: exact backend requires zero tolerance");
      if (backend != Backend::exact && *tolerance == 0)
        throw std::invalid_argument("PrecisionPolicy: floating backends need a positive tolerance");
    }
  }

  static PrecisionPolicy exact() { return {Backend::exact, 256, 0.0}; }
  static PrecisionPolicy f64(double tol = 1e-12) { return {Backend::f64, 256, tol}; }
  static PrecisionPolicy bigfloat(long bits = 256) { return {Backend::bigfloat, bits, std::nullopt}; }
};

template <class S>
struct scalar_traits;

template <>
struct scalar_traits<Rational> {
  static constexpr Backend backend = Backend::exact;
  static constexpr bool exact = true;
  static Rational from_int(long n) { return Rational(n); }
  static Rational from_ratio(long num, long den) { return Rational(num, den); }
  static Rational from_double(double x) { return Rational::from_double(x); }
  static Rational parse(std::string_view s) { return Rational::parse(s); }
  static double to_double(const Rational& v) { return v.to_double(); }
  static Rational eps(const Rational&) { return Rational(0); }
  static std::string repr(const Rational& v) { return v.fraction_string(); }
  static std::string decimal(const Rational& v, int digits = 17) { return v.decimal_string(digits); }
};

template <>
struct scalar_traits<double> {
  static constexpr Backend backend = Backend::f64;
  static constexpr bool exact = false;
  static double from_int(long n) { return static_cast<double>(n); }
  static double from_ratio(long num, long den) {
    if (den == 0) throw std::invalid_argument("from_ratio: zero denominator");
    return static_cast<double>(num) / static_cast<double>(den);
  }
  static double from_double(double x) { return x; }
  static double parse(std::string_view s) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
      throw std::invalid_argument("cannot parse double \"" + std::string(s) + "\"");
    return v;
  }
  static double to_double(double v) { return v; }
  static double eps(const double&) { return std::numeric_limits<double>::epsilon(); }
  static std::string repr(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
  }
  static std::string decimal(double v, int digits = 17) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
  }
};

template <>
struct scalar_traits<BigFloat> {
  static constexpr Backend backend = Backend::bigfloat;
  static constexpr bool exact = false;
  static BigFloat from_int(long n) { return BigFloat(static_cast<double>(n)); }
  static BigFloat from_ratio(long num, long den) {
    return BigFloat::from_rational(Rational(num, den));
  }
  static BigFloat from_double(double x) { return BigFloat(x); }
  static BigFloat parse(std::string_view s) { return BigFloat::from_string(std::string(s)); }
  static double to_double(const BigFloat& v) { return v.to_double(); }
  static BigFloat eps(const BigFloat& v) { return BigFloat::pow2(1 - v.precision()); }
  static std::string repr(const BigFloat& v) { return v.decimal_string(); }
  static std::string decimal(const BigFloat& v, int digits = 17) { return v.decimal_string(digits); }
};

template <class S>
S abs_of(const S& x) {
  return x < scalar_traits<S>::from_int(0) ? -x : x;
}

// Comparison tolerance implied by a policy, in the policy's own scalar type.
template <class S>
S resolved_tolerance(const PrecisionPolicy& pol) {
  pol.validate();
  if (pol.tolerance) return scalar_traits<S>::from_double(*pol.tolerance);
  switch (pol.backend) {
    case Backend::exact: return scalar_traits<S>::from_int(0);
    case Backend::f64: return scalar_traits<S>::from_double(1e-12);
    case Backend::bigfloat: {
      if constexpr (std::is_same_v<S, BigFloat>)
        return BigFloat::pow2(-pol.mantissa_bits / 2, pol.mantissa_bits);
      else
        return scalar_traits<S>::from_double(std::ldexp(1.0, static_cast<int>(-pol.mantissa_bits / 2)));
    }
  }
  throw std::logic_error("resolved_tolerance: bad backend");
}

template <class S>
S mean(std::span<const S> xs) {
  if (xs.empty()) throw std::invalid_argument("mean: empty set");
  S acc = scalar_traits<S>::from_int(0);
  for (const S& x : xs) acc += x;
  return acc / scalar_traits<S>::from_int(static_cast<long>(xs.size()));
}

template <class S>
S mean(const std::vector<S>& xs) {
  return mean(std::span<const S>(xs));
}

// Equality up to the policy tolerance; exact equality in the exact backend.
// The scalar type and the policy backend must agree.
template <class S>
bool approx_eq(const S& a, const S& b, const PrecisionPolicy& pol) {
  pol.validate();
  if (scalar_traits<S>::backend != pol.backend)
    throw std::invalid_argument("approx_eq: scalar type does not match policy backend");
  if constexpr (scalar_traits<S>::exact) {
    return a == b;
  } else {
    return abs_of<S>(a - b) <= resolved_tolerance<S>(pol);
  }
}

}  // namespace hk
