#pragma once

#include <mpfr.h>

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <string>

#include "hk/rational.hpp"

namespace hk {

// Floating-point value with a configurable mantissa width, backed by MPFR.
// Every value carries its own precision; binary operations round to the wider
// operand's precision, round-to-nearest-even.  No NaNs or infinities are ever
// produced by the operations used here; comparisons are total.
class BigFloat {
public:
  static long default_precision() { return default_prec_; }
  static void set_default_precision(long bits) {
    if (bits < MPFR_PREC_MIN || bits > 1'000'000)
      throw std::invalid_argument("BigFloat: unusable precision");
    default_prec_ = bits;
  }

  BigFloat() { mpfr_init2(v_, default_prec_); mpfr_set_zero(v_, 1); }
  explicit BigFloat(double x, long prec = 0) {
    mpfr_init2(v_, prec > 0 ? prec : default_prec_);
    mpfr_set_d(v_, x, MPFR_RNDN);
  }
  BigFloat(const BigFloat& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  BigFloat(BigFloat&& o) noexcept {
    mpfr_init2(v_, MPFR_PREC_MIN);
    mpfr_swap(v_, o.v_);
  }
  BigFloat& operator=(const BigFloat& o) {
    if (this != &o) {
      mpfr_set_prec(v_, mpfr_get_prec(o.v_));
      mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    return *this;
  }
  BigFloat& operator=(BigFloat&& o) noexcept {
    if (this != &o) mpfr_swap(v_, o.v_);
    return *this;
  }
  ~BigFloat() { mpfr_clear(v_); }

  // Parses a decimal literal, correctly rounded to `prec` bits.
  static BigFloat from_string(const std::string& s, long prec = 0);
  static BigFloat from_rational(const Rational& q, long prec = 0) {
    BigFloat r = with_precision(prec);
    mpfr_set_q(r.v_, q.raw().get_mpq_t(), MPFR_RNDN);
    return r;
  }
  // Exact power of two; handy for tolerances.
  static BigFloat pow2(long e, long prec = 0) {
    BigFloat r = with_precision(prec);
    mpfr_set_ui_2exp(r.v_, 1, e, MPFR_RNDN);
    return r;
  }

  long precision() const { return mpfr_get_prec(v_); }
  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  int sign() const { return mpfr_sgn(v_); }

  // digits <= 0 picks enough digits to round-trip at this precision.
  std::string decimal_string(int digits = 0) const;

  friend BigFloat operator+(const BigFloat& a, const BigFloat& b) {
    BigFloat r = wider(a, b);
    mpfr_add(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }
  friend BigFloat operator-(const BigFloat& a, const BigFloat& b) {
    BigFloat r = wider(a, b);
    mpfr_sub(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }
  friend BigFloat operator*(const BigFloat& a, const BigFloat& b) {
    BigFloat r = wider(a, b);
    mpfr_mul(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }
  friend BigFloat operator/(const BigFloat& a, const BigFloat& b) {
    if (mpfr_zero_p(b.v_)) throw std::domain_error("BigFloat: division by zero");
    BigFloat r = wider(a, b);
    mpfr_div(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }
  friend BigFloat operator-(const BigFloat& a) {
    BigFloat r(a);
    mpfr_neg(r.v_, r.v_, MPFR_RNDN);
    return r;
  }

  BigFloat& operator+=(const BigFloat& o) { *this = *this + o; return *this; }
  BigFloat& operator-=(const BigFloat& o) { *this = *this - o; return *this; }
  BigFloat& operator*=(const BigFloat& o) { *this = *this * o; return *this; }
  BigFloat& operator/=(const BigFloat& o) { *this = *this / o; return *this; }

  friend bool operator==(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) == 0; }
  friend bool operator!=(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) != 0; }
  friend bool operator<(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) < 0; }
  friend bool operator<=(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) <= 0; }
  friend bool operator>(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) > 0; }
  friend bool operator>=(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) >= 0; }

  friend BigFloat abs(const BigFloat& a) {
    BigFloat r(a);
    mpfr_abs(r.v_, r.v_, MPFR_RNDN);
    return r;
  }

  friend std::ostream& operator<<(std::ostream& os, const BigFloat& x) {
    return os << x.decimal_string(std::min<long>(x.precision(), 50) * 302 / 1000 + 2);
  }

private:
  static BigFloat with_precision(long prec) {
    BigFloat r;
    if (prec > 0) mpfr_set_prec(r.v_, prec);
    return r;
  }
  static BigFloat wider(const BigFloat& a, const BigFloat& b) {
    return with_precision(std::max(mpfr_get_prec(a.v_), mpfr_get_prec(b.v_)));
  }

  static inline thread_local long default_prec_ = 256;

  mpfr_t v_;
};

}  // namespace hk
