#include "hk/rational.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace hk {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

mpz_class parse_integer(std::string_view s, std::string_view whole) {
  bool neg = false;
  if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
    neg = s[0] == '-';
    s.remove_prefix(1);
  }
  if (!all_digits(s))
    throw std::invalid_argument("Rational: cannot parse \"" + std::string(whole) + "\"");
  mpz_class z(std::string(s), 10);
  return neg ? mpz_class(-z) : z;
}

mpz_class pow10(unsigned long e) {
  mpz_class p;
  mpz_ui_pow_ui(p.get_mpz_t(), 10, e);
  return p;
}

}  // namespace

Rational Rational::parse(std::string_view s) {
  const std::string_view whole = s;
  if (s.empty()) throw std::invalid_argument("Rational: cannot parse empty string");

  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    mpz_class num = parse_integer(s.substr(0, slash), whole);
    mpz_class den = parse_integer(s.substr(slash + 1), whole);
    return from_fraction(num, den);
  }

  bool neg = false;
  if (s[0] == '+' || s[0] == '-') {
    neg = s[0] == '-';
    s.remove_prefix(1);
  }

  long exp10 = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    mpz_class ez = parse_integer(s.substr(e + 1), whole);
    if (!ez.fits_slong_p())
      throw std::invalid_argument("Rational: exponent out of range in \"" + std::string(whole) + "\"");
    exp10 = ez.get_si();
    s = s.substr(0, e);
  }

  std::string digits;
  long frac_len = 0;
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    std::string_view ip = s.substr(0, dot), fp = s.substr(dot + 1);
    if (ip.empty() && fp.empty())
      throw std::invalid_argument("Rational: cannot parse \"" + std::string(whole) + "\"");
    if (!ip.empty() && !all_digits(ip))
      throw std::invalid_argument("Rational: cannot parse \"" + std::string(whole) + "\"");
    if (!fp.empty() && !all_digits(fp))
      throw std::invalid_argument("Rational: cannot parse \"" + std::string(whole) + "\"");
    digits = std::string(ip) + std::string(fp);
    frac_len = static_cast<long>(fp.size());
  } else {
    if (!all_digits(s))
      throw std::invalid_argument("Rational: cannot parse \"" + std::string(whole) + "\"");
    digits = std::string(s);
  }

  mpz_class mant(digits.empty() ? "0" : digits, 10);
  if (neg) mant = -mant;

  long net = exp10 - frac_len;
  if (net >= 0) return Rational(mpq_class(mant * pow10(static_cast<unsigned long>(net))));
  return from_fraction(mant, pow10(static_cast<unsigned long>(-net)));
}

Rational Rational::from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("Rational: non-finite double");
  Rational r;
  r.q_ = mpq_class(x);
  r.q_.canonicalize();
  return r;
}

std::string Rational::fraction_string() const {
  if (q_.get_den() == 1) return q_.get_num().get_str();
  return q_.get_num().get_str() + "/" + q_.get_den().get_str();
}

std::string Rational::decimal_string(int digits) const {
  if (digits < 0) throw std::invalid_argument("Rational: negative digit count");
  const bool neg = sign() < 0;
  mpz_class num = ::abs(q_.get_num()) * pow10(static_cast<unsigned long>(digits));
  mpz_class den = q_.get_den();
  mpz_class quo, rem;
  mpz_fdiv_qr(quo.get_mpz_t(), rem.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  if (2 * rem >= den) quo += 1;

  std::string body = quo.get_str();
  std::string out = (neg && quo != 0) ? "-" : "";
  if (digits == 0) return out + body;
  if (static_cast<long>(body.size()) <= digits)
    body.insert(0, static_cast<size_t>(digits) + 1 - body.size(), '0');
  body.insert(body.size() - static_cast<size_t>(digits), ".");
  return out + body;
}

}  // namespace hk
