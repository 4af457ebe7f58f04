#include "hk/bigfloat.hpp"

#include <cstdlib>

namespace hk {

BigFloat BigFloat::from_string(const std::string& s, long prec) {
  BigFloat r = with_precision(prec);
  const char* begin = s.c_str();
  char* end = nullptr;
  mpfr_strtofr(r.v_, begin, &end, 10, MPFR_RNDN);
  if (end == begin || *end != '\0')
    throw std::invalid_argument("BigFloat: cannot parse \"" + s + "\"");
  return r;
}

std::string BigFloat::decimal_string(int digits) const {
  // prec * log10(2) digits reproduce the value; two extra cover rounding.
  long n = digits > 0 ? digits : precision() * 302 / 1000 + 2;
  char* buf = nullptr;
  mpfr_asprintf(&buf, "%.*Rg", static_cast<int>(n), v_);
  std::string out(buf);
  mpfr_free_str(buf);
  return out;
}

}  // namespace hk
