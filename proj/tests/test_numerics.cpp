#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hk/scalar.hpp"

using hk::Backend;
using hk::BigFloat;
using hk::PrecisionPolicy;
using hk::Rational;

TEST_CASE("rational canonical form") {
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(3, -6) == Rational(-1, 2));
  CHECK(Rational(3, -6).fraction_string() == "-1/2");
  CHECK(Rational(-4, -2).fraction_string() == "2");
  CHECK(Rational(0, 7) == Rational(0));
  CHECK_THROWS_AS(Rational(1, 0), std::invalid_argument);
}

TEST_CASE("rational arithmetic and comparisons") {
  Rational a(1, 3), b(1, 6);
  CHECK(a + b == Rational(1, 2));
  CHECK(a - b == Rational(1, 6));
  CHECK(a * b == Rational(1, 18));
  CHECK(a / b == Rational(2));
  CHECK(-a == Rational(-1, 3));
  CHECK(a > b);
  CHECK(b < a);
  CHECK(a >= Rational(1, 3));
  CHECK(hk::abs(Rational(-5, 7)) == Rational(5, 7));
  CHECK_THROWS_AS(a / Rational(0), std::domain_error);
}

TEST_CASE("rational parsing") {
  CHECK(Rational::parse("4613/1728") == Rational(4613, 1728));
  CHECK(Rational::parse("-7/2") == Rational(-7, 2));
  CHECK(Rational::parse("98") == Rational(98));
  CHECK(Rational::parse("0.01") == Rational(1, 100));
  CHECK(Rational::parse("-3.5e-2") == Rational(-7, 200));
  CHECK(Rational::parse("1.5") == Rational(3, 2));
  CHECK(Rational::parse("2e3") == Rational(2000));
  CHECK(Rational::parse("+0.250") == Rational(1, 4));
  CHECK(Rational::parse(".5") == Rational(1, 2));
  CHECK_THROWS_AS(Rational::parse(""), std::invalid_argument);
  CHECK_THROWS_AS(Rational::parse("abc"), std::invalid_argument);
  CHECK_THROWS_AS(Rational::parse("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(Rational::parse("1.2.3"), std::invalid_argument);
}

TEST_CASE("rational decimal strings") {
  CHECK(Rational(1, 3).decimal_string(6) == "0.333333");
  CHECK(Rational(2, 3).decimal_string(6) == "0.666667");
  CHECK(Rational(-1, 8).decimal_string(3) == "-0.125");
  CHECK(Rational(5).decimal_string(2) == "5.00");
  CHECK(Rational(0).decimal_string(2) == "0.00");
  CHECK(Rational(-1, 200000).decimal_string(3) == "0.000");
}

TEST_CASE("rational/double round trips") {
  CHECK(Rational::from_double(0.5) == Rational(1, 2));
  CHECK(Rational::from_double(-0.75) == Rational(-3, 4));
  // 0.1 is not a dyadic rational, so the double is a different number.
  CHECK(Rational::from_double(0.1) != Rational(1, 10));
  CHECK_THROWS_AS(Rational::from_double(INFINITY), std::invalid_argument);

  std::mt19937_64 gen(7);
  std::uniform_int_distribution<long> num(-1000000, 1000000), den(1, 1000000);
  const Rational ulp(1, 1L << 52);
  for (int i = 0; i < 1000; ++i) {
    Rational q(num(gen), den(gen));
    Rational back = Rational::from_double(q.to_double());
    CHECK(hk::abs(back - q) <= ulp * hk::abs(q));
  }
}

TEST_CASE("bigfloat basics") {
  CHECK(BigFloat::default_precision() == 256);
  BigFloat x(0.25);
  CHECK(x.precision() == 256);
  CHECK(x.to_double() == 0.25);

  BigFloat narrow(1.5, 64), wide(0.25, 512);
  CHECK((narrow + wide).precision() == 512);

  // 1 + 2^-200 is representable at 256 bits but collapses to 1 in a double.
  BigFloat one(1.0), tiny = BigFloat::pow2(-200);
  CHECK((one + tiny) - one == tiny);
  CHECK(1.0 + tiny.to_double() == 1.0);

  CHECK(BigFloat::from_string("0.25").to_double() == 0.25);
  CHECK(BigFloat::from_string("-1.5e2").to_double() == -150.0);
  CHECK_THROWS_AS(BigFloat::from_string("nope"), std::invalid_argument);
  CHECK_THROWS_AS(BigFloat(1.0) / BigFloat(0.0), std::domain_error);

  CHECK(BigFloat::from_rational(Rational(1, 4)).to_double() == 0.25);
  CHECK(abs(BigFloat(-3.0)).to_double() == 3.0);

  // Round trip through the decimal printer at full precision.
  BigFloat third = BigFloat(1.0) / BigFloat(3.0);
  CHECK(BigFloat::from_string(third.decimal_string()) == third);
}

TEST_CASE("mean matches hand-computed values") {
  // 98 opinions at -1, one at 0, one at 1: mean is -97/100.
  std::vector<Rational> xs(98, Rational(-1));
  xs.push_back(Rational(0));
  xs.push_back(Rational(1));
  CHECK(hk::mean(xs) == Rational(-97, 100));

  std::vector<double> xd(98, -1.0);
  xd.push_back(0.0);
  xd.push_back(1.0);
  CHECK(hk::mean(xd) == doctest::Approx(-0.97).epsilon(1e-15));

  std::vector<Rational> empty;
  CHECK_THROWS_AS(hk::mean(empty), std::invalid_argument);
}

TEST_CASE("mean agrees across backends on random sets") {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<long> num(-1000, 1000);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<Rational> xs;
    std::vector<double> xd;
    int n = 1 + static_cast<int>(gen() % 40);
    for (int i = 0; i < n; ++i) {
      long p = num(gen);
      xs.emplace_back(p, 64);
      xd.push_back(static_cast<double>(p) / 64.0);
    }
    CHECK(std::abs(hk::mean(xs).to_double() - hk::mean(xd)) <= 1e-12);
  }
}

TEST_CASE("precision policy validation") {
  CHECK_NOTHROW(PrecisionPolicy::exact().validate());
  CHECK_NOTHROW(PrecisionPolicy::f64().validate());
  CHECK_NOTHROW(PrecisionPolicy::bigfloat(512).validate());

  PrecisionPolicy bad = PrecisionPolicy::exact();
  bad.tolerance = 0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = PrecisionPolicy::bigfloat(32);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = PrecisionPolicy::f64(0.0);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = PrecisionPolicy::f64();
  bad.tolerance = -1e-9;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("approx_eq honors backend and tolerance") {
  PrecisionPolicy ex = PrecisionPolicy::exact();
  CHECK(hk::approx_eq(Rational(1, 3), Rational(1, 3), ex));
  CHECK_FALSE(hk::approx_eq(Rational(1, 3), Rational(1, 3) + Rational(1, 1000000000L), ex));

  PrecisionPolicy fp = PrecisionPolicy::f64();
  CHECK(hk::approx_eq(0.0, 1e-12, fp));
  CHECK_FALSE(hk::approx_eq(0.0, 2e-12, fp));

  PrecisionPolicy bf = PrecisionPolicy::bigfloat(128);
  CHECK(hk::approx_eq(BigFloat(1.0), BigFloat(1.0) + BigFloat::pow2(-70), bf));
  CHECK_FALSE(hk::approx_eq(BigFloat(1.0), BigFloat(1.0) + BigFloat::pow2(-60), bf));

  // Scalar type and policy backend must agree.
  CHECK_THROWS_AS(hk::approx_eq(1.0, 1.0, ex), std::invalid_argument);
  CHECK_THROWS_AS(hk::approx_eq(Rational(1), Rational(1), fp), std::invalid_argument);
}

TEST_CASE("scalar traits parse decimals per backend") {
  CHECK(hk::scalar_traits<Rational>::parse("0.01") == Rational(1, 100));
  CHECK(hk::scalar_traits<double>::parse("0.01") == 0.01);
  CHECK(hk::scalar_traits<BigFloat>::parse("0.01").to_double() == doctest::Approx(0.01));
  CHECK(hk::scalar_traits<double>::from_ratio(1, 3) == 1.0 / 3.0);
  CHECK_THROWS_AS(hk::scalar_traits<double>::parse("zzz"), std::invalid_argument);
}
