#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "hk/counterexample.hpp"

using hk::BigFloat;
using hk::DoubleSParams;
using hk::Profile;
using hk::Rational;

namespace {

Rational Q(long n, long d = 1) { return Rational(n, d); }

DoubleSParams<Rational> canonical() { return {Q(1, 100), Q(3, 2)}; }

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(canonical().validate());
  CHECK_NOTHROW((DoubleSParams<Rational>{Q(1, 4), Q(3, 2)}.validate()));
  CHECK_THROWS_AS((DoubleSParams<Rational>{Q(0), Q(3, 2)}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((DoubleSParams<Rational>{Q(3, 10), Q(3, 2)}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((DoubleSParams<Rational>{Q(1, 100), Q(1)}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((DoubleSParams<Rational>{Q(1, 100), Q(2)}.validate()), std::invalid_argument);
}

TEST_CASE("initial profile geometry") {
  auto p = hk::build_double_s(canonical());
  REQUIRE(p.size() == 6);
  // Slopes eps, d/eps^4, 1/eps, d/eps^4, eps.
  CHECK(p.segment_slope(0) == Q(1, 100));
  CHECK(p.segment_slope(1) == Q(150000000));
  CHECK(p.segment_slope(2) == Q(100));
  CHECK(p.segment_slope(3) == Q(150000000));
  CHECK(p.segment_slope(4) == Q(1, 100));
  CHECK(hk::profile_range(p) == Q(303, 100));
  CHECK(p.domain_length() == Q(2) + Q(1, 10000) + Q(2, 100000000));
  // Antisymmetric with center value d + 3 eps / 2.
  CHECK(hk::antisymmetry_defect(p) == Q(0));
  Rational center = (p.domain_start() + p.domain_end()) / Q(2);
  CHECK(p.eval(center) == Q(3, 2) + Q(3, 200));
  // Tail image is [0, eps].
  CHECK(p.eval(Q(0)) == Q(0));
  CHECK(p.eval(Q(1)) == Q(1, 100));
}

TEST_CASE("tracked preimage bands at the start") {
  auto params = canonical();
  auto p = hk::build_double_s(params);
  auto sets = hk::agent_sets(p, params);
  CHECK_FALSE(sets.a_empty);
  CHECK(sets.a_lo == Q(0));
  // Unit tail plus the sliver of the strip with opinions in [eps, 2 eps].
  CHECK(sets.a_hi == Q(1) + Q(1, 15000000000L));
  CHECK(sets.a_measure() == Q(1) + Q(1, 15000000000L));
  CHECK_FALSE(sets.b_empty);
  CHECK(sets.b_lo == sets.a_hi);
  CHECK(sets.b_hi == Q(1) + Q(1, 100000000));
  CHECK(sets.img_lo == Q(0));
  CHECK(sets.img_hi == Q(1, 100));

  auto flat = Profile<Rational>::constant(Q(0), Q(3), Q(0));
  auto fs = hk::agent_sets(flat, params);
  CHECK_FALSE(fs.a_empty);
  CHECK(fs.a_lo == Q(0));
  CHECK(fs.a_hi == Q(3));
  CHECK(fs.b_empty);
  CHECK(fs.b_measure() == Q(0));
}

TEST_CASE("slope recursion") {
  Rational eps = Q(1, 100), d = Q(3, 2);
  Rational e0 = eps, s0 = d / (eps * eps * eps * eps);
  auto r1 = hk::lemma_recursion(e0, s0, eps, d);
  CHECK(r1.e_next == Q(2) * eps * eps * eps * eps * eps / d);
  CHECK(r1.s_next == d / (Q(2) * eps * eps * eps * eps));
  CHECK(r1.b_next_max == Q(2) * eps * eps * eps * eps);

  auto same = hk::lemma_recursion(Q(7), Q(7), eps, d);
  CHECK(same.e_next == Q(2));
  CHECK(same.s_next == eps / Q(2));
  CHECK(same.b_next_max == Q(2) * d / eps);

  CHECK_THROWS_AS(hk::lemma_recursion(Q(0), s0, eps, d), std::invalid_argument);
  CHECK_THROWS_AS(hk::lemma_recursion(e0, Q(-1), eps, d), std::invalid_argument);
}

TEST_CASE("strip growth compounds across the chain") {
  // Per step, s grows by at least d / (4 eps^4) once e has fallen to its
  // step-1 value; the factor is exact at the first step.
  Rational eps = Q(1, 100), d = Q(3, 2);
  Rational factor = d / (Q(4) * eps * eps * eps * eps);
  Rational e = eps, s = d / (eps * eps * eps * eps);
  auto r1 = hk::lemma_recursion(e, s, eps, d);
  Rational s1 = r1.s_next;
  e = r1.e_next;
  s = r1.s_next;
  Rational floor = s1;
  for (int t = 2; t <= 6; ++t) {
    auto r = hk::lemma_recursion(e, s, eps, d);
    e = r.e_next;
    s = r.s_next;
    floor = floor * factor;
    CHECK(s >= floor);
  }
  CHECK(hk::lemma_recursion(Q(2) * eps * eps * eps * eps * eps / d, s1, eps, d).s_next ==
        factor * s1);
}

TEST_CASE("mean increment bound") {
  Rational eps = Q(1, 100);
  Rational eps4 = eps * eps * eps * eps;
  CHECK(hk::mean_increment_bound(eps4) == Q(4) * eps4);
  CHECK(hk::mean_increment_bound(Q(0)) == Q(0));
  CHECK(hk::mean_increment_bound(Q(2) * eps4) == Q(8) * eps4);
  CHECK_THROWS_AS(hk::mean_increment_bound(Q(-1, 10)), std::invalid_argument);
}

TEST_CASE("limiting tail mean bound") {
  auto fine = hk::limit_mean_bound(Q(1, 100), Q(3, 2));
  CHECK(fine.satisfied);
  CHECK(fine.bound > Q(1, 200));
  CHECK(fine.bound < Q(49, 5000));

  auto coarse = hk::limit_mean_bound(Q(1, 4), Q(3, 2));
  CHECK(coarse.bound == Q(4215, 24512));
  CHECK_FALSE(coarse.satisfied);

  CHECK_THROWS_AS(hk::limit_mean_bound(Q(2), Q(1, 2)), std::invalid_argument);
}

TEST_CASE("epsilon guards") {
  auto g1 = hk::epsilon_guards(Q(1, 100));
  CHECK(g1.radical);
  CHECK(g1.tenth);
  CHECK(g1.quarter);
  CHECK(g1.all());
  auto g2 = hk::epsilon_guards(Q(1, 5));
  CHECK_FALSE(g2.radical);
  CHECK_FALSE(g2.tenth);
  CHECK(g2.quarter);
  auto g3 = hk::epsilon_guards(Q(1, 10));
  CHECK(g3.radical);
  CHECK(g3.tenth);
  auto g4 = hk::epsilon_guards(0.16);
  CHECK_FALSE(g4.radical);  // threshold is about 0.15139
  auto g5 = hk::epsilon_guards(0.15);
  CHECK(g5.radical);
}

TEST_CASE("start-of-run certificate") {
  auto params = canonical();
  auto p = hk::build_double_s(params);
  auto cert = hk::verify_assumptions<Rational>(p, params, nullptr);
  CHECK(cert.t == 0);
  for (bool ok : cert.assumptions) CHECK(ok);
  CHECK(cert.pass);
  CHECK(cert.range == Q(303, 100));
  CHECK(cert.a_mean == Q(1, 200));
  CHECK(cert.e_meas == Q(1, 100));
  CHECK(cert.e_bound == Q(1, 100));
  CHECK(cert.s_meas == Q(150000000));
  CHECK(cert.s_bound == Q(150000000));
  CHECK(cert.b_measure == Q(1, 100000000) - Q(1, 15000000000L));
}

TEST_CASE("tampered tail image fails its check") {
  auto params = canonical();
  auto p = hk::build_double_s(params);
  std::vector<Rational> vals = p.values();
  vals[1] = vals[1] * Q(3, 2);  // tail now overshoots [0, eps]
  Profile<Rational> bad(p.breakpoints(), vals);
  auto cert = hk::verify_assumptions<Rational>(bad, params, nullptr);
  CHECK_FALSE(cert.assumptions[2]);
  CHECK_FALSE(cert.pass);
}

TEST_CASE("certified two-step bigfloat run") {
  DoubleSParams<BigFloat> params{BigFloat::from_rational(Q(1, 100)),
                                 BigFloat::from_rational(Q(3, 2))};
  hk::PrecisionPolicy policy = hk::PrecisionPolicy::bigfloat(256);
  BigFloat tol = BigFloat::from_rational(Q(303, 100)) * BigFloat::pow2(-20);
  auto run = hk::run_counterexample(params, 2, policy, tol);
  REQUIRE(run.certificates.size() == 3);
  REQUIRE(run.defects.size() == 2);
  CHECK(run.pass);
  BigFloat two(2.0);
  for (const auto& cert : run.certificates) {
    CHECK(cert.pass);
    CHECK_FALSE(cert.advisory);
    CHECK(cert.range > two);
    for (bool ok : cert.assumptions) CHECK(ok);
  }
  for (const auto& d : run.defects) CHECK(d < tol);

  // Step-1 slope extremes against the frozen chain values.
  const auto& c1 = run.certificates[1];
  BigFloat e1 = BigFloat::from_rational(Q(2) * Q(1, 100000000) * Q(1, 100) / Q(3, 2));
  BigFloat s1 = BigFloat::from_rational(Q(3, 2) / (Q(2) * Q(1, 100000000)));
  CHECK(!(c1.e_meas > e1));
  CHECK(!(c1.s_meas < s1));

  // Preimage-band containments, in measure form.
  const auto& c0 = run.certificates[0];
  const auto& c2 = run.certificates[2];
  CHECK(c1.a_measure >= c0.a_measure);
  CHECK(c2.a_measure >= c1.a_measure);
  CHECK(c1.b_measure <= c0.b_measure);
  CHECK(c2.b_measure <= c1.b_measure);

  // Tail mean creeps up but stays below the per-step and limiting bounds.
  CHECK(c1.a_mean >= c0.a_mean);
  CHECK(c2.a_mean >= c1.a_mean);
  CHECK(c1.a_mean - c0.a_mean <= hk::mean_increment_bound(c0.b_measure));
  CHECK(c2.a_mean - c1.a_mean <= hk::mean_increment_bound(c1.b_measure));
  auto lim = hk::limit_mean_bound(Q(1, 100), Q(3, 2));
  CHECK(c2.a_mean < BigFloat::from_rational(lim.bound));
}

TEST_CASE("exploratory double run goes advisory once the strip underflows") {
  DoubleSParams<double> params{0.05, 1.5};
  hk::PrecisionPolicy policy = hk::PrecisionPolicy::f64();
  auto run = hk::run_counterexample(params, 6, policy);
  REQUIRE(run.certificates.size() == 7);
  CHECK(run.pass);
  for (const auto& cert : run.certificates) CHECK(cert.range > 2.0);
  CHECK_FALSE(run.certificates.front().advisory);
  CHECK(run.certificates.back().advisory);
  // Advisory is sticky.
  bool seen = false;
  for (const auto& cert : run.certificates) {
    if (cert.advisory) seen = true;
    if (seen) CHECK(cert.advisory);
  }
}

TEST_CASE("certification refuses what it cannot resolve") {
  DoubleSParams<BigFloat> params{BigFloat::from_rational(Q(1, 100)),
                                 BigFloat::from_rational(Q(3, 2))};
  hk::PrecisionPolicy policy = hk::PrecisionPolicy::bigfloat(64);
  BigFloat tol(1e-8);
  CHECK_THROWS_WITH_AS(hk::run_counterexample(params, 5, policy, tol),
                       "precision exhausted at step 3", std::runtime_error);

  // Same horizon resolves fine at 512 bits (prediction only, no run).
  hk::PrecisionPolicy wide = hk::PrecisionPolicy::bigfloat(512);
  CHECK_THROWS_AS(hk::run_counterexample(params, 0, wide, tol), std::invalid_argument);

  DoubleSParams<BigFloat> big_eps{BigFloat::from_rational(Q(1, 50)),
                                  BigFloat::from_rational(Q(3, 2))};
  CHECK_THROWS_AS(hk::run_counterexample(big_eps, 2, policy, tol), std::invalid_argument);

  DoubleSParams<Rational> qp = canonical();
  hk::PrecisionPolicy f64 = hk::PrecisionPolicy::f64();
  CHECK_THROWS_AS(hk::run_counterexample(qp, 1, f64, Q(1, 1000)), std::invalid_argument);
}
