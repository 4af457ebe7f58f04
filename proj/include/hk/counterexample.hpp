#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "hk/continuum.hpp"
#include "hk/scalar.hpp"

namespace hk {

// Shape parameters for the double-S initial profile: shallow unit tails
// (slope eps), steep strips of length eps^4 carrying a rise of d each, and a
// short center ramp of length eps^2.  |A| = 1 normalization throughout, so
// the recursion constants below need no rescaling.
template <class S>
struct DoubleSParams {
  S epsilon;
  S d;

  void validate() const {
    const S zero = scalar_traits<S>::from_int(0);
    const S one = scalar_traits<S>::from_int(1);
    if (!(epsilon > zero) || epsilon > scalar_traits<S>::from_ratio(1, 4))
      throw std::invalid_argument("DoubleSParams: epsilon must lie in (0, 1/4]");
    if (!(d > one) || !(d < scalar_traits<S>::from_int(2)))
      throw std::invalid_argument("DoubleSParams: d must lie in (1, 2)");
  }
};

// Antisymmetric initial profile on [0, 2 + eps^2 + 2 eps^4] with values
// 0 / eps / d+eps / d+2eps / 2d+2eps / 2d+3eps at the segment boundaries:
// range 2d + 3 eps, center value d + 3 eps / 2.
template <class S>
Profile<S> build_double_s(const DoubleSParams<S>& params) {
  params.validate();
  const S zero = scalar_traits<S>::from_int(0);
  const S one = scalar_traits<S>::from_int(1);
  const S e = params.epsilon;
  const S e2 = e * e;
  const S e4 = e2 * e2;
  const S d = params.d;
  std::vector<S> a = {zero,          one,
                      one + e4,      one + e4 + e2,
                      one + e4 + e2 + e4, one + one + e4 + e2 + e4};
  std::vector<S> v = {zero,          e,
                      d + e,         d + e + e,
                      d + d + e + e, d + d + e + e + e};
  return Profile<S>(std::move(a), std::move(v));
}

template <class S>
struct AgentSets {
  bool a_empty = false;
  S a_lo, a_hi;      // preimage of the opinion band [0, 2 eps]
  bool b_empty = false;
  S b_lo, b_hi;      // preimage of the opinion band [2 eps, eps + d]
  S img_lo, img_hi;  // image of the fixed unit tail [start, start + 1]

  S a_measure() const {
    return a_empty ? a_lo - a_lo : a_hi - a_lo;
  }
  S b_measure() const {
    return b_empty ? b_lo - b_lo : b_hi - b_lo;
  }
};

// Preimage intervals of the two tracked opinion bands, plus the image of the
// fixed left tail.  Closed preimages computed by exact linear solves on the
// profile's segments.
template <class S>
AgentSets<S> agent_sets(const Profile<S>& p, const DoubleSParams<S>& params) {
  const S zero = scalar_traits<S>::from_int(0);
  const S one = scalar_traits<S>::from_int(1);
  const S lo_a = zero, hi_a = params.epsilon + params.epsilon;
  const S lo_b = hi_a, hi_b = params.epsilon + params.d;
  AgentSets<S> out{};
  out.a_lo = out.a_hi = p.domain_start();
  out.b_lo = out.b_hi = p.domain_start();

  out.a_empty = p.value_start() > hi_a || p.value_end() < lo_a;
  if (!out.a_empty) {
    out.a_lo = (p.value_start() >= lo_a) ? p.domain_start() : p.preimage_inf(lo_a);
    out.a_hi = (p.value_end() <= hi_a) ? p.domain_end() : p.preimage_sup(hi_a);
  }

  out.b_empty = p.value_start() > hi_b || p.value_end() < lo_b;
  if (!out.b_empty) {
    out.b_lo = (p.value_start() >= lo_b) ? p.domain_start() : p.preimage_inf(lo_b);
    out.b_hi = (p.value_end() <= hi_b) ? p.domain_end() : p.preimage_sup(hi_b);
  }

  out.img_lo = p.eval(p.domain_start());
  out.img_hi = p.eval(p.domain_start() + one);
  return out;
}

// One application of the slope recursion: the shallow-tail bound contracts by
// the steep-strip bound and vice versa, and the next strip can't be wider
// than d over its slope.
template <class S>
struct LemmaStep {
  S e_next, s_next, b_next_max;
};

template <class S>
LemmaStep<S> lemma_recursion(const S& e, const S& s, const S& epsilon, const S& d) {
  const S zero = scalar_traits<S>::from_int(0);
  if (!(e > zero) || !(s > zero) || !(epsilon > zero) || !(d > zero))
    throw std::invalid_argument("lemma_recursion: inputs must be positive");
  const S two = scalar_traits<S>::from_int(2);
  S e_next = two * e / s;
  S s_next = epsilon * s / (two * e);
  return {e_next, s_next, d / s_next};
}

// Per-step ceiling on how far the shallow-tail mean can drift.
template <class S>
S mean_increment_bound(const S& b_measure) {
  if (b_measure < scalar_traits<S>::from_int(0))
    throw std::invalid_argument("mean_increment_bound: negative measure");
  return scalar_traits<S>::from_int(4) * b_measure;
}

// Geometric tail bound on the limiting tail mean, and whether it stays below
// the eps - 2 eps^2 ceiling that keeps the tail-mean assumption alive forever.
template <class S>
struct MeanBound {
  S bound;
  bool satisfied;
};

template <class S>
MeanBound<S> limit_mean_bound(const S& epsilon, const S& d) {
  const S one = scalar_traits<S>::from_int(1);
  const S two = scalar_traits<S>::from_int(2);
  const S four = scalar_traits<S>::from_int(4);
  const S eight = scalar_traits<S>::from_int(8);
  const S e2 = epsilon * epsilon;
  const S e4 = e2 * e2;
  const S ratio = four * e4 * epsilon / d;
  if (!(ratio < one)) throw std::invalid_argument("limit_mean_bound: contraction ratio not < 1");
  S bound = epsilon / two + four * e4 + eight * e4 / (one - ratio);
  return {bound, bound < epsilon - two * e2};
}

// The three explicit smallness guards the slope lemmas lean on.  All are pure
// conditions on epsilon; the radical one is checked in squared form so exact
// backends stay exact.
struct EpsilonGuards {
  bool radical;  // (4 eps + 3)^2 <= 13, i.e. eps <= (sqrt(13) - 3) / 4
  bool tenth;    // eps <= 1/10
  bool quarter;  // eps <= 1/4
  bool all() const { return radical && tenth && quarter; }
};

template <class S>
EpsilonGuards epsilon_guards(const S& epsilon) {
  const S four = scalar_traits<S>::from_int(4);
  const S three = scalar_traits<S>::from_int(3);
  const S lhs = (four * epsilon + three) * (four * epsilon + three);
  EpsilonGuards g{};
  g.radical = !(lhs > scalar_traits<S>::from_int(13));
  g.tenth = !(epsilon > scalar_traits<S>::from_ratio(1, 10));
  g.quarter = !(epsilon > scalar_traits<S>::from_ratio(1, 4));
  return g;
}

// What one certification step records.  The six assumption flags are, in
// order: the unit tail sits inside the shallow preimage band; the steep
// preimage band sits inside the original strip; the tail's image stays inside
// [0, eps]; the tail slope stays under the propagated shallow bound; the
// strip slope stays over the propagated steep bound; the tail mean keeps its
// eps - 2 eps^2 margin.
template <class S>
struct Certificate {
  long t = 0;
  S range;
  std::array<bool, 6> assumptions{};
  S e_meas, s_meas;
  S e_bound, s_bound;
  S a_measure, b_measure;
  S a_mean;
  bool advisory = false;
  bool pass = false;
};

template <class S>
Certificate<S> verify_assumptions(const Profile<S>& p, const DoubleSParams<S>& params,
                                  const Certificate<S>* prev) {
  const S zero = scalar_traits<S>::from_int(0);
  const S one = scalar_traits<S>::from_int(1);
  const S two = scalar_traits<S>::from_int(2);
  const S eps = params.epsilon;
  const S e2 = eps * eps;
  const S e4 = e2 * e2;

  Certificate<S> cert{};
  cert.t = prev ? prev->t + 1 : 0;
  cert.range = profile_range(p);
  if (prev) {
    LemmaStep<S> next = lemma_recursion(prev->e_bound, prev->s_bound, eps, params.d);
    cert.e_bound = next.e_next;
    cert.s_bound = next.s_next;
  } else {
    cert.e_bound = eps;
    cert.s_bound = params.d / e4;
  }

  AgentSets<S> sets = agent_sets(p, params);
  cert.a_measure = sets.a_measure();
  cert.b_measure = sets.b_measure();

  const S tail_lo = p.domain_start();
  const S tail_hi = tail_lo + one;
  cert.a_mean = p.integral(tail_lo, tail_hi);  // |A| = 1, so no division

  // Slope extremes over the tail and over the steep preimage band, measured
  // on the piecewise-linear profile itself.
  const std::vector<S>& bp = p.breakpoints();
  bool have_e = false, have_s = false;
  cert.e_meas = zero;
  cert.s_meas = cert.s_bound;
  for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
    if (bp[k] < tail_hi && bp[k + 1] > tail_lo) {
      S s = p.segment_slope(k);
      if (!have_e || s > cert.e_meas) cert.e_meas = s, have_e = true;
    }
    if (!sets.b_empty && bp[k] < sets.b_hi && bp[k + 1] > sets.b_lo) {
      S s = p.segment_slope(k);
      if (!have_s || s < cert.s_meas) cert.s_meas = s, have_s = true;
    }
  }

  cert.assumptions[0] = !sets.a_empty && !(sets.a_lo > tail_lo) && !(sets.a_hi < tail_hi);
  cert.assumptions[1] =
      sets.b_empty || (!(sets.b_lo < tail_hi) && !(sets.b_hi > tail_hi + e4));
  cert.assumptions[2] = !(sets.img_lo < zero) && !(sets.img_hi > eps);
  cert.assumptions[3] = have_e && !(cert.e_meas > cert.e_bound);
  cert.assumptions[4] = !have_s || !(cert.s_meas < cert.s_bound);
  cert.assumptions[5] = eps - cert.a_mean > two * e2;

  cert.pass = cert.range > two;
  for (bool ok : cert.assumptions) cert.pass = cert.pass && ok;
  return cert;
}

template <class S>
struct RunResult {
  std::vector<Certificate<S>> certificates;  // t = 0 .. T
  std::vector<S> defects;                    // pre-symmetrization, t = 1 .. T
  bool pass = false;
};

namespace detail {

// Smallest steep-strip width the chain predicts up to step T; certification
// needs the mantissa to resolve it with three decimal digits to spare.
template <class S>
S predicted_strip_floor(const DoubleSParams<S>& params, long T, long* first_failing,
                        const S& resolution) {
  S e = params.epsilon;
  S e2 = e * e;
  S s = params.d / (e2 * e2);
  S width = params.d / s;
  const S thousand = scalar_traits<S>::from_int(1000);
  if (first_failing) *first_failing = -1;
  for (long t = 1; t <= T; ++t) {
    LemmaStep<S> next = lemma_recursion(e, s, params.epsilon, params.d);
    e = next.e_next;
    s = next.s_next;
    width = next.b_next_max;
    if (first_failing && *first_failing < 0 && resolution * thousand > width) *first_failing = t;
  }
  return width;
}

}  // namespace detail

// Evolve the double-S profile for T steps, certifying every step.  Each step
// refines with mirrored candidates, records the antisymmetry defect, then
// symmetrizes and coarsens within the same tolerance so the breakpoint count
// stays bounded across steps.  Certification backends (exact, bigfloat)
// insist on epsilon <= 1/100 and on enough mantissa to resolve the predicted
// final strip width; doubles run in exploratory mode instead, where
// certificates turn advisory once the strip nears the 2^-40 floor.
template <class S>
RunResult<S> run_counterexample(const DoubleSParams<S>& params, long T,
                                const PrecisionPolicy& policy, const S& tol) {
  params.validate();
  policy.validate();
  if (policy.backend != scalar_traits<S>::backend)
    throw std::invalid_argument("run_counterexample: policy backend mismatch");
  if (T < 1) throw std::invalid_argument("run_counterexample: need T >= 1");
  if constexpr (std::is_same_v<S, BigFloat>) BigFloat::set_default_precision(policy.mantissa_bits);
  const S zero = scalar_traits<S>::from_int(0);
  const S two = scalar_traits<S>::from_int(2);
  if (!(tol > zero)) throw std::invalid_argument("run_counterexample: tol must be positive");

  const bool certifying = policy.backend != Backend::f64;
  if (certifying) {
    if (params.epsilon > scalar_traits<S>::from_ratio(1, 100))
      throw std::invalid_argument("run_counterexample: certification needs epsilon <= 1/100");
    if (policy.backend == Backend::bigfloat) {
      long failing = -1;
      S resolution = scalar_traits<S>::from_ratio(1, 2);
      S res = resolution;
      for (long b = 1; b < policy.mantissa_bits; ++b) res = res * resolution;
      detail::predicted_strip_floor(params, T, &failing, res);
      if (failing >= 0)
        throw std::runtime_error("precision exhausted at step " + std::to_string(failing));
    }
  }

  RunResult<S> out{};
  Profile<S> p = build_double_s(params);
  const S domain_len = p.domain_length();
  out.certificates.push_back(verify_assumptions<S>(p, params, nullptr));

  S advisory_floor = zero;
  if (!certifying) {
    S half = scalar_traits<S>::from_ratio(1, 2);
    S f = scalar_traits<S>::from_int(1);
    for (int b = 0; b < 40; ++b) f = f * half;
    advisory_floor = f * domain_len;
  }

  bool advisory_latched = false;
  StepOptions<S> so;
  so.tol = tol;
  so.mirror_candidates = true;
  for (long t = 1; t <= T; ++t) {
    Profile<S> next = continuum_step(p, so);
    S defect = antisymmetry_defect(next);
    out.defects.push_back(defect);
    p = simplify_profile_symmetric(symmetrize(next), tol);
    Certificate<S> cert = verify_assumptions(p, params, &out.certificates.back());
    if (!certifying && (advisory_latched || cert.b_measure < advisory_floor)) {
      advisory_latched = true;
      cert.advisory = true;
      cert.pass = cert.range > two;
    }
    if (!(defect < tol)) cert.pass = false;
    out.certificates.push_back(cert);
  }
  out.pass = true;
  for (const Certificate<S>& c : out.certificates) out.pass = out.pass && c.pass;
  return out;
}

// Backend-calibrated refinement tolerance for counterexample runs: fine
// enough to resolve every feature the certificates measure, coarse enough
// that the per-step breakpoint budget holds with a wide margin.
template <class S>
S default_counterexample_tol(const DoubleSParams<S>& params) {
  const S range = scalar_traits<S>::from_int(2) * params.d +
                  scalar_traits<S>::from_int(3) * params.epsilon;
  if constexpr (std::is_same_v<S, double>) {
    return 1e-9 * range;
  } else {
    return scalar_traits<S>::from_ratio(1, 100000000) * range;
  }
}

template <class S>
RunResult<S> run_counterexample(const DoubleSParams<S>& params, long T,
                                const PrecisionPolicy& policy) {
  return run_counterexample(params, T, policy, default_counterexample_tol(params));
}

}  // namespace hk
