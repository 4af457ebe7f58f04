#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

#include "hk/scalar.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hk {

// Monotone piecewise-linear opinion profile over an agent interval: strictly
// increasing abscissae, nondecreasing values, linear in between.  Immutable;
// prefix integrals are precomputed so window means cost O(log m).
template <class S>
class Profile {
public:
  Profile(std::vector<S> alphas, std::vector<S> values)
      : a_(std::move(alphas)), v_(std::move(values)) {
    if (a_.size() < 2) throw std::invalid_argument("Profile: need at least two breakpoints");
    if (a_.size() != v_.size()) throw std::invalid_argument("Profile: size mismatch");
    for (std::size_t k = 0; k + 1 < a_.size(); ++k) {
      if (!(a_[k] < a_[k + 1])) throw std::invalid_argument("Profile: abscissae must increase strictly");
      if (v_[k + 1] < v_[k]) throw std::invalid_argument("Profile: values must be nondecreasing");
    }
    build_prefix();
  }

  static Profile constant(const S& a, const S& b, const S& value) {
    return Profile({a, b}, {value, value});
  }
  static Profile linear(const S& a, const S& b, const S& va, const S& vb) {
    return Profile({a, b}, {va, vb});
  }

  std::size_t size() const { return a_.size(); }
  const std::vector<S>& breakpoints() const { return a_; }
  const std::vector<S>& values() const { return v_; }
  const S& domain_start() const { return a_.front(); }
  const S& domain_end() const { return a_.back(); }
  S domain_length() const { return a_.back() - a_.front(); }
  const S& value_start() const { return v_.front(); }
  const S& value_end() const { return v_.back(); }

  // Index of the segment containing a, i.e. the largest k with alpha_k <= a.
  std::size_t segment_index(const S& a) const {
    return static_cast<std::size_t>(std::upper_bound(a_.begin(), a_.end(), a) - a_.begin() - 1);
  }

  S segment_slope(std::size_t k) const {
    return (v_[k + 1] - v_[k]) / (a_[k + 1] - a_[k]);
  }

  S eval(const S& a) const {
    if (a < a_.front() || a > a_.back())
      throw std::domain_error("Profile::eval: abscissa outside domain");
    std::size_t k = segment_index(a);
    if (k + 1 == a_.size()) return v_.back();
    if (a == a_[k]) return v_[k];
    return v_[k] + (a - a_[k]) * (v_[k + 1] - v_[k]) / (a_[k + 1] - a_[k]);
  }

  // Leftmost abscissa where the profile reaches c: inf{beta : x(beta) >= c}.
  // For c below the whole profile this is the domain start.  c must not
  // exceed the maximum value.
  S preimage_inf(const S& c) const {
    if (c > v_.back()) throw std::domain_error("Profile::preimage_inf: value above range");
    if (!(c > v_.front())) return a_.front();
    std::size_t k = static_cast<std::size_t>(std::lower_bound(v_.begin(), v_.end(), c) - v_.begin());
    if (v_[k] == c) return a_[k];
    // v_[k-1] < c < v_[k]: strictly rising crossing inside segment k-1.
    return a_[k - 1] + (c - v_[k - 1]) * (a_[k] - a_[k - 1]) / (v_[k] - v_[k - 1]);
  }

  // Rightmost abscissa still at or below c: sup{beta : x(beta) <= c}.
  S preimage_sup(const S& c) const {
    if (c < v_.front()) throw std::domain_error("Profile::preimage_sup: value below range");
    if (!(c < v_.back())) return a_.back();
    std::size_t k = static_cast<std::size_t>(std::upper_bound(v_.begin(), v_.end(), c) - v_.begin() - 1);
    if (v_[k] == c) return a_[k];
    // v_[k] < c < v_[k+1].
    return a_[k] + (c - v_[k]) * (a_[k + 1] - a_[k]) / (v_[k + 1] - v_[k]);
  }

  // Integral of the profile from the domain start to a.
  S integral_from_start(const S& a) const {
    std::size_t k = segment_index(a);
    if (k + 1 == a_.size()) return prefix_.back();
    if (a == a_[k]) return prefix_[k];
    S xa = eval(a);
    S two = scalar_traits<S>::from_int(2);
    return prefix_[k] + (a - a_[k]) * (v_[k] + xa) / two;
  }

  S integral(const S& u, const S& v) const {
    return integral_from_start(v) - integral_from_start(u);
  }

  S mean_on(const S& u, const S& v) const {
    if (!(u < v)) throw std::invalid_argument("Profile::mean_on: empty interval");
    return integral(u, v) / (v - u);
  }

  S global_mean() const { return mean_on(a_.front(), a_.back()); }

private:
  void build_prefix() {
    const S two = scalar_traits<S>::from_int(2);
    prefix_.assign(a_.size(), scalar_traits<S>::from_int(0));
    for (std::size_t k = 0; k + 1 < a_.size(); ++k)
      prefix_[k + 1] = prefix_[k] + (a_[k + 1] - a_[k]) * (v_[k] + v_[k + 1]) / two;
  }

  std::vector<S> a_, v_;
  std::vector<S> prefix_;
};

template <class S>
S profile_range(const Profile<S>& p) {
  return p.value_end() - p.value_start();
}

template <class S>
struct NbhdBounds {
  S u, v, w;
};

// Window of agents an agent at abscissa alpha listens to, in agent space.
// The left clause closes at the domain start once x(alpha) <= x(start) + 1;
// otherwise u is the leftmost agent whose opinion reaches x(alpha) - 1.
// Symmetrically for v.  Plateaus resolve to the extreme admissible abscissa.
template <class S>
NbhdBounds<S> bounds_uvw(const Profile<S>& p, const S& alpha) {
  const S one = scalar_traits<S>::from_int(1);
  const S xa = p.eval(alpha);
  S u = (xa <= p.value_start() + one) ? p.domain_start() : p.preimage_inf(xa - one);
  S v = (xa >= p.value_end() - one) ? p.domain_end() : p.preimage_sup(xa + one);
  return {u, v, v - u};
}

// The exact pointwise update: the mean opinion over the window.
template <class S>
S update_at(const Profile<S>& p, const S& alpha) {
  NbhdBounds<S> b = bounds_uvw(p, alpha);
  return p.integral(b.u, b.v) / b.w;
}

template <class S>
struct Regularity {
  bool regular;
  S m_lo, m_hi;
};

// Minimum and maximum segment slope; a flat segment means the profile is not
// regular in the a.e.-C1-with-positive-derivative sense.
template <class S>
Regularity<S> regularity_check(const Profile<S>& p) {
  S lo = p.segment_slope(0), hi = lo;
  for (std::size_t k = 1; k + 1 < p.size(); ++k) {
    S s = p.segment_slope(k);
    if (s < lo) lo = s;
    if (s > hi) hi = s;
  }
  return {lo > scalar_traits<S>::from_int(0), lo, hi};
}

namespace detail {

template <class S>
S profile_value_scale(const Profile<S>& p) {
  S s = scalar_traits<S>::from_int(1);
  S a = abs_of<S>(p.value_start());
  S b = abs_of<S>(p.value_end());
  if (a > s) s = a;
  if (b > s) s = b;
  return s;
}

template <class S>
void repair_profile_values(std::vector<S>& y, const S& scale) {
  if constexpr (scalar_traits<S>::exact) {
    for (std::size_t i = 0; i + 1 < y.size(); ++i)
      if (y[i + 1] < y[i]) throw std::logic_error("continuum: exact update not monotone");
  } else {
    const S tol = scalar_traits<S>::from_int(1000) * scalar_traits<S>::eps(scale) * scale;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) {
      if (y[i + 1] < y[i]) {
        if (y[i] - y[i + 1] > tol)
          throw std::logic_error("continuum: update not monotone beyond rounding slack");
        y[i + 1] = y[i];
      }
    }
  }
}

template <class S>
std::vector<S> evaluate_update(const Profile<S>& p, const std::vector<S>& at) {
  std::vector<S> y(at.size(), scalar_traits<S>::from_int(0));
#ifdef _OPENMP
  if constexpr (std::is_same_v<S, double>) {
    if (at.size() >= 256 && omp_get_max_threads() > 1) {
      const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(at.size());
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < n; ++i) y[i] = update_at(p, at[i]);
      return y;
    }
  }
#endif
  for (std::size_t i = 0; i < at.size(); ++i) y[i] = update_at(p, at[i]);
  return y;
}

template <class S>
void sort_unique(std::vector<S>& xs) {
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
}

}  // namespace detail

template <class S>
struct StepOptions {
  S tol;
  long budget = 1000000;
  // Mirror candidate abscissae about the domain center; keeps the breakpoint
  // set of antisymmetric profiles symmetric so the two halves round alike.
  bool mirror_candidates = false;
};

// One exact-evaluation step of the continuum dynamics, returned as a
// piecewise-linear approximation within sup-norm tol.  Breakpoint values are
// genuine update values; candidates sit at every input breakpoint and at
// every abscissa where a window endpoint crosses an input breakpoint, so all
// kinks of the true update are breakpoints of the output.  Remaining smooth
// stretches are bisected until quarter- and mid-point probes match the chord.
template <class S>
Profile<S> continuum_step(const Profile<S>& p, const StepOptions<S>& opt) {
  const S zero = scalar_traits<S>::from_int(0);
  const S one = scalar_traits<S>::from_int(1);
  if (!(opt.tol > zero)) throw std::invalid_argument("continuum_step: tol must be positive");
  if (opt.budget < 2) throw std::invalid_argument("continuum_step: unusable budget");

  // Range <= 1 collapses to the global mean in one step.
  if (!(profile_range(p) > one))
    return Profile<S>::constant(p.domain_start(), p.domain_end(), p.global_mean());

  const S two_c = p.domain_start() + p.domain_end();  // reflection: a -> two_c - a

  std::vector<S> cand = p.breakpoints();
  const S lo = p.value_start(), hi = p.value_end();
  for (const S& val : p.values()) {
    for (const S& target : {val - one, val + one}) {
      if (target > lo && target < hi) {
        cand.push_back(p.preimage_inf(target));
        cand.push_back(p.preimage_sup(target));
      }
    }
  }
  if (opt.mirror_candidates) {
    std::vector<S> mirrored;
    mirrored.reserve(cand.size());
    for (const S& a : cand) {
      S m = two_c - a;
      if (m > p.domain_start() && m < p.domain_end()) mirrored.push_back(m);
    }
    cand.insert(cand.end(), mirrored.begin(), mirrored.end());
  }
  detail::sort_unique(cand);

  std::vector<S> ys = detail::evaluate_update(p, cand);

  const S four = scalar_traits<S>::from_int(4);
  const S scale = detail::profile_value_scale(p);

  // Deterministic worklist refinement: probe each unverified gap at 1/4,
  // 1/2, 3/4; where the chord misses by more than tol, split at the midpoint.
  // A gap's endpoints never change once created, so a gap that passes its
  // probes is settled for good; only children of split gaps are re-examined.
  // Probes are batched so double-mode evaluation can run in parallel without
  // changing the resulting breakpoint set.
  auto value_at = [&](const S& a) {
    std::size_t i = static_cast<std::size_t>(
        std::lower_bound(cand.begin(), cand.end(), a) - cand.begin());
    return ys[i];
  };

  std::vector<std::pair<S, S>> pending;
  for (std::size_t i = 0; i + 1 < cand.size(); ++i) pending.emplace_back(cand[i], cand[i + 1]);

  while (!pending.empty()) {
    struct Job {
      S a, b, q1, mid, q3;
    };
    std::vector<Job> jobs;
    std::vector<S> probe_pts;
    for (const auto& [a, b] : pending) {
      S quarter = (b - a) / four;
      S mid = a + quarter + quarter;
      if (!(a < mid && mid < b)) continue;  // representability floor: accept as-is
      S q1 = a + quarter, q3 = mid + quarter;
      if (!(a < q1)) q1 = mid;
      if (!(q3 < b)) q3 = mid;
      jobs.push_back({a, b, q1, mid, q3});
      probe_pts.push_back(q1);
      probe_pts.push_back(mid);
      probe_pts.push_back(q3);
    }
    pending.clear();
    if (jobs.empty()) break;
    std::vector<S> pv = detail::evaluate_update(p, probe_pts);

    std::vector<S> new_a, new_y;
    for (std::size_t g = 0; g < jobs.size(); ++g) {
      const Job& j = jobs[g];
      const S ya = value_at(j.a), yb = value_at(j.b);
      auto chord = [&](const S& at) { return ya + (at - j.a) * (yb - ya) / (j.b - j.a); };
      const S* vals = &pv[3 * g];
      bool bad = abs_of<S>(chord(j.q1) - vals[0]) > opt.tol ||
                 abs_of<S>(chord(j.mid) - vals[1]) > opt.tol ||
                 abs_of<S>(chord(j.q3) - vals[2]) > opt.tol;
      if (bad) {
        new_a.push_back(j.mid);
        new_y.push_back(vals[1]);
      }
    }
    if (new_a.empty()) break;

    if (opt.mirror_candidates) {
      // Close the split set under reflection so borderline tolerance checks
      // cannot desymmetrize the grid.  Mirror points get honestly evaluated.
      std::vector<S> extra;
      for (const S& a : new_a) {
        S m = two_c - a;
        if (m > p.domain_start() && m < p.domain_end() &&
            !std::binary_search(cand.begin(), cand.end(), m) &&
            std::find(new_a.begin(), new_a.end(), m) == new_a.end() &&
            std::find(extra.begin(), extra.end(), m) == extra.end())
          extra.push_back(m);
      }
      std::vector<S> extra_val = detail::evaluate_update(p, extra);
      new_a.insert(new_a.end(), extra.begin(), extra.end());
      new_y.insert(new_y.end(), extra_val.begin(), extra_val.end());
    }

    if (static_cast<long>(cand.size() + new_a.size()) > opt.budget)
      throw std::runtime_error("refinement overflow");

    std::vector<std::pair<S, S>> merged;
    merged.reserve(cand.size() + new_a.size());
    for (std::size_t i = 0; i < cand.size(); ++i) merged.emplace_back(cand[i], ys[i]);
    for (std::size_t i = 0; i < new_a.size(); ++i) merged.emplace_back(new_a[i], new_y[i]);
    std::sort(merged.begin(), merged.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    cand.clear();
    ys.clear();
    for (auto& [a, y] : merged) {
      if (!cand.empty() && a == cand.back()) continue;
      cand.push_back(a);
      ys.push_back(y);
    }

    // Re-examine exactly the gaps flanking each inserted point.
    detail::sort_unique(new_a);
    for (const S& m : new_a) {
      std::size_t i = static_cast<std::size_t>(
          std::lower_bound(cand.begin(), cand.end(), m) - cand.begin());
      if (i > 0) pending.emplace_back(cand[i - 1], cand[i]);
      if (i + 1 < cand.size()) pending.emplace_back(cand[i], cand[i + 1]);
    }
    std::sort(pending.begin(), pending.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    pending.erase(std::unique(pending.begin(), pending.end()), pending.end());
  }

  detail::repair_profile_values(ys, scale);
  return Profile<S>(std::move(cand), std::move(ys));
}

template <class S>
Profile<S> continuum_step(const Profile<S>& p, const S& tol) {
  StepOptions<S> opt;
  opt.tol = tol;
  return continuum_step(p, opt);
}

// Derivative of the updated profile at a non-event abscissa, in the chain-rule
// form: window endpoints move at rate x'(alpha)/x'(endpoint) unless pinned at
// a domain edge, and the integral's endpoint contributions weigh in at
// 1 -/+ (x_next - x(alpha)).
template <class S>
S derivative_next(const Profile<S>& p, const S& alpha, const S& x_next) {
  const S zero = scalar_traits<S>::from_int(0);
  const S one = scalar_traits<S>::from_int(1);
  const std::vector<S>& bp = p.breakpoints();

  if (alpha <= p.domain_start() || alpha >= p.domain_end())
    throw std::runtime_error("kink");
  std::size_t k = p.segment_index(alpha);
  if (alpha == bp[k]) throw std::runtime_error("kink");
  const S slope_a = p.segment_slope(k);
  const S xa = p.eval(alpha);

  auto interior_slope = [&](const S& at) {
    std::size_t j = p.segment_index(at);
    if (j + 1 == p.size()) j -= 1;
    if (at == bp[j] || (j + 1 < p.size() && at == bp[j + 1])) throw std::runtime_error("kink");
    return p.segment_slope(j);
  };

  S uprime = zero, vprime = zero;
  S u = p.domain_start(), v = p.domain_end();
  if (xa == p.value_start() + one || xa == p.value_end() - one) throw std::runtime_error("kink");
  if (xa > p.value_start() + one) {
    u = p.preimage_inf(xa - one);
    uprime = slope_a / interior_slope(u);
  }
  if (xa < p.value_end() - one) {
    v = p.preimage_sup(xa + one);
    vprime = slope_a / interior_slope(v);
  }
  const S w = v - u;
  return (uprime * (one + x_next - xa) + vprime * (one + xa - x_next)) / w;
}

// Largest deviation from antisymmetry about the domain center, probed on the
// union of the breakpoints and their reflections.
template <class S>
S antisymmetry_defect(const Profile<S>& p) {
  const S two_c = p.domain_start() + p.domain_end();
  const S target = p.value_start() + p.value_end();
  std::vector<S> grid = p.breakpoints();
  for (const S& a : p.breakpoints()) grid.push_back(two_c - a);
  detail::sort_unique(grid);
  S worst = scalar_traits<S>::from_int(0);
  for (const S& a : grid) {
    S d = abs_of<S>(p.eval(a) + p.eval(two_c - a) - target);
    if (d > worst) worst = d;
  }
  return worst;
}

// Replace the profile by the antisymmetric average of itself and its mirror.
template <class S>
Profile<S> symmetrize(const Profile<S>& p) {
  const S two_c = p.domain_start() + p.domain_end();
  const S target = p.value_start() + p.value_end();
  const S two = scalar_traits<S>::from_int(2);
  std::vector<S> grid = p.breakpoints();
  for (const S& a : p.breakpoints()) grid.push_back(two_c - a);
  detail::sort_unique(grid);
  std::vector<S> vals;
  vals.reserve(grid.size());
  for (const S& a : grid) vals.push_back((p.eval(a) + target - p.eval(two_c - a)) / two);
  detail::repair_profile_values(vals, detail::profile_value_scale(p));
  return Profile<S>(std::move(grid), std::move(vals));
}

namespace detail {

// Greedy corridor walk: indices of a breakpoint subset whose chords pass
// within tol of every dropped point.  The corridor constraint from an
// interior point is linear in the chord slope, so a running slope-cone
// intersection decides each extension in O(1).
template <class S>
std::vector<std::size_t> corridor_keep(const std::vector<S>& a, const std::vector<S>& v,
                                       const S& tol) {
  std::vector<std::size_t> keep;
  keep.push_back(0);
  std::size_t anchor = 0;
  bool have_lo = false, have_hi = false;
  S slo = scalar_traits<S>::from_int(0), shi = slo;
  for (std::size_t j = 1; j < a.size(); ++j) {
    S run = a[j] - a[anchor];
    S slope = (v[j] - v[anchor]) / run;
    bool fits = (!have_lo || !(slope < slo)) && (!have_hi || !(slope > shi));
    if (!fits || j + 1 == a.size()) {
      if (!fits) {
        anchor = j - 1;
        keep.push_back(anchor);
        have_lo = have_hi = false;
        run = a[j] - a[anchor];
      }
      if (j + 1 == a.size()) {
        keep.push_back(j);
        break;
      }
    }
    // Fold j's corridor into the cone for future extensions past j.
    S lo_j = (v[j] - tol - v[anchor]) / run;
    S hi_j = (v[j] + tol - v[anchor]) / run;
    if (!have_lo || lo_j > slo) slo = lo_j, have_lo = true;
    if (!have_hi || hi_j < shi) shi = hi_j, have_hi = true;
  }
  return keep;
}

}  // namespace detail

// Coarsen within a sup-norm corridor: keeps a subset of breakpoints (values
// untouched) such that the chords stay within tol of every dropped point.
template <class S>
Profile<S> simplify_profile(const Profile<S>& p, const S& tol) {
  if (!(tol > scalar_traits<S>::from_int(0)))
    throw std::invalid_argument("simplify_profile: tol must be positive");
  const std::vector<S>& a = p.breakpoints();
  const std::vector<S>& v = p.values();
  std::vector<std::size_t> keep = detail::corridor_keep(a, v, tol);
  std::vector<S> ka, kv;
  ka.reserve(keep.size());
  kv.reserve(keep.size());
  for (std::size_t i : keep) {
    ka.push_back(a[i]);
    kv.push_back(v[i]);
  }
  return Profile<S>(std::move(ka), std::move(kv));
}

// Corridor coarsening that keeps the breakpoint set mirror-symmetric about
// the domain center: the kept set is closed under reflection, so an
// antisymmetric profile stays antisymmetric.  Reflected points that fall
// between original breakpoints get interpolated values, so the corridor
// guarantee loosens to 2*tol.
template <class S>
Profile<S> simplify_profile_symmetric(const Profile<S>& p, const S& tol) {
  if (!(tol > scalar_traits<S>::from_int(0)))
    throw std::invalid_argument("simplify_profile_symmetric: tol must be positive");
  const std::vector<S>& a = p.breakpoints();
  const std::vector<S>& v = p.values();
  const S two_c = p.domain_start() + p.domain_end();
  std::vector<std::size_t> keep = detail::corridor_keep(a, v, tol);
  std::vector<S> ka;
  ka.reserve(2 * keep.size());
  for (std::size_t i : keep) ka.push_back(a[i]);
  for (std::size_t i : keep) {
    S m = two_c - a[i];
    if (m > p.domain_start() && m < p.domain_end()) ka.push_back(m);
  }
  detail::sort_unique(ka);
  std::vector<S> kv;
  kv.reserve(ka.size());
  for (const S& at : ka) kv.push_back(p.eval(at));
  detail::repair_profile_values(kv, detail::profile_value_scale(p));
  return Profile<S>(std::move(ka), std::move(kv));
}

}  // namespace hk
