#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hk/scalar.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hk {

// Sorted opinions of N agents; confidence bound fixed at 1.  Nondecreasing
// order is a class invariant, checked on construction.
template <class S>
class OpinionConfig {
public:
  OpinionConfig() = default;
  explicit OpinionConfig(std::vector<S> xs) : x_(std::move(xs)) {
    if (x_.empty()) throw std::invalid_argument("OpinionConfig: need at least one agent");
    for (std::size_t i = 0; i + 1 < x_.size(); ++i)
      if (x_[i + 1] < x_[i])
        throw std::invalid_argument("OpinionConfig: opinions must be nondecreasing");
  }

  // Sorts first; for sampled data.
  static OpinionConfig from_unsorted(std::vector<S> xs) {
    std::sort(xs.begin(), xs.end());
    return OpinionConfig(std::move(xs));
  }

  std::size_t size() const { return x_.size(); }
  const S& operator[](std::size_t i) const { return x_[i]; }
  const std::vector<S>& values() const { return x_; }
  const S& front() const { return x_.front(); }
  const S& back() const { return x_.back(); }
  S range() const { return x_.back() - x_.front(); }

private:
  std::vector<S> x_;
};

namespace detail {

template <class S>
S magnitude_scale(const std::vector<S>& x) {
  S m = scalar_traits<S>::from_int(1);
  if (!x.empty()) {
    S a = abs_of(x.front()), b = abs_of(x.back());
    if (a > m) m = a;
    if (b > m) m = b;
  }
  return m;
}

}  // namespace detail

// The inclusion threshold for "within distance 1 of each other".  Exact mode
// uses 1 itself.  Floating modes widen it by 1e-9 * scale: the equidistant
// states repeatedly place agents at distance exactly 1 (a boundary tie that
// shapes the whole trajectory), and once rounding drifts such a distance to
// 1 + 1e-16 the tie silently flips, freezing runs several times too early.
// The slack keeps structural ties connected while staying far below any gap
// a double trajectory can meaningfully resolve.
template <class S>
S confidence_limit(const std::vector<S>& x) {
  const S one = scalar_traits<S>::from_int(1);
  if constexpr (scalar_traits<S>::exact)
    return one;
  else
    return one + scalar_traits<S>::from_double(1e-9) * detail::magnitude_scale(x);
}

// Indices [lo, hi] of the agents within the confidence limit of agent i
// (inclusive on both the index range and the boundary).
template <class S>
std::pair<std::size_t, std::size_t> neighborhood_window(const OpinionConfig<S>& c, std::size_t i) {
  if (i >= c.size()) throw std::out_of_range("neighborhood_window: agent index out of range");
  const std::vector<S>& x = c.values();
  const S lim = confidence_limit(x);
  auto lo = std::lower_bound(x.begin(), x.end(), x[i] - lim);
  auto hi = std::upper_bound(x.begin(), x.end(), x[i] + lim);
  return {static_cast<std::size_t>(lo - x.begin()), static_cast<std::size_t>(hi - x.begin() - 1)};
}

// Naive quadratic update: each agent scans everyone and averages the opinions
// within distance 1.  Kept as the reference the fast path is tested against.
template <class S>
OpinionConfig<S> hk_step_reference(const OpinionConfig<S>& c) {
  const std::vector<S>& x = c.values();
  const std::size_t n = x.size();
  const S lim = confidence_limit(x);
  std::vector<S> y;
  y.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    S acc = scalar_traits<S>::from_int(0);
    long cnt = 0;
    std::size_t first = n, last = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (x[j] >= x[i] - lim && x[j] <= x[i] + lim) {
        acc += x[j];
        ++cnt;
        if (first == n) first = j;
        last = j;
      }
    }
    S m = acc / scalar_traits<S>::from_int(cnt);
    if constexpr (!scalar_traits<S>::exact) {
      // The true mean lies in the window's value span; summation rounding can
      // land just outside, and clamping only ever moves back toward it.
      if (m < x[first]) m = x[first];
      if (m > x[last]) m = x[last];
    }
    y.push_back(m);
  }
  return OpinionConfig<S>(std::move(y));
}

namespace detail {

// Both window endpoints are nondecreasing in i, so one sweep finds them all.
template <class S>
std::vector<std::pair<std::size_t, std::size_t>> windows_two_pointer(const std::vector<S>& x) {
  const std::size_t n = x.size();
  const S lim = confidence_limit(x);
  std::vector<std::pair<std::size_t, std::size_t>> win(n);
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (x[lo] < x[i] - lim) ++lo;
    if (hi < i) hi = i;
    while (hi + 1 < n && x[hi + 1] <= x[i] + lim) ++hi;
    win[i] = {lo, hi};
  }
  return win;
}

// Window means over a shared integer prefix: numerators scaled to the common
// denominator D, so each mean is (P[hi+1]-P[lo]) / (D * count), reduced once.
inline std::vector<Rational> window_means_exact(const std::vector<Rational>& x,
                                                const std::vector<std::pair<std::size_t, std::size_t>>& w) {
  mpz_class den(1);
  for (const Rational& v : x) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), v.denominator().get_mpz_t());
  std::vector<mpz_class> prefix(x.size() + 1, mpz_class(0));
  for (std::size_t k = 0; k < x.size(); ++k)
    prefix[k + 1] = prefix[k] + x[k].numerator() * (den / x[k].denominator());
  std::vector<Rational> y;
  y.reserve(x.size());
  for (auto [lo, hi] : w) {
    mpz_class cnt(static_cast<long>(hi - lo + 1));
    y.push_back(Rational::from_fraction(prefix[hi + 1] - prefix[lo], den * cnt));
  }
  return y;
}

// Small monotonicity violations from prefix-sum rounding get clamped; anything
// larger is a bug, not noise.
template <class S>
void repair_order(std::vector<S>& y, const S& scale) {
  if constexpr (scalar_traits<S>::exact) {
    for (std::size_t i = 0; i + 1 < y.size(); ++i)
      if (y[i + 1] < y[i]) throw std::logic_error("hk_step: exact output not sorted");
  } else {
    const S tol = scalar_traits<S>::from_int(64 * static_cast<long>(y.size())) *
                  scalar_traits<S>::eps(scale) * scale;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) {
      if (y[i + 1] < y[i]) {
        if (y[i] - y[i + 1] > tol) throw std::logic_error("hk_step: output not sorted beyond rounding slack");
        y[i + 1] = y[i];
      }
    }
  }
}

}  // namespace detail

// One synchronous update: every agent moves to the mean of the opinions within
// distance 1 (its own included).  O(N): window endpoints via two monotone
// pointers, sums via one prefix array.  With OpenMP and a large double config,
// windows come from per-agent binary searches instead; both paths use the same
// prefix array and the same final division, so results are bit-identical.
template <class S>
OpinionConfig<S> hk_step(const OpinionConfig<S>& c) {
  const std::vector<S>& x = c.values();
  const std::size_t n = x.size();

  if constexpr (scalar_traits<S>::exact) {
    return OpinionConfig<S>(detail::window_means_exact(x, detail::windows_two_pointer(x)));
  } else {
    std::vector<S> prefix(n + 1, scalar_traits<S>::from_int(0));
    for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + x[k];
    std::vector<S> y(n, scalar_traits<S>::from_int(0));
#ifdef _OPENMP
    if constexpr (std::is_same_v<S, double>) {
      if (n >= 2048 && omp_get_max_threads() > 1) {
        const double lim = confidence_limit(x);
#pragma omp parallel for schedule(static)
        for (std::size_t i = 0; i < n; ++i) {
          auto l = std::lower_bound(x.begin(), x.end(), x[i] - lim) - x.begin();
          auto h = std::upper_bound(x.begin(), x.end(), x[i] + lim) - x.begin() - 1;
          double m = (prefix[h + 1] - prefix[l]) / static_cast<double>(h - l + 1);
          y[i] = std::clamp(m, x[l], x[h]);
        }
        S scale = detail::magnitude_scale(x);
        detail::repair_order(y, scale);
        return OpinionConfig<S>(std::move(y));
      }
    }
#endif
    auto win = detail::windows_two_pointer(x);
    for (std::size_t i = 0; i < n; ++i) {
      auto [l, h] = win[i];
      S m = (prefix[h + 1] - prefix[l]) / scalar_traits<S>::from_int(static_cast<long>(h - l + 1));
      if (m < x[l]) m = x[l];
      if (m > x[h]) m = x[h];
      y[i] = m;
    }
    S scale = detail::magnitude_scale(x);
    detail::repair_order(y, scale);
    return OpinionConfig<S>(std::move(y));
  }
}

// Equilibrium: distinct opinions are strictly more than the confidence limit
// apart (so nobody's window contains anyone but their own cluster).
template <class S>
bool is_equilibrium(const OpinionConfig<S>& c) {
  const std::vector<S>& x = c.values();
  const S lim = confidence_limit(x);
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    if (x[i + 1] != x[i] && !(x[i + 1] - x[i] > lim)) return false;
  return true;
}

template <class S>
struct Cluster {
  S center;
  long weight;
};

template <class S>
struct ClusterSet {
  std::vector<Cluster<S>> clusters;
  long total_weight() const {
    long t = 0;
    for (const auto& c : clusters) t += c.weight;
    return t;
  }
};

namespace detail {

// Maximal runs of agents whose consecutive gaps are <= tol.
template <class S>
std::vector<std::pair<std::size_t, std::size_t>> group_runs(const std::vector<S>& x, const S& tol) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t start = 0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if (x[i + 1] - x[i] > tol) {
      runs.emplace_back(start, i);
      start = i + 1;
    }
  }
  runs.emplace_back(start, x.size() - 1);
  return runs;
}

}  // namespace detail

template <class S>
S default_merge_tol(const OpinionConfig<S>& c) {
  if constexpr (scalar_traits<S>::exact)
    return scalar_traits<S>::from_int(0);
  else
    return scalar_traits<S>::from_ratio(1, 1000000000L) * c.range();
}

template <class S>
ClusterSet<S> extract_clusters(const OpinionConfig<S>& c, const S& merge_tol) {
  if (merge_tol < scalar_traits<S>::from_int(0))
    throw std::invalid_argument("extract_clusters: negative merge tolerance");
  const std::vector<S>& x = c.values();
  ClusterSet<S> out;
  for (auto [a, b] : detail::group_runs(x, merge_tol)) {
    std::span<const S> members(x.data() + a, b - a + 1);
    out.clusters.push_back({mean(members), static_cast<long>(b - a + 1)});
  }
  return out;
}

template <class S>
ClusterSet<S> extract_clusters(const OpinionConfig<S>& c) {
  return extract_clusters(c, default_merge_tol(c));
}

// Stability of an equilibrium: every pair of clusters is separated by at least
// 1 + w_min/w_max.  Centers are sorted, so adjacent pairs are the binding ones,
// but the full loop is cheap and mirrors the definition.
template <class S>
bool is_stable(const ClusterSet<S>& cs) {
  if (cs.clusters.empty()) throw std::invalid_argument("is_stable: empty cluster set");
  const S one = scalar_traits<S>::from_int(1);
  for (std::size_t i = 0; i < cs.clusters.size(); ++i) {
    for (std::size_t j = i + 1; j < cs.clusters.size(); ++j) {
      long wi = cs.clusters[i].weight, wj = cs.clusters[j].weight;
      S ratio = scalar_traits<S>::from_ratio(std::min(wi, wj), std::max(wi, wj));
      S gap = abs_of(cs.clusters[j].center - cs.clusters[i].center);
      if (!(gap >= one + ratio)) return false;
    }
  }
  return true;
}

template <class S>
struct RunResult {
  OpinionConfig<S> final;
  long steps = 0;
  bool reached_equilibrium = false;
  std::string stop_reason;  // "equilibrium" | "step-limit"
  std::vector<OpinionConfig<S>> trajectory;  // states 0..steps when requested
};

namespace detail {

// Floating-point convergence detector: every cluster has collapsed to width
// <= band and adjacent clusters sit more than 1 + 2*band apart.  One more
// genuine step then maps each cluster onto a single window mean, giving exact
// pointwise equilibrium (all members share the same window, prefix sums and
// division, hence the same bits).
template <class S>
S collapse_band(const std::vector<S>& x) {
  const S scale = magnitude_scale(x);
  return scalar_traits<S>::from_int(1000000L) * scalar_traits<S>::eps(scale) * scale;
}

template <class S>
bool collapse_ready(const OpinionConfig<S>& c) {
  const std::vector<S>& x = c.values();
  const S band = collapse_band(x);
  const S lim = confidence_limit(x);
  auto runs = group_runs(x, band);
  for (auto [a, b] : runs)
    if (x[b] - x[a] > band) return false;
  for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
    const S gap = x[runs[k + 1].first] - x[runs[k].second];
    if (!(gap > lim + band + band)) return false;
  }
  return true;
}

// The spec'd floating-mode verdict: band-merged cluster centers out of each
// other's confidence range (and each band genuinely collapsed).
template <class S>
bool band_equilibrium(const OpinionConfig<S>& c) {
  const std::vector<S>& x = c.values();
  const S band = collapse_band(x);
  const S lim = confidence_limit(x);
  auto runs = group_runs(x, band);
  for (auto [a, b] : runs)
    if (x[b] - x[a] > band) return false;
  for (std::size_t k = 0; k + 1 < runs.size(); ++k)
    if (!(x[runs[k + 1].first] - x[runs[k].second] > lim)) return false;
  return true;
}

}  // namespace detail

inline long default_max_steps(std::size_t n) { return 10 * static_cast<long>(n) + 100; }

// Iterates hk_step until pointwise equilibrium or the step budget runs out.
// Floating backends get the clustering stop rule: once every cluster has
// shrunk inside the collapse band and neighbors are > 1 + 2*band apart, the
// next genuine step maps each cluster onto one shared window mean, which is
// pointwise equilibrium in exact bits.  Only if rounding still leaves a
// discrepancy does the band verdict itself conclude the run, and the reason
// string records that.
template <class S>
RunResult<S> run_to_equilibrium(const OpinionConfig<S>& config, long max_steps,
                                bool keep_trajectory = false) {
  if (max_steps < 0) throw std::invalid_argument("run_to_equilibrium: negative max_steps");
  RunResult<S> res;
  OpinionConfig<S> cur = config;
  if (keep_trajectory) res.trajectory.push_back(cur);
  for (;;) {
    if (is_equilibrium(cur)) {
      res.reached_equilibrium = true;
      res.stop_reason = "equilibrium";
      break;
    }
    if (res.steps >= max_steps) {
      res.stop_reason = "step-limit";
      break;
    }
    bool collapse = false;
    if constexpr (!scalar_traits<S>::exact) collapse = detail::collapse_ready(cur);
    cur = hk_step(cur);
    ++res.steps;
    if (keep_trajectory) res.trajectory.push_back(cur);
    if (collapse && !is_equilibrium(cur) && detail::band_equilibrium(cur)) {
      res.reached_equilibrium = true;
      res.stop_reason = "cluster-collapse";
      break;
    }
  }
  res.final = std::move(cur);
  return res;
}

template <class S>
RunResult<S> run_to_equilibrium(const OpinionConfig<S>& config) {
  return run_to_equilibrium(config, default_max_steps(config.size()));
}

template <class S>
OpinionConfig<S> make_equidistant(long n) {
  if (n < 1) throw std::invalid_argument("make_equidistant: need at least one agent");
  std::vector<S> xs;
  xs.reserve(static_cast<std::size_t>(n));
  for (long i = 1; i <= n; ++i) xs.push_back(scalar_traits<S>::from_int(i));
  return OpinionConfig<S>(std::move(xs));
}

// All agent pairs i < j within distance 1; quadratic in the worst case.
template <class S>
std::vector<std::pair<std::size_t, std::size_t>> receptivity_edges(const OpinionConfig<S>& c) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto [lo, hi] = neighborhood_window(c, i);
    (void)lo;
    for (std::size_t j = i + 1; j <= hi; ++j) edges.emplace_back(i, j);
  }
  return edges;
}

// The receptivity graph of a sorted config is connected iff no consecutive
// gap exceeds the confidence limit.
template <class S>
bool receptivity_connected(const OpinionConfig<S>& c) {
  const std::vector<S>& x = c.values();
  const S lim = confidence_limit(x);
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    if (x[i + 1] - x[i] > lim) return false;
  return true;
}

}  // namespace hk
