#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "odsynth/core/error.hpp"
#include "odsynth/core/seed.hpp"
#include "odsynth/eval/metrics.hpp"

namespace odsynth::eval {

struct TestResult {
  double p = 1.0;
  double statistic = 0.0;
  std::size_t n = 0;  // non-tied pairs used
  bool exact = true;
  bool undefined = false;  // all differences were ties
};

inline std::vector<double> drop_ties(std::span<const double> diffs) {
  std::vector<double> out;
  for (double d : diffs) {
    if (!std::isfinite(d)) throw DomainError("paired differences must be finite");
    if (d != 0.0) out.push_back(d);
  }
  return out;
}

namespace detail {
inline double signed_sum(std::span<const double> d, std::uint64_t pattern) {
  double t = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) t += (pattern >> i & 1u) ? -d[i] : d[i];
  return t;
}
}  // namespace detail

inline constexpr std::size_t kPermutationExactMax = 20;
inline constexpr std::size_t kWilcoxonExactMax = 25;

// One-sided sign-flip test of T = sum d_i, p = Pr(T_b >= T). Exact over all
// 2^n patterns for n <= 20, otherwise Monte Carlo with the identity pattern
// counted once in numerator and denominator.
inline TestResult permutation_test(std::span<const double> diffs, std::size_t n_resamples = 10000,
                                   const SeedPath& seed = SeedPath(0)) {
  const auto d = drop_ties(diffs);
  TestResult r;
  r.n = d.size();
  if (d.empty()) {
    r.undefined = true;
    return r;
  }
  double scale = 0.0;
  for (double v : d) scale += std::abs(v);
  const double tol = 1e-12 * scale;
  r.statistic = detail::signed_sum(d, 0);
  if (d.size() <= kPermutationExactMax) {
    const std::uint64_t total = std::uint64_t{1} << d.size();
    std::uint64_t hits = 0;
    for (std::uint64_t s = 0; s < total; ++s)
      if (detail::signed_sum(d, s) >= r.statistic - tol) ++hits;
    r.p = static_cast<double>(hits) / static_cast<double>(total);
    return r;
  }
  if (n_resamples == 0) throw ConfigError("permutation test needs at least one resample");
  r.exact = false;
  Rng rng = seed.rng();
  std::size_t hits = 0;
  for (std::size_t b = 0; b < n_resamples; ++b) {
    double t = 0.0;
    for (double v : d) t += coin(rng) ? -v : v;
    if (t >= r.statistic - tol) ++hits;
  }
  r.p = static_cast<double>(hits + 1) / static_cast<double>(n_resamples + 1);
  return r;
}

// One-sided signed-rank test on W+ (sum of ranks of positive differences,
// mid-ranks for tied magnitudes). Exact null for n <= 25; beyond that the
// normal approximation with tie-corrected variance and continuity correction.
inline TestResult wilcoxon_test(std::span<const double> diffs) {
  const auto d = drop_ties(diffs);
  TestResult r;
  r.n = d.size();
  if (d.empty()) {
    r.undefined = true;
    return r;
  }
  std::vector<double> mag(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) mag[i] = std::abs(d[i]);
  const auto ranks = average_ranks(mag);
  double w = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i] > 0.0) w += ranks[i];
  r.statistic = w;
  const std::size_t n = d.size();
  if (n <= kWilcoxonExactMax) {
    // Mid-ranks are multiples of 1/2, so doubled ranks are integers.
    std::vector<std::size_t> twice(n);
    std::size_t max_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      twice[i] = static_cast<std::size_t>(std::llround(2.0 * ranks[i]));
      max_sum += twice[i];
    }
    std::vector<double> count(max_sum + 1, 0.0);
    count[0] = 1.0;
    std::size_t reach = 0;
    for (auto t : twice) {
      for (std::size_t s = reach + 1; s-- > 0;) count[s + t] += count[s];
      reach += t;
    }
    const auto obs = static_cast<std::size_t>(std::llround(2.0 * w));
    double hits = 0.0;
    for (std::size_t s = obs; s <= max_sum; ++s) hits += count[s];
    r.p = hits / std::ldexp(1.0, static_cast<int>(n));
    return r;
  }
  r.exact = false;
  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
  std::vector<double> sorted = mag;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    var -= (t * t * t - t) / 48.0;
    i = j + 1;
  }
  if (var <= 0.0) {
    r.p = w >= mean ? 1.0 : 0.0;
    return r;
  }
  const double z = (w - mean - 0.5) / std::sqrt(var);
  r.p = boost::math::cdf(boost::math::complement(boost::math::normal_distribution<>(), z));
  return r;
}

}  // namespace odsynth::eval
