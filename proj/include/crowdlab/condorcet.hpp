#pragma once

// Majority-vote reliability of independent jurors with equal competence.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "crowdlab/error.hpp"
#include "crowdlab/rng.hpp"

namespace crowdlab {

struct JuryResult {
  std::uint64_t n = 1;
  double p = 0.5;
  double majority_prob = 0.5;
};

namespace detail {

inline void check_jury(std::uint64_t n, double p) {
  if (n == 0 || n % 2 == 0) {
    throw ValidationError("jury size must be a positive odd number, got " + std::to_string(n));
  }
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("competence must lie in [0, 1]");
}

// Sum of Binomial(n, p) pmf over k in [lo, hi], accumulated in log space
// around the largest term.
inline double binomial_range(std::uint64_t n, double p, std::uint64_t lo, std::uint64_t hi) {
  if (lo > hi) return 0.0;
  if (p == 0.0) return lo == 0 ? 1.0 : 0.0;
  if (p == 1.0) return hi == n ? 1.0 : 0.0;
  const double nn = static_cast<double>(n);
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  const double log_n_fact = std::lgamma(nn + 1.0);
  auto log_term = [&](std::uint64_t k) {
    const double kk = static_cast<double>(k);
    return log_n_fact - std::lgamma(kk + 1.0) - std::lgamma(nn - kk + 1.0) + kk * log_p + (nn - kk) * log_q;
  };
  std::vector<double> logs;
  logs.reserve(hi - lo + 1);
  double peak = -INFINITY;
  for (std::uint64_t k = lo; k <= hi; ++k) {
    logs.push_back(log_term(k));
    peak = std::max(peak, logs.back());
  }
  double sum = 0.0;
  for (double l : logs) sum += std::exp(l - peak);
  return std::exp(peak + std::log(sum));
}

}  // namespace detail

/// P(a strict majority of n independent jurors, each right with
/// probability p, is right). n must be odd.
///
/// Whichever tail is the small one is summed directly so values near 1 keep
/// full precision; valid well past n = 10,001.
inline double majority_prob(std::uint64_t n, double p) {
  detail::check_jury(n, p);
  if (p == 0.5) return 0.5;
  const std::uint64_t need = (n + 1) / 2;
  if (p > 0.5) return 1.0 - detail::binomial_range(n, p, 0, need - 1);
  return detail::binomial_range(n, p, need, n);
}

inline JuryResult jury(std::uint64_t n, double p) { return {n, p, majority_prob(n, p)}; }

/// Smallest odd n with majority_prob(n, p) >= target, by galloping then
/// bisection over odd sizes (majority_prob is increasing in n for p > 0.5).
inline std::uint64_t min_jury_size(double p, double target) {
  if (!(p > 0.5)) throw ValidationError("target is unreachable for competence <= 0.5");
  if (!(p <= 1.0)) throw ValidationError("competence must lie in [0, 1]");
  if (!(target < 1.0)) throw ValidationError("target must be below 1");
  if (majority_prob(1, p) >= target) return 1;
  // Sizes are indexed as n = 2i + 1.
  std::uint64_t lo = 0;  // known to miss
  std::uint64_t hi = 1;
  while (majority_prob(2 * hi + 1, p) < target) {
    lo = hi;
    hi *= 2;
    if (hi > (std::uint64_t{1} << 40)) throw ValidationError("target not reached by any practical jury size");
  }
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (majority_prob(2 * mid + 1, p) >= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 2 * hi + 1;
}

/// Monte-Carlo frequency of a correct majority over `trials` juries.
inline double simulate_jury(std::uint64_t n, double p, std::uint64_t trials, std::uint64_t seed) {
  detail::check_jury(n, p);
  if (trials == 0) throw ValidationError("trials must be at least 1");
  auto rng = CounterRng::derive(seed, n, static_cast<std::uint64_t>(p * 1e9));
  std::uint64_t wins = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    std::uint64_t right = 0;
    for (std::uint64_t j = 0; j < n; ++j) right += rng.bernoulli(p) ? 1 : 0;
    wins += 2 * right > n ? 1 : 0;
  }
  return static_cast<double>(wins) / static_cast<double>(trials);
}

}  // namespace crowdlab
