#pragma once

// Kolmogorov-Smirnov tests, Cohen's d, sample skewness and log-log OLS.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "crowdlab/error.hpp"

namespace crowdlab::stats {

enum class KsMethod { exact_permutation, asymptotic };

inline const char* to_string(KsMethod m) {
  return m == KsMethod::exact_permutation ? "exact_permutation" : "asymptotic";
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  KsMethod method = KsMethod::asymptotic;
  std::uint64_t permutations = 0;  // orderings enumerated; 0 for asymptotic
};

/// Largest C(n+m, n) for which the two-sample p-value is computed exactly.
inline constexpr std::uint64_t kExactPermutationLimit = 200'000;

inline double mean(std::span<const double> a) {
  if (a.empty()) throw ValidationError("mean of an empty sample");
  return std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
}

inline double median(std::vector<double> a) {
  if (a.empty()) throw ValidationError("median of an empty sample");
  std::sort(a.begin(), a.end());
  const std::size_t n = a.size();
  return n % 2 == 1 ? a[n / 2] : 0.5 * (a[n / 2 - 1] + a[n / 2]);
}

/// Unbiased sample variance.
inline double variance(std::span<const double> a) {
  if (a.size() < 2) throw ValidationError("variance needs at least two values");
  const double m = mean(a);
  double ss = 0.0;
  for (double x : a) ss += (x - m) * (x - m);
  return ss / static_cast<double>(a.size() - 1);
}

/// Kolmogorov distribution survival function Q(lambda) = P(K > lambda).
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double p = 0.0;
  if (lambda < 1.18) {
    // Jacobi theta form; converges fast for small lambda.
    const double y = std::exp(-std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda));
    double sum = 0.0;
    for (int k = 1; k <= 40; k += 2) sum += std::pow(y, k * k);
    p = 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum;
  } else {
    for (int k = 1; k <= 100; ++k) {
      const double term = std::exp(-2.0 * k * k * lambda * lambda);
      p += (k % 2 == 1 ? 2.0 : -2.0) * term;
      if (term < 1e-17) break;
    }
  }
  return std::clamp(p, 0.0, 1.0);
}

inline double binomial_coefficient(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::uint64_t i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(c);
}

namespace detail {

inline void require_sample(std::span<const double> a, const char* name) {
  if (a.empty()) throw ValidationError(std::string("sample ") + name + " is empty");
  for (double x : a) {
    if (!std::isfinite(x)) throw ValidationError(std::string("sample ") + name + " contains a non-finite value");
  }
}

// Pooled sorted unique values with tie block sizes: block[i] is the
// number of pooled values equal to unique[i].
struct Pooled {
  std::vector<double> unique;
  std::vector<std::size_t> block;
};

inline Pooled pool(std::span<const double> a, std::span<const double> b) {
  std::vector<double> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  Pooled p;
  for (double x : all) {
    if (p.unique.empty() || x != p.unique.back()) {
      p.unique.push_back(x);
      p.block.push_back(0);
    }
    ++p.block.back();
  }
  return p;
}

inline double two_sample_statistic(std::span<const double> a, std::span<const double> b) {
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const auto pooled = pool(a, b);
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  double d = 0.0;
  std::size_t ia = 0;
  std::size_t ib = 0;
  for (double x : pooled.unique) {
    while (ia < sa.size() && sa[ia] <= x) ++ia;
    while (ib < sb.size() && sb[ib] <= x) ++ib;
    d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
  }
  return d;
}

// Fraction of the C(n+m, n) assignments of the pooled values to the two
// groups whose statistic reaches `observed`. Counts lattice paths: after
// placing i values in group a and j in group b the ECDF gap is
// |i/n - j/m|, checked only where a tie block ends.
inline double exact_p_value(const Pooled& pooled, std::size_t n, std::size_t m, double observed) {
  const double threshold = observed - 1e-12;
  std::vector<bool> checkpoint(n + m + 1, false);
  std::size_t pos = 0;
  for (auto b : pooled.block) checkpoint[pos += b] = true;

  auto hits = [&](std::size_t i, std::size_t j) {
    return checkpoint[i + j] &&
           std::abs(static_cast<double>(i) / static_cast<double>(n) - static_cast<double>(j) / static_cast<double>(m)) >=
               threshold;
  };
  // safe[j] = number of paths reaching (i, j) without hitting.
  std::vector<double> safe(m + 1, 0.0);
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= m; ++j) {
      double v = 0.0;
      if (i == 0 && j == 0) {
        v = 1.0;
      } else {
        if (i > 0) v += safe[j];
        if (j > 0) v += safe[j - 1];
      }
      if (hits(i, j)) v = 0.0;
      safe[j] = v;
    }
  }
  const double total = binomial_coefficient(n + m, n);
  return std::clamp(1.0 - safe[m] / total, 0.0, 1.0);
}

}  // namespace detail

/// Two-sample K-S test. D is the largest ECDF gap over pooled points. The
/// p-value is exact (all C(n+m, n) group assignments) up to
/// kExactPermutationLimit orderings, otherwise asymptotic with
/// lambda = D * sqrt(nm / (n + m)).
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  detail::require_sample(a, "a");
  detail::require_sample(b, "b");
  KsResult r;
  r.statistic = detail::two_sample_statistic(a, b);
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const double orderings = binomial_coefficient(n + m, n);
  if (orderings <= static_cast<double>(kExactPermutationLimit)) {
    r.method = KsMethod::exact_permutation;
    r.permutations = static_cast<std::uint64_t>(orderings);
    r.p_value = detail::exact_p_value(detail::pool(a, b), n, m, r.statistic);
  } else {
    r.method = KsMethod::asymptotic;
    const double en = std::sqrt(static_cast<double>(n) * static_cast<double>(m) / static_cast<double>(n + m));
    r.p_value = kolmogorov_survival(r.statistic * en);
  }
  return r;
}

/// One-sample K-S test against a distribution function, asymptotic p with
/// lambda = sqrt(n) * D.
template <typename Cdf>
KsResult ks_one_sample(std::span<const double> a, Cdf&& cdf) {
  detail::require_sample(a, "a");
  std::vector<double> s(a.begin(), a.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  double prev = -1.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("reference CDF returned a value outside [0, 1]");
    if (f < prev - 1e-12) throw ValidationError("reference CDF is not monotone on the sample points");
    prev = f;
    const double rank = static_cast<double>(i + 1);
    d = std::max({d, std::abs(rank / n - f), std::abs((rank - 1.0) / n - f)});
  }
  KsResult r;
  r.statistic = d;
  r.method = KsMethod::asymptotic;
  r.p_value = kolmogorov_survival(std::sqrt(n) * d);
  return r;
}

inline double normal_cdf(double x, double mu, double sigma) {
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::numbers::sqrt2));
}

/// Standardized mean difference with pooled standard deviation.
inline double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw ValidationError("Cohen's d needs at least two values per group");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double pooled = ((na - 1.0) * variance(a) + (nb - 1.0) * variance(b)) / (na + nb - 2.0);
  if (!(pooled > 0.0)) throw ValidationError("Cohen's d is undefined for zero pooled variance");
  return (mean(a) - mean(b)) / std::sqrt(pooled);
}

/// Adjusted Fisher-Pearson skewness sqrt(n(n-1))/(n-2) * m3 / m2^1.5.
inline double skewness(std::span<const double> a) {
  if (a.size() < 3) throw ValidationError("skewness needs at least three values");
  const double n = static_cast<double>(a.size());
  const double m = mean(a);
  double m2 = 0.0;
  double m3 = 0.0;
  for (double x : a) {
    const double d = x - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (!(m2 > 0.0)) throw ValidationError("skewness is undefined for zero variance");
  return std::sqrt(n * (n - 1.0)) / (n - 2.0) * m3 / std::pow(m2, 1.5);
}

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_std_error = 0.0;
  std::size_t n = 0;
};

/// Least squares fit of log y on log x.
inline OlsFit ols_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("x and y must have equal length");
  if (x.size() < 3) throw ValidationError("regression needs at least three points");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw ValidationError("log-log regression needs positive finite values (index " + std::to_string(i) + ")");
    }
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double mx = mean(lx);
  const double my = mean(ly);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw ValidationError("log x has zero variance");
  OlsFit fit;
  fit.n = lx.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss_res += e * e;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 0.0;
  fit.slope_std_error = std::sqrt(ss_res / static_cast<double>(fit.n - 2) / sxx);
  return fit;
}

}  // namespace crowdlab::stats
