#pragma once

// Normal-distribution special functions and log-space accumulation helpers.
//
// Everything here is evaluated in double precision with attention to the
// tails: the prior transforms push the standardized truncation bounds out to
// |z| ~ 10^2 when beta is close to one, where the naive Phi(b) - Phi(a)
// underflows or cancels.

#include <cmath>
#include <limits>
#include <numbers>
#include <span>

namespace autopr {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;
inline constexpr double kSqrt2 = std::numbers::sqrt2;

/// Standard normal density.
inline double normal_pdf(double x) { return std::exp(-0.5 * x * x - 0.5 * kLog2Pi); }

inline double log_normal_pdf(double x) { return -0.5 * x * x - 0.5 * kLog2Pi; }

/// Phi(x), accurate to full relative precision in the lower tail.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

/// 1 - Phi(x), accurate in the upper tail.
inline double normal_sf(double x) { return 0.5 * std::erfc(x / kSqrt2); }

/// log Phi(x) for all finite x, switching to the asymptotic series once
/// erfc would lose precision.
double log_normal_cdf(double x);

/// log(1 - Phi(x)).
inline double log_normal_sf(double x) { return log_normal_cdf(-x); }

/// log(Phi(hi) - Phi(lo)) for lo < hi, either of which may be infinite.
/// Works on whichever tail keeps the difference well conditioned.
double log_normal_cdf_diff(double lo, double hi);

/// Inverse of Phi. Wichura's AS241 rational approximation followed by one
/// Newton step; p = 0 and p = 1 map to -inf and +inf.
double normal_quantile(double p);

/// x such that 1 - Phi(x) = q, without forming 1 - q.
inline double normal_quantile_upper(double q) { return -normal_quantile(q); }

/// Inverse CDF of the standard normal truncated to [lo, hi] (either bound
/// may be infinite). The branch is chosen so that the probability being
/// inverted is always the smaller of the two tails.
double truncated_normal_quantile(double lo, double hi, double u);

/// CDF of the standard normal truncated to [lo, hi].
double truncated_normal_cdf(double lo, double hi, double x);

/// log(exp(a) + exp(b)) without overflow; -inf is the additive identity.
inline double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

/// log(sum_i exp(x_i)). Empty input yields -inf.
double log_sum_exp(std::span<const double> values);

}  // namespace autopr
