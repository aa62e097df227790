#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

#include "percobound/errors.hpp"

namespace percobound {

/// Quantile of the standard normal distribution (Acklam's rational
/// approximation, refined with one Halley step through erfc).
inline double inverse_normal_cdf(double q) {
  if (!(q > 0.0 && q < 1.0)) throw parameter_error("inverse_normal_cdf: q must be in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (q < plow) {
    double u = std::sqrt(-2.0 * std::log(q));
    x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
        ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  } else if (q <= phigh) {
    double u = q - 0.5, t = u * u;
    x = (((((a[0] * t + a[1]) * t + a[2]) * t + a[3]) * t + a[4]) * t + a[5]) * u /
        (((((b[0] * t + b[1]) * t + b[2]) * t + b[3]) * t + b[4]) * t + 1.0);
  } else {
    double u = std::sqrt(-2.0 * std::log(1.0 - q));
    x = -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
        ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  }
  // One Halley refinement.
  double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - q;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

/// Wilson score interval for a binomial proportion.  Coverage stays honest
/// near 0 and 1, where the normal-approximation interval collapses.
inline std::pair<double, double> wilson_interval(std::uint64_t successes,
                                                 std::uint64_t n,
                                                 double confidence) {
  if (n == 0) return {0.0, 1.0};
  const double z = inverse_normal_cdf(0.5 * (1.0 + confidence));
  const double nn = static_cast<double>(n);
  const double phat = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (phat + z2 / (2.0 * nn)) / denom;
  const double half =
      (z / denom) * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

/// Monte Carlo estimate of a probability: exact integer counts plus a
/// Wilson interval at the configured confidence level.
struct Estimate {
  std::uint64_t successes = 0;
  std::uint64_t replicas = 0;
  double point = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  double confidence = 0.99;

  static Estimate from_counts(std::uint64_t successes, std::uint64_t replicas,
                              double confidence) {
    if (replicas == 0) throw parameter_error("Estimate: replicas must be >= 1");
    if (successes > replicas) throw parameter_error("Estimate: successes > replicas");
    Estimate e;
    e.successes = successes;
    e.replicas = replicas;
    e.confidence = confidence;
    e.point = static_cast<double>(successes) / static_cast<double>(replicas);
    auto [lo, hi] = wilson_interval(successes, replicas, confidence);
    e.ci_low = lo;
    e.ci_high = hi;
    return e;
  }

  /// Estimate of the complementary event from the same replicas.
  Estimate complement() const {
    Estimate e = from_counts(replicas - successes, replicas, confidence);
    return e;
  }

  double halfwidth() const { return 0.5 * (ci_high - ci_low); }
};

}  // namespace percobound
