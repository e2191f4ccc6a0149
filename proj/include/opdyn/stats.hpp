#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace opdyn {

// Running mean / variance (Welford).
struct MeanVar {
  long long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }
  double sem() const { return n > 0 ? stddev() / std::sqrt(static_cast<double>(n)) : 0.0; }
};

// Inverse standard normal CDF (Acklam's rational approximation, ~1e-9).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must be in (0,1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double q, r;
  if (p < p_low) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  q = std::sqrt(-2.0 * std::log(1.0 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

struct WilsonInterval {
  double low = 0.0;
  double high = 1.0;
};

// Wilson score interval for a binomial proportion.
inline WilsonInterval wilson_interval(long long successes, long long trials, double z = 1.959963984540054) {
  if (trials <= 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (phat + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// Chi-square quantile via the Wilson-Hilferty cube approximation; plenty for
// the goodness-of-fit gates used here (hundreds of degrees of freedom).
inline double chi2_quantile(double dof, double p) {
  const double z = normal_quantile(p);
  const double t = 2.0 / (9.0 * dof);
  const double cube = 1.0 - t + z * std::sqrt(t);
  return dof * cube * cube * cube;
}

// One-sample Kolmogorov-Smirnov statistic for samples already mapped through
// the hypothesized CDF (values in [0,1]). Input is sorted in place.
inline double ks_statistic_uniform(std::vector<double>& cdf_values) {
  std::sort(cdf_values.begin(), cdf_values.end());
  const double n = static_cast<double>(cdf_values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < cdf_values.size(); ++i) {
    const double hi = (static_cast<double>(i) + 1.0) / n - cdf_values[i];
    const double lo = cdf_values[i] - static_cast<double>(i) / n;
    d = std::max({d, hi, lo});
  }
  return d;
}

// Asymptotic KS critical value at significance alpha.
inline double ks_critical(std::size_t n, double alpha) {
  return std::sqrt(-std::log(alpha / 2.0) / 2.0) / std::sqrt(static_cast<double>(n));
}

}  // namespace opdyn
