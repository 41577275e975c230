#pragma once

// Goodness-of-fit tests and the sample quantile convention used in summaries.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "thurdle/error.hpp"

namespace thurdle::gof {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double dof = 0.0;  // chi-square only
};

/// Kolmogorov survival function Q(x) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 x^2).
inline double kolmogorov_sf(double x) {
  if (x < 0.18) return 1.0;
  if (x < 1.0) {
    // Dual (theta-function) series, fast for small x: K(x) = sqrt(2 pi) / x sum exp(-(2j-1)^2 pi^2 / (8 x^2)).
    double k = 0.0;
    for (int j = 1; j <= 20; ++j) {
      const double a = (2 * j - 1) * M_PI / x;
      k += std::exp(-a * a / 8);
    }
    return std::clamp(1.0 - std::sqrt(2 * M_PI) / x * k, 0.0, 1.0);
  }
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    s += (j % 2 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

/// One-sample KS against a continuous CDF; asymptotic p-value with the
/// Stephens small-sample adjustment.
inline TestResult ks_one_sample(std::span<const double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw domain_error("KS test needs a nonempty sample");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double en = std::sqrt(n);
  return {d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d)};
}

/// Two-sample KS.
inline TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw domain_error("KS test needs nonempty samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n1 = static_cast<double>(x.size()), n2 = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::fabs(i / n1 - j / n2));
  }
  const double en = std::sqrt(n1 * n2 / (n1 + n2));
  return {d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d)};
}

/// Pearson chi-square of observed counts against cell probabilities (renormalized
/// to the observed total). dof = cells - 1 - fitted_params.
inline TestResult chi_square(std::span<const double> observed, std::span<const double> probs,
                             int fitted_params = 0) {
  if (observed.size() != probs.size() || observed.size() < 2) throw domain_error("chi-square needs matching cells");
  double n = 0.0, ptot = 0.0;
  for (double o : observed) n += o;
  for (double p : probs) ptot += p;
  double stat = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const double e = n * probs[k] / ptot;
    if (!(e > 0)) throw domain_error("chi-square cell with zero expected count");
    stat += (observed[k] - e) * (observed[k] - e) / e;
  }
  const double dof = static_cast<double>(observed.size()) - 1 - fitted_params;
  return {stat, boost::math::gamma_q(dof / 2, stat / 2), dof};
}

/// Linear-interpolation sample quantile (Hyndman-Fan type 7): position (n - 1) p.
inline double quantile(std::span<const double> x, double p) {
  if (x.empty()) throw domain_error("quantile of an empty sample");
  if (!(p >= 0 && p <= 1)) throw domain_error("quantile level must lie in [0, 1]");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double h = (static_cast<double>(s.size()) - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace thurdle::gof
