#pragma once

// Multiple-testing statistics: Bayesian FDR and the hurdles that control it,
// local fdr, empirical-Bayes shrinkage, FNR, and the count-based step-up
// procedures (BH95 and BY Theorem 1.3).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "thurdle/error.hpp"
#include "thurdle/model.hpp"
#include "thurdle/normal.hpp"

namespace thurdle {

enum class HurdleMethod { BayesModel, BH95, BY13 };

inline std::string method_name(HurdleMethod m) {
  switch (m) {
    case HurdleMethod::BayesModel: return "bayes_model";
    case HurdleMethod::BH95: return "bh95";
    case HurdleMethod::BY13: return "by13";
  }
  return "";
}

struct HurdleResult {
  double hurdle = 0.0;
  double alpha = 0.05;
  double achieved_fdr = 0.0;
  HurdleMethod method = HurdleMethod::BayesModel;
  bool feasible = true;
  bool non_monotone = false;  // Bayes FDR increased somewhere on the search grid
};

struct ShrinkageResult {
  double t_input = 0.0;
  double posterior_mean_mu = 0.0;
  double shrinkage = 0.0;
  bool is_signed = false;
};

namespace detail {
// Tail probabilities below this are treated as underflow.
inline constexpr double kTailFloor = 1e-12;

/// Pr(F | |t| > h), or NaN when Pr(|t| > h) underflows.
inline double fdr_or_nan(double h, const Model& m) {
  const double pf = m.params().pi_f;
  const double num = pf * Model::sf_false(h);
  const double den = num + (1 - pf) * m.sf_true(h);
  if (!(den >= kTailFloor)) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(num / den, 0.0, 1.0);
}
}  // namespace detail

/// Bayesian FDR, Pr(F | |t| > h) = pi_F Pr(|t| > h | F) / Pr(|t| > h).
inline double fdr_bayes(double h, const Model& m) {
  if (!(h >= 0)) throw domain_error("fdr_bayes requires h >= 0");
  const double v = detail::fdr_or_nan(h, m);
  if (std::isnan(v)) throw tail_underflow_error("Pr(|t| > h) underflows at h = " + std::to_string(h));
  return v;
}

inline double fdr_bayes(double h, const ModelParams& p) { return fdr_bayes(h, Model(p)); }

/// Back-of-envelope FDR for published factors from a false-factor tail
/// probability, the share of t-stats exceeding the same cutoff, and pi_F.
inline double fdr_bayes_approx(double tail_prob_false, double share_exceeding, double pi_f) {
  if (!(share_exceeding > 0)) throw domain_error("share exceeding must be positive");
  return tail_prob_false / share_exceeding * pi_f;
}

struct HurdleOptions {
  double grid_step = 0.01;
  double tol = 1e-6;  // bisection tolerance on h
};

/// Lowest h in [0, kTMax] with fdr_bayes(h) <= alpha, for each alpha in `alphas`.
/// Coarse grid followed by bisection on the first grid cell that satisfies the
/// constraint. Infeasible alphas report h = kTMax with the FDR reached there.
inline std::vector<HurdleResult> hurdles_for_fdr(std::span<const double> alphas, const Model& m,
                                                 const HurdleOptions& opt = {}) {
  for (double a : alphas)
    if (!(a > 0 && a < 1)) throw domain_error("alpha must lie in (0, 1)");
  const int n = static_cast<int>(std::lround(kTMax / opt.grid_step));
  std::vector<double> grid(n + 1);
  for (int k = 0; k <= n; ++k) grid[k] = detail::fdr_or_nan(k * opt.grid_step, m);

  bool non_monotone = false;
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (double v : grid) {
    if (std::isnan(v)) continue;
    if (!std::isnan(prev) && v > prev + 1e-12) non_monotone = true;
    prev = v;
  }

  std::vector<HurdleResult> out;
  for (double alpha : alphas) {
    HurdleResult r;
    r.alpha = alpha;
    r.non_monotone = non_monotone;
    int first = -1;
    for (int k = 0; k <= n; ++k)
      if (!std::isnan(grid[k]) && grid[k] <= alpha) {
        first = k;
        break;
      }
    if (first < 0) {
      r.feasible = false;
      r.hurdle = kTMax;
      int last = n;
      while (last > 0 && std::isnan(grid[last])) --last;
      r.achieved_fdr = grid[last];
    } else if (first == 0) {
      r.hurdle = 0.0;
      r.achieved_fdr = grid[0];
    } else {
      double lo = (first - 1) * opt.grid_step, hi = first * opt.grid_step;
      double f_hi = grid[first];
      while (hi - lo > opt.tol) {
        const double mid = 0.5 * (lo + hi);
        const double f = detail::fdr_or_nan(mid, m);
        if (!std::isnan(f) && f <= alpha) {
          hi = mid;
          f_hi = f;
        } else {
          lo = mid;
        }
      }
      r.hurdle = hi;
      r.achieved_fdr = f_hi;
    }
    out.push_back(r);
  }
  return out;
}

inline HurdleResult hurdle_for_fdr(double alpha, const Model& m, const HurdleOptions& opt = {}) {
  const double a[] = {alpha};
  return hurdles_for_fdr(a, m, opt).front();
}

inline HurdleResult hurdle_for_fdr(double alpha, const ModelParams& p, const HurdleOptions& opt = {}) {
  return hurdle_for_fdr(alpha, Model(p), opt);
}

/// Local fdr, Pr(F | |t| = t_abs).
inline double local_fdr(double t_abs, const Model& m) {
  const double pf = m.params().pi_f;
  if (pf == 0.0) {
    if (!(t_abs >= 0)) throw domain_error("|t| must be non-negative");
    return 0.0;
  }
  const double ff = pf * Model::density_false(t_abs);
  const double ft = (1 - pf) * m.density_true(t_abs);
  if (!(ff + ft > 0)) throw tail_underflow_error("both densities underflow at |t| = " + std::to_string(t_abs));
  return ff / (ff + ft);
}

/// Correction term Delta = pi_F / (1 - pi_F) * f_F / f_T, with
/// E(mu | |t|) = E(mu | |t|, T) / (1 + Delta).
inline double shrinkage_delta(double t_abs, const Model& m) {
  const double pf = m.params().pi_f;
  if (pf == 0.0) return 0.0;
  if (pf == 1.0) return std::numeric_limits<double>::infinity();
  return pf / (1 - pf) * Model::density_false(t_abs) / m.density_true(t_abs);
}

/// E(mu | |t| = t_abs, T).
inline double posterior_mean_true(double t_abs, const Model& m) {
  const double ft = m.density_true(t_abs);
  if (!(ft > 0)) throw tail_underflow_error("true-factor density underflows at |t| = " + std::to_string(t_abs));
  return m.true_mu_moment(t_abs) / ft;
}

/// Empirical-Bayes shrinkage. Unsigned: (|t| - E(mu | |t|)) / |t|. Signed:
/// (t - E(mu | t)) / t, for latents that place mass on both signs.
inline ShrinkageResult shrinkage(double t, const Model& m, bool is_signed = false) {
  ShrinkageResult r;
  r.is_signed = is_signed;
  r.t_input = t;
  const double pf = m.params().pi_f;
  if (!is_signed) {
    if (!(t > 0)) throw domain_error("unsigned shrinkage requires |t| > 0");
    const double f = m.density_marginal(t);
    if (!(f > 0)) throw tail_underflow_error("marginal density underflows at |t| = " + std::to_string(t));
    r.posterior_mean_mu = (1 - pf) * m.true_mu_moment(t) / f;
  } else {
    if (t == 0.0 || !std::isfinite(t)) throw domain_error("signed shrinkage requires t != 0");
    const double f = pf * normal::pdf(t) + (1 - pf) * m.signed_density_true(t);
    if (!(f > 0)) throw tail_underflow_error("marginal density underflows at t = " + std::to_string(t));
    r.posterior_mean_mu = (1 - pf) * m.signed_mu_moment(t) / f;
  }
  const double base = is_signed ? t : std::fabs(t);
  r.shrinkage = (base - r.posterior_mean_mu) / base;
  return r;
}

/// FNR, Pr(T | |t| <= h) = 1 - pi_F Pr(|t| <= h | F) / Pr(|t| <= h).
inline double fnr(double h, const Model& m) {
  if (!(h > 0)) throw domain_error("fnr requires h > 0");
  const double pf = m.params().pi_f;
  const double below_f = 1.0 - Model::sf_false(h);
  const double below = pf * below_f + (1 - pf) * m.tail_prob(0.0, h, Condition::True);
  if (!(below >= detail::kTailFloor)) throw tail_underflow_error("Pr(|t| <= h) underflows");
  return std::clamp(1.0 - below_f / below * pf, 0.0, 1.0);
}

/// Mean local fdr over a sample of t-stats (absolute values are taken).
inline double mean_local_fdr(std::span<const double> t, const Model& m) {
  if (t.empty()) throw domain_error("empty sample");
  double s = 0.0;
  for (double v : t) s += local_fdr(std::fabs(v), m);
  return s / static_cast<double>(t.size());
}

inline double mean_shrinkage(std::span<const double> t, const Model& m, bool is_signed = false) {
  if (t.empty()) throw domain_error("empty sample");
  double s = 0.0;
  for (double v : t) s += shrinkage(is_signed ? v : std::fabs(v), m, is_signed).shrinkage;
  return s / static_cast<double>(t.size());
}

// ---------------------------------------------------------------------------
// Count-based procedures

inline double harmonic_number(std::size_t n) {
  double s = 0.0;
  for (std::size_t i = n; i >= 1; --i) s += 1.0 / static_cast<double>(i);
  return s;
}

namespace detail {
inline std::vector<double> sorted_abs_desc(std::span<const double> t) {
  std::vector<double> a(t.size());
  std::transform(t.begin(), t.end(), a.begin(), [](double v) { return std::fabs(v); });
  std::sort(a.begin(), a.end(), std::greater<>());
  return a;
}
inline double stepup_penalty(HurdleMethod method, std::size_t n) {
  if (method == HurdleMethod::BY13) return harmonic_number(n);
  if (method == HurdleMethod::BH95) return 1.0;
  throw domain_error("step-up procedures are BH95 or BY13");
}
}  // namespace detail

/// Classic p-value step-up: reject the k* smallest two-sided p-values, where
/// k* = max{k : p_(k) <= k alpha / (N c)}, c = 1 (BH95) or sum 1/i (BY13).
/// The hurdle is the smallest rejected |t|.
inline HurdleResult stepup_hurdle(std::span<const double> t, double alpha, HurdleMethod method) {
  if (t.empty()) throw domain_error("step-up requires a nonempty literature");
  if (!(alpha > 0 && alpha < 1)) throw domain_error("alpha must lie in (0, 1)");
  const auto a = detail::sorted_abs_desc(t);
  const std::size_t n = a.size();
  const double c = detail::stepup_penalty(method, n);
  HurdleResult r;
  r.alpha = alpha;
  r.method = method;
  for (std::size_t k = n; k >= 1; --k) {
    const double p = normal::two_sided_p(a[k - 1]);
    if (p <= static_cast<double>(k) * alpha / (static_cast<double>(n) * c)) {
      r.hurdle = a[k - 1];
      r.achieved_fdr = p * c * static_cast<double>(n) / static_cast<double>(k);
      return r;
    }
  }
  r.feasible = false;
  r.hurdle = std::numeric_limits<double>::infinity();
  r.achieved_fdr = std::numeric_limits<double>::quiet_NaN();
  return r;
}

inline HurdleResult stepup_hurdle(const Literature& lit, double alpha, HurdleMethod method) {
  const auto t = lit.t_values();
  return stepup_hurdle(t, alpha, method);
}

/// Plug-in estimator FDRhat(h) = Pr(|t| > h | F) c / Prhat(|t| > h), evaluated as
/// h rises to each observed |t| (so the observation itself is counted).
inline double fdr_hat(double h, std::span<const double> t, HurdleMethod method) {
  std::size_t count = 0;
  for (double v : t)
    if (std::fabs(v) >= h) ++count;
  if (count == 0) return std::numeric_limits<double>::infinity();
  const double c = detail::stepup_penalty(method, t.size());
  return Model::sf_false(h) * c * static_cast<double>(t.size()) / static_cast<double>(count);
}

/// Smallest observed |t| with FDRhat <= alpha. Agrees with stepup_hurdle().
inline HurdleResult plugin_hurdle(std::span<const double> t, double alpha, HurdleMethod method) {
  if (t.empty()) throw domain_error("plug-in hurdle requires a nonempty literature");
  if (!(alpha > 0 && alpha < 1)) throw domain_error("alpha must lie in (0, 1)");
  const auto a = detail::sorted_abs_desc(t);
  const std::size_t n = a.size();
  const double c = detail::stepup_penalty(method, n);
  HurdleResult r;
  r.alpha = alpha;
  r.method = method;
  r.feasible = false;
  r.hurdle = std::numeric_limits<double>::infinity();
  r.achieved_fdr = std::numeric_limits<double>::quiet_NaN();
  // a is descending; the count of |t_i| >= a[k] is the index of the last tie plus one.
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t count = k + 1;
    while (count < n && a[count] == a[k]) ++count;
    const double f = Model::sf_false(a[k]) * c * static_cast<double>(n) / static_cast<double>(count);
    if (f <= alpha && a[k] <= r.hurdle) {
      r.feasible = true;
      r.hurdle = a[k];
      r.achieved_fdr = f;
    }
  }
  return r;
}

/// Share of false factors among those with |t| > h, by counting truth labels.
inline double empirical_fdr_counts(const Literature& lit, double h) {
  std::size_t exceed = 0, false_exceed = 0;
  for (const auto& r : lit.records) {
    if (!(std::fabs(r.t) > h)) continue;
    if (!r.truth) throw domain_error("empirical FDR requires truth labels");
    ++exceed;
    if (*r.truth == Truth::False) ++false_exceed;
  }
  if (exceed == 0) throw domain_error("no |t| exceeds h; the FDR ratio is undefined");
  return static_cast<double>(false_exceed) / static_cast<double>(exceed);
}

// ---------------------------------------------------------------------------
// Identification diagnostics

/// Pr(|t| <= t_bar | |t| > t_good), optionally among true factors only.
inline double well_observed_cdf(double t_bar, double t_good, const Model& m, bool true_only = false) {
  const Condition c = true_only ? Condition::True : Condition::All;
  const double den = m.tail_prob(t_good, std::numeric_limits<double>::infinity(), c);
  if (!(den >= detail::kTailFloor)) throw tail_underflow_error("Pr(|t| > t_good) underflows");
  return m.tail_prob(t_good, std::max(t_good, t_bar), c) / den;
}

/// sup over t_bar > t_good of Pr(|t| in [t_good, t_bar] | F) / Pr(|t| in [t_good, t_bar] | T),
/// including the t_bar -> t_good limit (the density ratio), on a grid of step 0.01 to kTMax.
inline double identification_epsilon(double t_good, const Model& m) {
  double eps = Model::density_false(t_good) / m.density_true(t_good);
  for (double tb = t_good + 0.01; tb <= kTMax + 1e-9; tb += 0.01) {
    const double pt = m.tail_prob(t_good, tb, Condition::True);
    if (pt > 0) eps = std::max(eps, m.tail_prob(t_good, tb, Condition::False) / pt);
  }
  const double tail_t = m.tail_prob(t_good, std::numeric_limits<double>::infinity(), Condition::True);
  if (tail_t > 0) eps = std::max(eps, Model::sf_false(t_good) / tail_t);
  return eps;
}

}  // namespace thurdle
