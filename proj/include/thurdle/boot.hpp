#pragma once

// Bootstrap inference. The nonparametric scheme resamples published t-stats and
// refits. The semi-parametric scheme keeps the point estimate's mu process but
// takes noise from cluster-resampled panel residuals, so cross-predictor
// correlation in returns carries into the simulated t-stats.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "thurdle/error.hpp"
#include "thurdle/gof.hpp"
#include "thurdle/latent.hpp"
#include "thurdle/model.hpp"
#include "thurdle/parallel.hpp"
#include "thurdle/qml.hpp"
#include "thurdle/rng.hpp"
#include "thurdle/stats.hpp"

namespace thurdle {

struct BootStats {
  bool hurdle5 = true;
  bool hurdle1 = true;
  bool shrink_pub = true;
  bool fdr_pub = true;
};

struct BootConfig {
  std::size_t n_reps = 1000;
  FitSpec spec = FitSpec::preset("baseline");
  std::uint64_t seed = 1;
  BootStats stats;
  bool resample = true;  // false gives the identity resample
  int threads = 1;
  bool fail_on_excess_failures = true;  // throw when more than 20% of reps fail

  // Semi-parametric cluster draws.
  std::size_t n_predictors = 5000;
  std::size_t n_months = 350;
  std::size_t min_months = 24;

  void validate() const {
    if (n_reps < 1) throw usage_error("n_reps must be >= 1");
    if (n_predictors < 1 || n_months < 2) throw usage_error("cluster draw sizes too small");
    spec.validate();
  }
};

struct BootRep {
  static constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  std::size_t rep = 0;
  bool converged = false;
  std::string failure;
  std::size_t n_obs = 0;
  std::vector<double> values;  // fitted parameter vector aligned with spec.bounds
  double pi_f = nan, e_mu = nan, sd_mu = nan, eta = nan;
  double hurdle5 = nan, hurdle1 = nan, shrink_pub = nan, fdr_pub = nan;
};

struct BootResult {
  std::string mode;
  FitSpec spec;
  std::vector<BootRep> reps;

  std::size_t n_failed() const {
    return static_cast<std::size_t>(std::count_if(reps.begin(), reps.end(), [](const BootRep& r) { return !r.converged; }));
  }
  double failure_share() const { return reps.empty() ? 0.0 : static_cast<double>(n_failed()) / reps.size(); }

  void check_failure_rate() const {
    if (failure_share() > 0.2)
      throw convergence_error(std::to_string(n_failed()) + " of " + std::to_string(reps.size()) +
                              " bootstrap replications failed (limit 20%)");
  }
};

/// Statistics at theta averaged over a sample of t-stats. Signed shrinkage is used
/// for latents that put mass on both signs.
inline void evaluate_rep_stats(const ModelParams& theta, std::span<const double> t, const BootStats& want,
                               BootRep& rep) {
  const Model m(theta);
  rep.pi_f = theta.pi_f;
  rep.e_mu = mean(theta.latent);
  rep.sd_mu = sd(theta.latent);
  if (auto* s = std::get_if<Staircase>(&theta.pub.shape)) rep.eta = s->eta;
  if (auto* s = std::get_if<ThreeStep>(&theta.pub.shape)) rep.eta = s->eta_c;
  if (want.hurdle5 || want.hurdle1) {
    const double alphas[] = {0.05, 0.01};
    const auto h = hurdles_for_fdr(alphas, m);
    if (want.hurdle5) rep.hurdle5 = h[0].hurdle;
    if (want.hurdle1) rep.hurdle1 = h[1].hurdle;
  }
  if (want.shrink_pub) {
    const bool is_signed = !positive_support(theta.latent);
    rep.shrink_pub = mean_shrinkage(t, m, is_signed);
  }
  if (want.fdr_pub) rep.fdr_pub = mean_local_fdr(t, m);
}

namespace detail {

inline std::vector<double> abs_values(std::span<const double> t) {
  std::vector<double> a(t.size());
  std::transform(t.begin(), t.end(), a.begin(), [](double v) { return std::fabs(v); });
  return a;
}

/// Fits one replication's sample and fills the statistics; failures are recorded, not thrown.
inline void fit_rep(std::span<const double> t, const BootConfig& cfg, BootRep& rep) {
  rep.n_obs = t.size();
  FitSpec spec = cfg.spec;
  spec.threads = 1;
  try {
    if (t.empty()) throw data_error("empty published sample");
    const auto r = fit_abs(abs_values(t), spec);
    rep.values = r.values;
    evaluate_rep_stats(r.theta_hat, t, cfg.stats, rep);
    rep.converged = r.converged;
    if (!r.converged) rep.failure = "best start did not converge";
  } catch (const std::exception& e) {
    rep.converged = false;
    rep.failure = e.what();
  }
}

inline void finish_boot(const BootConfig& cfg, const BootResult& res) {
  if (cfg.fail_on_excess_failures) res.check_failure_rate();
}

}  // namespace detail

/// Resample the t-stats with replacement, refit, and evaluate statistics at each
/// replication's estimate over that replication's sample.
inline BootResult bootstrap_nonparametric(std::span<const double> t, const BootConfig& cfg) {
  cfg.validate();
  std::vector<double> sample;
  const double cut = cfg.spec.inclusion_cutoff();
  for (double v : t) {
    if (!std::isfinite(v)) throw data_error("non-finite t-stat");
    if (std::fabs(v) > cut) sample.push_back(v);
  }
  if (sample.empty()) throw data_error("no t-stats inside the inclusion region");

  BootResult res;
  res.mode = "nonparam";
  res.spec = cfg.spec;
  res.reps.resize(cfg.n_reps);
  parallel_for(cfg.n_reps, cfg.threads, [&](std::size_t b) {
    auto& rep = res.reps[b];
    rep.rep = b;
    std::vector<double> draw(sample.size());
    if (cfg.resample) {
      Rng rng(cfg.seed, b + 1);
      for (auto& d : draw) d = sample[rng.below(sample.size())];
    } else {
      draw = sample;
    }
    detail::fit_rep(draw, cfg, rep);
  });
  detail::finish_boot(cfg, res);
  return res;
}

// ---------------------------------------------------------------------------
// Panel returns and cluster draws

struct PanelReturns {
  std::vector<std::string> predictors;
  std::vector<std::string> months;
  std::vector<double> returns;  // row-major predictor x month; NaN marks a missing cell

  std::size_t n_predictors() const { return predictors.size(); }
  std::size_t n_months() const { return months.size(); }
  double at(std::size_t p, std::size_t m) const { return returns[p * months.size() + m]; }

  void validate() const {
    if (returns.size() != predictors.size() * months.size()) throw data_error("panel shape mismatch");
    if (predictors.size() < 2 || months.size() < 2) throw data_error("panel needs >= 2 predictors and >= 2 months");
  }

  /// Drops predictors with fewer than `min_obs` non-missing months, then months
  /// that are missing for every remaining predictor.
  PanelReturns filtered(std::size_t min_obs = 2) const {
    std::vector<std::size_t> keep_p, keep_m;
    for (std::size_t p = 0; p < n_predictors(); ++p) {
      std::size_t c = 0;
      for (std::size_t m = 0; m < n_months(); ++m) c += !std::isnan(at(p, m));
      if (c >= min_obs) keep_p.push_back(p);
    }
    for (std::size_t m = 0; m < n_months(); ++m)
      for (std::size_t p : keep_p)
        if (!std::isnan(at(p, m))) {
          keep_m.push_back(m);
          break;
        }
    PanelReturns out;
    for (std::size_t p : keep_p) out.predictors.push_back(predictors[p]);
    for (std::size_t m : keep_m) out.months.push_back(months[m]);
    for (std::size_t p : keep_p)
      for (std::size_t m : keep_m) out.returns.push_back(at(p, m));
    out.validate();
    return out;
  }

  /// Per-predictor mean over non-missing months.
  std::vector<double> predictor_means() const {
    std::vector<double> mu(n_predictors(), 0.0);
    for (std::size_t p = 0; p < n_predictors(); ++p) {
      double s = 0.0;
      std::size_t c = 0;
      for (std::size_t m = 0; m < n_months(); ++m)
        if (!std::isnan(at(p, m))) s += at(p, m), ++c;
      mu[p] = c ? s / c : std::numeric_limits<double>::quiet_NaN();
    }
    return mu;
  }
};

struct ResidualDraw {
  std::vector<std::size_t> predictors;  // source predictor of each draw
  std::vector<std::size_t> months;      // source month of each column, shared by all draws
  std::vector<double> residuals;        // draws x months, NaN when missing (empty unless kept)
  std::vector<double> eps;              // mean / sd * sqrt(n_obs) per draw
};

/// Cluster draw: months once (shared across predictors, which preserves the
/// cross-sectional correlation), predictors independently, both with replacement.
/// A predictor with fewer than `min_months` non-missing drawn months is redrawn.
inline ResidualDraw draw_residuals(const PanelReturns& panel, const std::vector<double>& means,
                                   std::size_t n_predictors, std::size_t n_months, std::size_t min_months,
                                   Rng& rng, bool keep_residuals = false) {
  ResidualDraw d;
  d.months.resize(n_months);
  for (auto& m : d.months) m = rng.below(panel.n_months());
  d.predictors.reserve(n_predictors);
  d.eps.reserve(n_predictors);
  if (keep_residuals) d.residuals.reserve(n_predictors * n_months);
  std::vector<double> row(n_months);
  for (std::size_t i = 0; i < n_predictors; ++i) {
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 10000) throw data_error("no predictor has enough non-missing months in the drawn month set");
      const std::size_t p = rng.below(panel.n_predictors());
      double s = 0.0, ss = 0.0;
      std::size_t c = 0;
      for (std::size_t k = 0; k < n_months; ++k) {
        const double r = panel.at(p, d.months[k]);
        row[k] = r - means[p];
        if (!std::isnan(r)) s += row[k], ++c;
      }
      if (c < std::max<std::size_t>(min_months, 2)) continue;
      const double mean = s / c;
      for (std::size_t k = 0; k < n_months; ++k)
        if (!std::isnan(row[k])) ss += (row[k] - mean) * (row[k] - mean);
      const double sdev = std::sqrt(ss / (c - 1));
      if (!(sdev > 0)) continue;
      d.predictors.push_back(p);
      d.eps.push_back(mean / sdev * std::sqrt(static_cast<double>(c)));
      if (keep_residuals) d.residuals.insert(d.residuals.end(), row.begin(), row.end());
      break;
    }
  }
  return d;
}

/// Pearson correlation over months where both rows are present.
inline double pairwise_correlation(std::span<const double> a, std::span<const double> b) {
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  std::size_t c = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::isnan(a[k]) || std::isnan(b[k])) continue;
    sa += a[k], sb += b[k], saa += a[k] * a[k], sbb += b[k] * b[k], sab += a[k] * b[k];
    ++c;
  }
  if (c < 3) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(c);
  const double cov = sab - sa * sb / n, va = saa - sa * sa / n, vb = sbb - sb * sb / n;
  return cov / std::sqrt(va * vb);
}

/// Correlations of all pairs of rows of a rows x cols matrix. Pairs whose
/// `ids` match (the same source predictor drawn twice) are skipped.
inline std::vector<double> pairwise_correlations(std::span<const double> mat, std::size_t rows, std::size_t cols,
                                                 std::span<const std::size_t> ids = {}) {
  std::vector<double> out;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = i + 1; j < rows; ++j) {
      if (!ids.empty() && ids[i] == ids[j]) continue;
      const double r = pairwise_correlation(mat.subspan(i * cols, cols), mat.subspan(j * cols, cols));
      if (!std::isnan(r)) out.push_back(r);
    }
  return out;
}

/// Semi-parametric bootstrap around a point estimate: noise from cluster-drawn
/// residuals, mu and publication from the point estimate, then refit.
inline BootResult bootstrap_semiparametric(const PanelReturns& panel_in, const ModelParams& point,
                                           const BootConfig& cfg) {
  cfg.validate();
  point.validate();
  const PanelReturns panel = panel_in.filtered(2);
  const auto means = panel.predictor_means();
  const double cut = cfg.spec.inclusion_cutoff();

  BootResult res;
  res.mode = "semiparam";
  res.spec = cfg.spec;
  res.reps.resize(cfg.n_reps);
  parallel_for(cfg.n_reps, cfg.threads, [&](std::size_t b) {
    auto& rep = res.reps[b];
    rep.rep = b;
    try {
      Rng draw_rng(cfg.seed, 2 * b + 1), model_rng(cfg.seed, 2 * b + 2);
      const auto d = draw_residuals(panel, means, cfg.n_predictors, cfg.n_months, cfg.min_months, draw_rng);
      std::vector<double> published;
      for (double e : d.eps) {
        const bool is_false = model_rng.bernoulli(point.pi_f);
        const double mu = is_false ? 0.0 : sample(point.latent, model_rng);
        const double t = mu + e;
        if (model_rng.bernoulli(point.pub.probability(std::fabs(t))) && std::fabs(t) > cut) published.push_back(t);
      }
      detail::fit_rep(published, cfg, rep);
    } catch (const std::exception& e) {
      rep.converged = false;
      rep.failure = e.what();
    }
  });
  detail::finish_boot(cfg, res);
  return res;
}

// ---------------------------------------------------------------------------
// Summaries

struct SummaryRow {
  std::string stat;
  std::size_t n = 0;
  std::vector<double> values;  // one per requested percentile
};

struct Summary {
  std::vector<double> percentiles;
  std::vector<SummaryRow> rows;
  std::size_t n_used = 0, n_failed = 0;
};

inline std::vector<std::string> boot_stat_names() {
  return {"pi_f", "e_mu", "sd_mu", "eta", "hurdle5", "hurdle1", "shrink_pub", "fdr_pub"};
}

inline double boot_stat(const BootRep& r, std::string_view name) {
  if (name == "pi_f") return r.pi_f;
  if (name == "e_mu") return r.e_mu;
  if (name == "sd_mu") return r.sd_mu;
  if (name == "eta") return r.eta;
  if (name == "hurdle5") return r.hurdle5;
  if (name == "hurdle1") return r.hurdle1;
  if (name == "shrink_pub") return r.shrink_pub;
  if (name == "fdr_pub") return r.fdr_pub;
  throw usage_error("unknown bootstrap statistic '" + std::string(name) + "'");
}

/// Percentiles (in percent) of every statistic over converged replications,
/// using linear interpolation between order statistics.
inline Summary summarize(const BootResult& boot, std::vector<double> percentiles = {5, 25, 50, 75, 95}) {
  Summary s;
  s.percentiles = percentiles;
  s.n_failed = boot.n_failed();
  s.n_used = boot.reps.size() - s.n_failed;
  if (s.n_used == 0) throw numerical_error("no converged bootstrap replications to summarize");
  for (const auto& name : boot_stat_names()) {
    std::vector<double> v;
    for (const auto& r : boot.reps)
      if (r.converged && std::isfinite(boot_stat(r, name))) v.push_back(boot_stat(r, name));
    if (v.empty()) continue;
    SummaryRow row{name, v.size(), {}};
    for (double p : percentiles) row.values.push_back(gof::quantile(v, p / 100.0));
    s.rows.push_back(row);
  }
  return s;
}

}  // namespace thurdle
