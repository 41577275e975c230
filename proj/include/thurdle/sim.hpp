#pragma once

// Synthetic literatures. Factor noise follows a stationary AR1 across factor
// indexes; the supporting-evidence model adds a second noisy signal z that
// journals also screen on.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "thurdle/error.hpp"
#include "thurdle/latent.hpp"
#include "thurdle/model.hpp"
#include "thurdle/normal.hpp"
#include "thurdle/parallel.hpp"
#include "thurdle/rng.hpp"

namespace thurdle {

struct SimConfig {
  std::size_t n_factors = 1000;
  ModelParams params;
  double rho = 0.0;  // AR1 coefficient of the noise across factor indexes
  std::uint64_t seed = 1;
  bool apply_publication = true;

  void validate() const {
    if (n_factors < 1) throw domain_error("n_factors must be >= 1");
    if (!(std::fabs(rho) < 1)) throw domain_error("rho must lie in (-1, 1)");
    params.validate();
  }
};

namespace detail {
// Independent streams per ingredient, so toggling publication leaves t unchanged.
enum SimStream : std::uint64_t { kTruth = 1, kMu = 2, kNoise = 3, kPublish = 4 };
}  // namespace detail

/// Two-step literature: truth ~ Bernoulli(1 - pi_F), mu from the latent for true
/// factors, eps_i = rho eps_{i-1} + sqrt(1 - rho^2) xi_i with eps_1 ~ N(0, 1),
/// t = mu + eps, and publication with probability s(|t|).
inline Literature simulate(const SimConfig& cfg) {
  cfg.validate();
  Rng truth_rng(cfg.seed, detail::kTruth), mu_rng(cfg.seed, detail::kMu);
  Rng noise_rng(cfg.seed, detail::kNoise), pub_rng(cfg.seed, detail::kPublish);
  const double innov = std::sqrt(1.0 - cfg.rho * cfg.rho);

  Literature lit;
  lit.records.resize(cfg.n_factors);
  double eps = 0.0;
  for (std::size_t i = 0; i < cfg.n_factors; ++i) {
    auto& r = lit.records[i];
    const bool is_false = truth_rng.bernoulli(cfg.params.pi_f);
    const double mu = is_false ? 0.0 : sample(cfg.params.latent, mu_rng);
    eps = i == 0 ? noise_rng.normal() : cfg.rho * eps + innov * noise_rng.normal();
    r.t = mu + eps;
    r.mu = mu;
    r.truth = is_false ? Truth::False : Truth::True;
    if (cfg.apply_publication) r.published = pub_rng.bernoulli(cfg.params.pub.probability(std::fabs(r.t)));
    else r.published = true;
  }
  lit.provenance = "simulate n=" + std::to_string(cfg.n_factors) + " rho=" + std::to_string(cfg.rho) +
                   " seed=" + std::to_string(cfg.seed);
  return lit;
}

/// Simulates factors until `n_published` are published and returns those t-stats.
inline std::vector<double> simulate_published_t(const ModelParams& params, std::size_t n_published,
                                                std::uint64_t seed, double rho = 0.0) {
  std::vector<double> out;
  SimConfig cfg{std::max<std::size_t>(4 * n_published, 1000), params, rho, seed, true};
  for (int attempt = 0; attempt < 12 && out.size() < n_published; ++attempt) {
    out.clear();
    const auto lit = simulate(cfg);
    for (const auto& r : lit.records)
      if (*r.published && out.size() < n_published) out.push_back(r.t);
    cfg.n_factors *= 4;
  }
  if (out.size() < n_published) throw numerical_error("publication rate too low to reach the requested sample");
  return out;
}

// ---------------------------------------------------------------------------
// Supporting-evidence model

struct EvidenceSimConfig {
  double lambda_var = 1.0;  // variance of mu ~ N(0, lambda_var)
  double rho_tz = 0.0;      // correlation of the t and z noises
  double z_min = 0.0;
  double t_cut = 2.5;
  std::size_t n_factors = 100000;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(lambda_var > 0)) throw domain_error("lambda_var must be positive");
    if (!(rho_tz >= 0 && rho_tz < 1)) throw domain_error("rho_tz must lie in [0, 1)");
    if (n_factors < 1) throw domain_error("n_factors must be >= 1");
  }
};

struct EvidenceRecord {
  double t = 0.0, z = 0.0, mu = 0.0;
  bool published = false;
};

/// mu ~ N(0, lambda), t = mu + e_t, z = mu + rho e_t + sqrt(1 - rho^2) xi.
/// Published iff t > t_cut and z > z_min (one-sided in t).
inline std::vector<EvidenceRecord> simulate_evidence(const EvidenceSimConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed, 0);
  const double sd_mu = std::sqrt(cfg.lambda_var), innov = std::sqrt(1 - cfg.rho_tz * cfg.rho_tz);
  std::vector<EvidenceRecord> out(cfg.n_factors);
  for (auto& r : out) {
    r.mu = sd_mu * rng.normal();
    const double et = rng.normal();
    r.t = r.mu + et;
    r.z = r.mu + cfg.rho_tz * et + innov * rng.normal();
    r.published = r.t > cfg.t_cut && r.z > cfg.z_min;
  }
  return out;
}

/// E(t | t > c) when t ~ N(0, 1 + lambda).
inline double truncated_mean_t(double lambda, double c) {
  const double s = std::sqrt(1.0 + lambda);
  return s * normal::pdf(c / s) / normal::sf(c / s);
}

/// Moment-matching lambda that ignores the evidence screen: solves
/// mean(t) = E(t | t > t_cut; lambda) by bisection over [0.01, 50].
inline double estimate_lambda_misspecified(std::span<const double> t_published, double t_cut = 2.5) {
  if (t_published.empty()) throw domain_error("empty published sample");
  double sum = 0.0;
  for (double t : t_published) {
    if (!(t > t_cut)) throw domain_error("published t must exceed the cutoff");
    sum += t;
  }
  const double target = sum / static_cast<double>(t_published.size());
  double lo = 0.01, hi = 50.0;
  if (target < truncated_mean_t(lo, t_cut))
    throw numerical_error("mean published t lies below the lambda -> 0 moment; no solution");
  if (target > truncated_mean_t(hi, t_cut))
    throw numerical_error("mean published t lies above the lambda = 50 moment; no solution");
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (truncated_mean_t(mid, t_cut) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Posterior mean of mu given t alone, mu ~ N(0, lambda).
inline double posterior_mean_t_only(double t, double lambda) { return lambda * t / (1.0 + lambda); }

/// Posterior mean of mu given t and the publication screen z > z_min.
/// Given t, mu ~ N(m, v) and z ~ N((1 - rho) m + rho t, (1 - rho)^2 v + 1 - rho^2)
/// with Cov(mu, z | t) = (1 - rho) v; truncating z shifts mu by the regression
/// of mu on z times the inverse Mills ratio.
inline double posterior_mean_screened(double t, double z_min, double lambda, double rho) {
  const double v = lambda / (1.0 + lambda), m = v * t;
  const double mz = (1 - rho) * m + rho * t;
  const double sz = std::sqrt((1 - rho) * (1 - rho) * v + 1 - rho * rho);
  const double a = (z_min - mz) / sz;
  const double sf = normal::sf(a);
  const double mills = sf > 0 ? normal::pdf(a) / sf : std::max(a, 0.0);
  return m + (1 - rho) * v / sz * mills;
}

/// Posterior mean of mu given both t and z (bivariate-normal conjugate update).
inline double posterior_mean_full(double t, double z, double lambda, double rho) {
  return ((t + z) / (1 + rho)) / (1.0 / lambda + 2.0 / (1 + rho));
}

struct EvidenceGrid {
  std::vector<double> lambdas{0.5, 2.0, 12.0};
  std::vector<double> rhos{0.0, 0.3, 0.6};
  std::vector<double> z_mins{0.0, 1.0, 2.0};
  std::size_t n_factors = 1000000;
  double t_cut = 2.5;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct BiasCell {
  double lambda = 0.0, rho = 0.0, z_min = 0.0;
  std::size_t n_published = 0;
  double lambda_hat = std::numeric_limits<double>::quiet_NaN();
  double estimated_shrinkage = std::numeric_limits<double>::quiet_NaN();  // 1 - mean(mu_hat) / mean(t)
  double actual_shrinkage = std::numeric_limits<double>::quiet_NaN();     // 1 - mean(mu) / mean(t)
  std::size_t ordering_violations = 0;  // records with E(mu | t) > E(mu | t, z > z_min) at the true lambda
  bool solved = false;
  double error() const { return estimated_shrinkage - actual_shrinkage; }
};

/// Estimated (misspecified empirical Bayes) vs actual shrinkage for each grid cell.
inline BiasCell shrinkage_bias_cell(double lambda, double rho, double z_min, std::size_t n_factors,
                                    double t_cut, std::uint64_t seed) {
  BiasCell c;
  c.lambda = lambda;
  c.rho = rho;
  c.z_min = z_min;
  const auto recs = simulate_evidence({lambda, rho, z_min, t_cut, n_factors, seed});
  std::vector<double> t;
  double sum_mu = 0.0;
  for (const auto& r : recs) {
    if (!r.published) continue;
    t.push_back(r.t);
    sum_mu += r.mu;
    if (posterior_mean_t_only(r.t, lambda) > posterior_mean_screened(r.t, z_min, lambda, rho) + 1e-12)
      ++c.ordering_violations;
  }
  c.n_published = t.size();
  if (t.empty()) return c;
  double sum_t = 0.0;
  for (double v : t) sum_t += v;
  c.actual_shrinkage = 1.0 - sum_mu / sum_t;
  try {
    c.lambda_hat = estimate_lambda_misspecified(t, t_cut);
  } catch (const numerical_error&) {
    return c;
  }
  double sum_hat = 0.0;
  for (double v : t) sum_hat += posterior_mean_t_only(v, c.lambda_hat);
  c.estimated_shrinkage = 1.0 - sum_hat / sum_t;
  c.solved = true;
  return c;
}

inline std::vector<BiasCell> shrinkage_bias_study(const EvidenceGrid& g) {
  std::vector<std::array<double, 3>> cells;
  for (double l : g.lambdas)
    for (double r : g.rhos)
      for (double z : g.z_mins) cells.push_back({l, r, z});
  std::vector<BiasCell> out(cells.size());
  parallel_for(cells.size(), g.threads, [&](std::size_t i) {
    out[i] = shrinkage_bias_cell(cells[i][0], cells[i][1], cells[i][2], g.n_factors, g.t_cut,
                                 g.seed + 0x9E3779B97F4A7C15ULL * (i + 1));
  });
  return out;
}

}  // namespace thurdle
