#pragma once

// Densities and tail probabilities of |t| conditional on truth status and on
// publication. Model caches the latent discretization and the publication
// normalizer, so every query is a weighted sum of closed-form normal terms.

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thurdle/error.hpp"
#include "thurdle/latent.hpp"
#include "thurdle/normal.hpp"
#include "thurdle/pub_rule.hpp"
#include "thurdle/quadrature.hpp"

namespace thurdle {

/// Upper end of the |t| support used for numerical normalization integrals.
inline constexpr double kTMax = 20.0;

struct ModelParams {
  double pi_f = 0.5;  // probability a factor is false
  LatentDistSpec latent = LogNormal{};
  PubRule pub{};

  void validate() const {
    if (!(pi_f >= 0 && pi_f <= 1)) throw domain_error("pi_f must lie in [0, 1]");
    thurdle::validate(latent);
    pub.validate();
  }
};

enum class Truth { False, True };

struct FactorRecord {
  double t = 0.0;
  std::optional<Truth> truth;
  std::optional<bool> published;
  std::optional<double> mu;
};

struct Literature {
  std::vector<FactorRecord> records;
  std::string provenance;

  std::vector<double> t_values() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.t);
    return out;
  }

  /// t-stats of published records; a missing flag counts as published (ingested data).
  std::vector<double> published_t() const {
    std::vector<double> out;
    for (const auto& r : records)
      if (r.published.value_or(true)) out.push_back(r.t);
    return out;
  }
};

enum class Condition { All, False, True, Published };

class Model {
 public:
  /// `inclusion_floor`: published densities and tails are restricted to |t| > floor.
  explicit Model(ModelParams params, double inclusion_floor = 0.0,
                 const quad::MeasureOptions& opt = {})
      : params_(std::move(params)), floor_(inclusion_floor) {
    params_.validate();
    if (!(floor_ >= 0)) throw domain_error("inclusion floor must be >= 0");
    measure_ = discretize(params_.latent, opt);
    published_mass_ = compute_published_mass();
  }

  const ModelParams& params() const { return params_; }
  double inclusion_floor() const { return floor_; }
  const quad::DiscreteMeasure& latent_measure() const { return measure_; }

  static double density_false(double t_abs) {
    check_abs(t_abs);
    return 2.0 * normal::pdf(t_abs);
  }

  double density_true(double t_abs) const {
    check_abs(t_abs);
    return true_kernel_sum(t_abs);
  }

  double density_marginal(double t_abs) const {
    check_abs(t_abs);
    return params_.pi_f * 2.0 * normal::pdf(t_abs) + (1 - params_.pi_f) * true_kernel_sum(t_abs);
  }

  /// Density of |t| among published factors with |t| > floor; s_bar cancels.
  double density_published(double t_abs) const {
    check_abs(t_abs);
    if (t_abs <= floor_) return 0.0;
    return params_.pub.relative(t_abs) * density_marginal(t_abs) / published_mass_;
  }

  /// Integral of relative publication probability times the marginal density over |t| > floor.
  double published_mass() const { return published_mass_; }

  /// Pr(|t| > x | F) in closed form.
  static double sf_false(double x) { return 2.0 * normal::sf(x); }

  double sf_true(double x) const {
    if (std::isinf(x)) return 0.0;
    double s = 0.0;
    const auto& mu = measure_.x;
    const auto& w = measure_.w;
    for (std::size_t j = 0; j < mu.size(); ++j) s += w[j] * normal::folded_sf(x, mu[j]);
    return s;
  }

  double sf_marginal(double x) const {
    return params_.pi_f * sf_false(x) + (1 - params_.pi_f) * sf_true(x);
  }

  /// Pr(|t| in (lo, hi] | condition); hi may be +infinity.
  double tail_prob(double lo, double hi, Condition c) const {
    if (!(lo >= 0) || !(hi >= lo)) throw domain_error("tail_prob requires 0 <= t_low <= t_high");
    switch (c) {
      case Condition::False:
        return std::isinf(hi) ? sf_false(lo) : interval_false(lo, hi);
      case Condition::True:
        return interval_true(lo, hi);
      case Condition::All:
        return interval_marginal(lo, hi);
      case Condition::Published:
        return weighted_mass(std::max(lo, floor_), hi) / published_mass_;
    }
    return 0.0;
  }

  /// Latent mass dropped by the discretization (truncated tails).
  double missing_mass() const { return std::max(0.0, 1.0 - measure_.total()); }

  /// sum_j w_j mu_j [phi(t - mu_j) + phi(t + mu_j)]: numerator of E(mu | |t|, T).
  double true_mu_moment(double t_abs) const {
    double s = 0.0;
    const auto& mu = measure_.x;
    const auto& w = measure_.w;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      // mu [phi(t - mu) + phi(t + mu)] is odd in mu.
      const double m = std::fabs(mu[j]);
      const double a = t_abs - m;
      if (std::fabs(a) > kExpCut) continue;
      const double c = 2.0 * t_abs * m;
      const double term = m * std::exp(-0.5 * a * a) * (c > kPairCut ? 1.0 : 1.0 + std::exp(-c));
      s += w[j] * (mu[j] < 0 ? -term : term);
    }
    return s * normal::inv_sqrt_2pi;
  }

  /// Density of the signed t among true factors, sum_j w_j phi(t - mu_j).
  double signed_density_true(double t) const {
    double s = 0.0;
    for (std::size_t j = 0; j < measure_.size(); ++j) {
      const double a = t - measure_.x[j];
      s += measure_.w[j] * std::exp(-0.5 * a * a);
    }
    return s * normal::inv_sqrt_2pi;
  }

  /// sum_j w_j mu_j phi(t - mu_j).
  double signed_mu_moment(double t) const {
    double s = 0.0;
    for (std::size_t j = 0; j < measure_.size(); ++j) {
      const double a = t - measure_.x[j];
      s += measure_.w[j] * measure_.x[j] * std::exp(-0.5 * a * a);
    }
    return s * normal::inv_sqrt_2pi;
  }

  /// Mean log published density over `t_abs`; entries must exceed the floor and
  /// carry positive publication probability.
  double mean_log_density_published(std::span<const double> t_abs) const {
    if (t_abs.empty()) throw domain_error("empty sample");
    const double log_z = std::log(published_mass_);
    double total = 0.0;
    for (double t : t_abs) {
      const double rel = params_.pub.relative(t);
      if (t <= floor_ || !(rel > 0))
        throw domain_error("observation |t| = " + std::to_string(t) +
                           " lies where the publication probability is zero");
      const double f = density_marginal(t);
      if (!(f > 0)) return -std::numeric_limits<double>::infinity();
      total += std::log(rel) + std::log(f) - log_z;
    }
    return total / static_cast<double>(t_abs.size());
  }

 private:
  static void check_abs(double t_abs) {
    if (!(t_abs >= 0)) throw domain_error("|t| must be non-negative");
  }

  // Beyond these, exp(-x^2/2) underflows and exp(-2 t |mu|) is below double epsilon.
  static constexpr double kExpCut = 38.6;
  static constexpr double kPairCut = 37.0;

  double true_kernel_sum(double t) const {
    double s = 0.0;
    const auto& mu = measure_.x;
    const auto& w = measure_.w;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      // phi(t - mu) + phi(t + mu) = phi(t - |mu|) (1 + exp(-2 t |mu|)).
      const double m = std::fabs(mu[j]);
      const double a = t - m;
      if (std::fabs(a) > kExpCut) continue;
      const double c = 2.0 * t * m;
      s += w[j] * std::exp(-0.5 * a * a) * (c > kPairCut ? 1.0 : 1.0 + std::exp(-c));
    }
    return s * normal::inv_sqrt_2pi;
  }

  static double interval_false(double lo, double hi) {
    // Phi(hi) - Phi(lo) doubled, evaluated on the side that avoids cancellation.
    return 2.0 * (normal::sf(lo) - normal::sf(hi));
  }

  double interval_true(double lo, double hi) const {
    double s = 0.0;
    const auto& mu = measure_.x;
    const auto& w = measure_.w;
    const bool open = std::isinf(hi);
    for (std::size_t j = 0; j < mu.size(); ++j)
      s += w[j] * (normal::folded_sf(lo, mu[j]) - (open ? 0.0 : normal::folded_sf(hi, mu[j])));
    return s;
  }

  double interval_marginal(double lo, double hi) const {
    return params_.pi_f * (std::isinf(hi) ? sf_false(lo) : interval_false(lo, hi)) +
           (1 - params_.pi_f) * interval_true(lo, hi);
  }

  /// Integral over (lo, hi] of relative publication probability times marginal density.
  double weighted_mass(double lo, double hi) const {
    if (hi <= lo) return 0.0;
    const auto steps = params_.pub.steps();
    if (!steps.empty()) {
      double s = 0.0;
      for (const auto& st : steps) {
        const double a = std::max(lo, st.lo), b = std::min(hi, st.hi);
        if (b > a && st.level > 0) s += st.level * interval_marginal(a, b);
      }
      return s;
    }
    // Smooth rule: numerical integral up to kTMax, flat extrapolation beyond.
    const double b = std::min(hi, kTMax);
    double s = 0.0;
    if (b > lo) {
      quad::Options opt;
      opt.abs_tol = 1e-13;
      opt.rel_tol = 1e-11;
      opt.initial_panels = std::max(4, static_cast<int>(std::ceil((b - lo) / 1.0)));
      s = quad::integrate(
              [this](double u) { return params_.pub.relative(u) * density_marginal(u); }, lo, b, opt)
              .value;
    }
    if (hi > kTMax) s += params_.pub.relative(kTMax) * interval_marginal(std::max(lo, kTMax), hi);
    return s;
  }

  double compute_published_mass() const {
    const double z = weighted_mass(floor_, std::numeric_limits<double>::infinity());
    if (!(z > 1e-14))
      throw degenerate_model_error("publication rule leaves no mass above the inclusion floor");
    return z;
  }

  ModelParams params_;
  double floor_;
  quad::DiscreteMeasure measure_;
  double published_mass_ = 1.0;
};

inline double density_false(double t_abs) { return Model::density_false(t_abs); }

inline double density_true(double t_abs, const LatentDistSpec& latent) {
  ModelParams p;
  p.pi_f = 0.0;
  p.latent = latent;
  return Model(p).density_true(t_abs);
}

inline double density_marginal(double t_abs, const ModelParams& params) {
  return Model(params).density_marginal(t_abs);
}

inline double density_published(double t_abs, const ModelParams& params, double inclusion_floor = 0.0) {
  return Model(params, inclusion_floor).density_published(t_abs);
}

inline double tail_prob(double t_low, double t_high, const ModelParams& params, Condition c) {
  return Model(params).tail_prob(t_low, t_high, c);
}

}  // namespace thurdle
