#pragma once

// Quasi-maximum likelihood for published |t|: maximize the mean log density of
// |t| conditional on publication over a box of parameters. Each specification
// names its latent family, its publication rule, and the bounds of every
// parameter; a bound with lo == hi fixes that parameter.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "thurdle/error.hpp"
#include "thurdle/latent.hpp"
#include "thurdle/model.hpp"
#include "thurdle/optimize.hpp"
#include "thurdle/parallel.hpp"
#include "thurdle/rng.hpp"

namespace thurdle {

enum class LatentFamily { LogNormal, Exponential, ScaledT, MixtureNormal };
enum class PubFamily { Staircase, ThreeStep, Logistic, Unselected };

struct ParamBound {
  std::string name;
  double lo = 0.0, hi = 0.0;
  bool fixed() const { return lo == hi; }
};

inline std::vector<std::string> latent_param_names(LatentFamily f) {
  switch (f) {
    case LatentFamily::LogNormal: return {"lambda_mu", "lambda_sigma"};
    case LatentFamily::Exponential: return {"mean"};
    case LatentFamily::ScaledT: return {"scale", "dof"};
    case LatentFamily::MixtureNormal: return {"w", "m1", "s1", "m2", "s2"};
  }
  return {};
}

inline std::vector<std::string> pub_param_names(PubFamily f) {
  switch (f) {
    case PubFamily::Staircase: return {"eta"};
    case PubFamily::ThreeStep: return {"eta_a", "eta_b", "eta_c"};
    case PubFamily::Logistic: return {"location", "slope"};
    case PubFamily::Unselected: return {};
  }
  return {};
}

struct FitSpec {
  std::string name = "baseline";
  LatentFamily latent_family = LatentFamily::LogNormal;
  PubFamily pub_family = PubFamily::Staircase;
  std::vector<ParamBound> bounds;  // pi_f, then latent, then publication parameters

  // Data inclusion: |t| must exceed significance_cutoff unless small t-stats are
  // included, in which case |t| must exceed small_t_cutoff.
  bool include_small_t = false;
  double small_t_cutoff = 0.50;
  double significance_cutoff = 1.96;

  // Cutoffs of the step publication rules.
  double t_a = 1.50;
  double t_good = 2.58;

  int n_starts = 10;
  double tol = 1e-9;
  int max_iter = 500;
  std::uint64_t seed = 1;
  int threads = 1;

  double inclusion_cutoff() const { return include_small_t ? small_t_cutoff : significance_cutoff; }

  std::vector<std::string> param_names() const {
    std::vector<std::string> out{"pi_f"};
    for (auto& s : latent_param_names(latent_family)) out.push_back(s);
    for (auto& s : pub_param_names(pub_family)) out.push_back(s);
    return out;
  }

  std::size_t index(std::string_view param) const {
    for (std::size_t i = 0; i < bounds.size(); ++i)
      if (bounds[i].name == param) return i;
    throw usage_error("specification '" + name + "' has no parameter '" + std::string(param) + "'");
  }
  const ParamBound& bound(std::string_view param) const { return bounds[index(param)]; }

  void set_bound(std::string_view param, double lo, double hi) {
    auto& b = bounds[index(param)];
    b.lo = lo;
    b.hi = hi;
  }
  void fix(std::string_view param, double value) { set_bound(param, value, value); }

  void validate() const {
    const auto names = param_names();
    if (names.size() != bounds.size()) throw usage_error("bounds do not match the parameter list");
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto& b = bounds[i];
      if (b.name != names[i]) throw usage_error("bound '" + b.name + "' out of order; expected " + names[i]);
      if (!(std::isfinite(b.lo) && std::isfinite(b.hi) && b.lo <= b.hi))
        throw usage_error("invalid bounds for " + b.name);
    }
    const auto& pf = bound("pi_f");
    if (pf.lo < 0 || pf.hi > 1) throw usage_error("pi_f bounds must lie in [0, 1]");
    if (n_starts < 1 || max_iter < 1 || !(tol > 0)) throw usage_error("invalid optimizer settings");
    if (!(inclusion_cutoff() >= 0)) throw usage_error("inclusion cutoff must be >= 0");
  }

  /// Default bounds for a family pair.
  static FitSpec make(LatentFamily lf, PubFamily pf) {
    FitSpec s;
    s.latent_family = lf;
    s.pub_family = pf;
    s.bounds.push_back({"pi_f", 0.01, 0.99});
    switch (lf) {
      case LatentFamily::LogNormal:
        // lambda_mu >= 0 keeps the median true |mu| at one SE or more; below that true
        // factors blur into false ones and pi_F is not identified.
        s.bounds.push_back({"lambda_mu", 0.0, 2.5});
        s.bounds.push_back({"lambda_sigma", 0.05, 2.5});
        break;
      case LatentFamily::Exponential: s.bounds.push_back({"mean", 0.1, 20.0}); break;
      case LatentFamily::ScaledT:
        s.bounds.push_back({"scale", 0.1, 20.0});
        s.bounds.push_back({"dof", 2.1, 50.0});
        break;
      case LatentFamily::MixtureNormal:
        s.bounds.push_back({"w", 0.0, 1.0});
        s.bounds.push_back({"m1", -5.0, 10.0});
        s.bounds.push_back({"s1", 0.1, 10.0});
        s.bounds.push_back({"m2", -5.0, 10.0});
        s.bounds.push_back({"s2", 0.1, 10.0});
        break;
    }
    switch (pf) {
      case PubFamily::Staircase: s.bounds.push_back({"eta", 1.0 / 3, 2.0 / 3}); break;
      case PubFamily::ThreeStep:
        s.bounds.push_back({"eta_a", 0.0, 1.0});
        s.bounds.push_back({"eta_b", 0.0, 1.0});
        s.bounds.push_back({"eta_c", 0.0, 1.0});
        s.include_small_t = true;
        break;
      case PubFamily::Logistic:
        s.bounds.push_back({"location", 0.0, 5.0});
        s.bounds.push_back({"slope", 0.5, 20.0});
        break;
      case PubFamily::Unselected:
        s.include_small_t = true;
        s.small_t_cutoff = 0.0;
        break;
    }
    return s;
  }

  static std::vector<std::string> preset_names() {
    return {"baseline", "3step",    "3step-restricted", "pif10", "pif20", "eta-half",
            "eta-wide", "logistic", "exp",              "t",     "mixnorm", "unselected"};
  }

  /// Named specifications: the baseline, its ten robustness variants, and the
  /// unselected model used for simulation checks without publication bias.
  static FitSpec preset(std::string_view which) {
    FitSpec s;
    if (which == "baseline") {
      s = make(LatentFamily::LogNormal, PubFamily::Staircase);
    } else if (which == "3step") {
      s = make(LatentFamily::LogNormal, PubFamily::ThreeStep);
    } else if (which == "3step-restricted") {
      s = make(LatentFamily::LogNormal, PubFamily::ThreeStep);
      s.set_bound("eta_a", 0.0, 1.0 / 3);
      s.set_bound("eta_b", 0.0, 1.0 / 3);
      s.set_bound("eta_c", 1.0 / 3, 2.0 / 3);
    } else if (which == "pif10") {
      s = make(LatentFamily::LogNormal, PubFamily::Staircase);
      s.set_bound("pi_f", 0.10, 0.99);
    } else if (which == "pif20") {
      s = make(LatentFamily::LogNormal, PubFamily::Staircase);
      s.set_bound("pi_f", 0.20, 0.99);
    } else if (which == "eta-half") {
      s = make(LatentFamily::LogNormal, PubFamily::Staircase);
      s.fix("eta", 0.5);
    } else if (which == "eta-wide") {
      s = make(LatentFamily::LogNormal, PubFamily::Staircase);
      s.set_bound("eta", 1.0 / 3, 1.0);
    } else if (which == "logistic") {
      s = make(LatentFamily::LogNormal, PubFamily::Logistic);
    } else if (which == "exp") {
      s = make(LatentFamily::Exponential, PubFamily::Staircase);
    } else if (which == "t") {
      s = make(LatentFamily::ScaledT, PubFamily::Staircase);
    } else if (which == "mixnorm") {
      s = make(LatentFamily::MixtureNormal, PubFamily::Staircase);
    } else if (which == "unselected") {
      s = make(LatentFamily::LogNormal, PubFamily::Unselected);
    } else {
      throw usage_error("unknown specification '" + std::string(which) + "'");
    }
    s.name = std::string(which);
    return s;
  }
};

/// Builds ModelParams from a full parameter vector aligned with spec.bounds.
inline ModelParams params_from_values(const FitSpec& spec, std::span<const double> v) {
  if (v.size() != spec.bounds.size()) throw domain_error("parameter vector has the wrong length");
  ModelParams p;
  p.pi_f = v[0];
  std::size_t k = 1;
  switch (spec.latent_family) {
    case LatentFamily::LogNormal: p.latent = LogNormal{v[k], v[k + 1]}; k += 2; break;
    case LatentFamily::Exponential: p.latent = Exponential{v[k]}; k += 1; break;
    case LatentFamily::ScaledT: p.latent = ScaledT{v[k], v[k + 1]}; k += 2; break;
    case LatentFamily::MixtureNormal:
      p.latent = MixtureNormal{v[k], v[k + 1], v[k + 2], v[k + 3], v[k + 4]};
      k += 5;
      break;
  }
  switch (spec.pub_family) {
    case PubFamily::Staircase:
      p.pub.shape = Staircase{v[k], spec.significance_cutoff, spec.t_good};
      break;
    case PubFamily::ThreeStep:
      p.pub.shape = ThreeStep{v[k], v[k + 1], v[k + 2], spec.t_a, spec.significance_cutoff, spec.t_good};
      break;
    case PubFamily::Logistic: p.pub.shape = Logistic{v[k], v[k + 1]}; break;
    case PubFamily::Unselected: p.pub.shape = Unselected{}; break;
  }
  return p;
}

/// Inverse of params_from_values; throws if the families do not match the spec.
inline std::vector<double> values_from_params(const FitSpec& spec, const ModelParams& p) {
  std::vector<double> v{p.pi_f};
  auto mismatch = [] { return domain_error("parameters do not match the specification families"); };
  switch (spec.latent_family) {
    case LatentFamily::LogNormal: {
      auto* d = std::get_if<LogNormal>(&p.latent);
      if (!d) throw mismatch();
      v.insert(v.end(), {d->lambda_mu, d->lambda_sigma});
      break;
    }
    case LatentFamily::Exponential: {
      auto* d = std::get_if<Exponential>(&p.latent);
      if (!d) throw mismatch();
      v.push_back(d->mean);
      break;
    }
    case LatentFamily::ScaledT: {
      auto* d = std::get_if<ScaledT>(&p.latent);
      if (!d) throw mismatch();
      v.insert(v.end(), {d->scale, d->dof});
      break;
    }
    case LatentFamily::MixtureNormal: {
      auto* d = std::get_if<MixtureNormal>(&p.latent);
      if (!d) throw mismatch();
      v.insert(v.end(), {d->w, d->m1, d->s1, d->m2, d->s2});
      break;
    }
  }
  switch (spec.pub_family) {
    case PubFamily::Staircase: {
      auto* r = std::get_if<Staircase>(&p.pub.shape);
      if (!r) throw mismatch();
      v.push_back(r->eta);
      break;
    }
    case PubFamily::ThreeStep: {
      auto* r = std::get_if<ThreeStep>(&p.pub.shape);
      if (!r) throw mismatch();
      v.insert(v.end(), {r->eta_a, r->eta_b, r->eta_c});
      break;
    }
    case PubFamily::Logistic: {
      auto* r = std::get_if<Logistic>(&p.pub.shape);
      if (!r) throw mismatch();
      v.insert(v.end(), {r->location, r->slope});
      break;
    }
    case PubFamily::Unselected:
      if (!std::holds_alternative<Unselected>(p.pub.shape)) throw mismatch();
      break;
  }
  return v;
}

/// |t| of the records inside the spec's inclusion region.
inline std::vector<double> included_abs_t(std::span<const double> t, const FitSpec& spec) {
  const double cut = spec.inclusion_cutoff();
  std::vector<double> out;
  out.reserve(t.size());
  for (double v : t) {
    if (!std::isfinite(v)) throw data_error("non-finite t-stat");
    if (std::fabs(v) > cut) out.push_back(std::fabs(v));
  }
  return out;
}

/// -(1/n) sum log density_published(|t_i|; theta). Every |t_i| must lie in the
/// inclusion region; a |t| where publication has probability zero throws.
inline double neg_mean_loglik(const ModelParams& theta, std::span<const double> t_abs, const FitSpec& spec) {
  const double cut = spec.inclusion_cutoff();
  for (double v : t_abs)
    if (!(v > cut)) throw domain_error("|t| = " + std::to_string(v) + " lies outside the inclusion region");
  const Model m(theta, cut);
  return -m.mean_log_density_published(t_abs);
}

struct FitResult {
  ModelParams theta_hat;
  std::vector<double> values;  // aligned with spec.bounds
  double loglik = -std::numeric_limits<double>::infinity();  // mean log-likelihood
  bool converged = false;
  std::size_t n_obs = 0;
  std::size_t n_excluded = 0;
  FitSpec spec;
  std::vector<std::string> at_bound;  // free parameters within 1e-6 of a bound
  bool small_sample = false;          // fewer than 30 observations
  int starts_converged = 0;
  long evaluations = 0;

  double value(std::string_view param) const { return values[spec.index(param)]; }
  double e_mu() const { return mean(theta_hat.latent); }
  double sd_mu() const { return sd(theta_hat.latent); }
};

namespace detail {

inline double to_box(double u, const ParamBound& b) { return b.lo + (b.hi - b.lo) / (1.0 + std::exp(-u)); }

inline double from_box(double x, const ParamBound& b) {
  const double p = std::clamp((x - b.lo) / (b.hi - b.lo), 1e-12, 1 - 1e-12);
  return std::log(p / (1 - p));
}

/// Objective on the full parameter vector; infeasible points give +inf.
inline double objective(const FitSpec& spec, std::span<const double> v, std::span<const double> t_abs) {
  try {
    const Model m(params_from_values(spec, v), spec.inclusion_cutoff());
    const double f = -m.mean_log_density_published(t_abs);
    return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
  } catch (const domain_error&) {
    return std::numeric_limits<double>::infinity();
  } catch (const numerical_error&) {
    return std::numeric_limits<double>::infinity();
  }
}

/// Latin-hypercube start points in the interior of the box (full vectors).
inline std::vector<std::vector<double>> lhs_starts(const FitSpec& spec) {
  Rng rng(spec.seed, 0x5741525453ULL);
  const std::size_t n = static_cast<std::size_t>(spec.n_starts), d = spec.bounds.size();
  std::vector<std::vector<double>> pts(n, std::vector<double>(d));
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < d; ++j) {
    const auto& b = spec.bounds[j];
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (static_cast<double>(perm[i]) + rng.uniform()) / static_cast<double>(n);
      pts[i][j] = b.fixed() ? b.lo : b.lo + (b.hi - b.lo) * (0.02 + 0.96 * u);
    }
  }
  // Three-step rules must be monotone; order the drawn probabilities so starts are feasible.
  if (spec.pub_family == PubFamily::ThreeStep) {
    const std::size_t a = spec.index("eta_a"), b = spec.index("eta_b"), c = spec.index("eta_c");
    const bool same = spec.bounds[a].lo == spec.bounds[c].lo && spec.bounds[a].hi == spec.bounds[c].hi &&
                      spec.bounds[b].lo == spec.bounds[c].lo && spec.bounds[b].hi == spec.bounds[c].hi;
    for (auto& p : pts) {
      if (same) {
        double e[3] = {p[a], p[b], p[c]};
        std::sort(e, e + 3);
        p[a] = e[0], p[b] = e[1], p[c] = e[2];
      } else if (p[a] > p[b]) {
        std::swap(p[a], p[b]);
      }
    }
  }
  return pts;
}

struct StartOutcome {
  std::vector<double> values;
  double f = std::numeric_limits<double>::infinity();
  bool converged = false;
  long evaluations = 0;
};

inline StartOutcome run_start(const FitSpec& spec, const std::vector<double>& start,
                              std::span<const double> t_abs) {
  std::vector<std::size_t> free;
  for (std::size_t j = 0; j < spec.bounds.size(); ++j)
    if (!spec.bounds[j].fixed()) free.push_back(j);

  auto expand = [&](const std::vector<double>& u) {
    std::vector<double> v = start;
    for (std::size_t k = 0; k < free.size(); ++k) v[free[k]] = to_box(u[k], spec.bounds[free[k]]);
    return v;
  };
  std::vector<double> u0(free.size());
  for (std::size_t k = 0; k < free.size(); ++k) u0[k] = from_box(start[free[k]], spec.bounds[free[k]]);

  opt::NelderMeadOptions nm;
  nm.ftol_rel = spec.tol;
  nm.max_iter = spec.max_iter;
  auto f = [&](const std::vector<double>& u) { return objective(spec, expand(u), t_abs); };
  auto r = opt::nelder_mead(f, u0, nm);
  long evals = r.evaluations;
  // Long flat ridges can exhaust max_iter; a fresh simplex from the last point usually finishes.
  for (int restart = 0; restart < 3 && !r.converged && std::isfinite(r.fx); ++restart) {
    r = opt::nelder_mead(f, r.x, nm);
    evals += r.evaluations;
  }
  StartOutcome out;
  out.values = expand(r.x);
  out.f = r.fx;
  out.converged = r.converged && std::isfinite(r.fx);
  out.evaluations = evals;

  // The transform only reaches a bound asymptotically; snap parameters that ended
  // up next to one when that does not worsen the objective.
  for (std::size_t j : free) {
    const auto& b = spec.bounds[j];
    const double width = b.hi - b.lo;
    for (double edge : {b.lo, b.hi}) {
      if (std::fabs(out.values[j] - edge) > 1e-3 * width) continue;
      auto trial = out.values;
      trial[j] = edge;
      const double f = objective(spec, trial, t_abs);
      ++out.evaluations;
      if (f <= out.f) {
        out.values = trial;
        out.f = f;
      }
    }
  }
  return out;
}

inline FitResult finish(const FitSpec& spec, const std::vector<StartOutcome>& outcomes, std::size_t n_obs,
                        std::size_t n_excluded) {
  FitResult res;
  res.spec = spec;
  res.n_obs = n_obs;
  res.n_excluded = n_excluded;
  res.small_sample = n_obs < 30;
  std::size_t best = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    res.evaluations += outcomes[i].evaluations;
    if (outcomes[i].converged) ++res.starts_converged;
    if (outcomes[i].f < outcomes[best].f) best = i;
  }
  if (res.starts_converged == 0 || !std::isfinite(outcomes[best].f)) {
    double fb = outcomes[best].f;
    throw convergence_error("no optimizer start converged (" + std::to_string(outcomes.size()) +
                                " starts, " + std::to_string(res.evaluations) + " evaluations, best objective " +
                                std::to_string(fb) + ")",
                            fb);
  }
  const auto& o = outcomes[best];
  res.values = o.values;
  res.theta_hat = params_from_values(spec, o.values);
  res.loglik = -o.f;
  res.converged = o.converged;
  for (std::size_t j = 0; j < spec.bounds.size(); ++j) {
    const auto& b = spec.bounds[j];
    if (b.fixed()) continue;
    if (std::fabs(o.values[j] - b.lo) <= 1e-6 || std::fabs(o.values[j] - b.hi) <= 1e-6)
      res.at_bound.push_back(b.name);
  }
  return res;
}

}  // namespace detail

/// Fits the spec to already-filtered |t| values.
inline FitResult fit_abs(std::span<const double> t_abs, const FitSpec& spec, std::size_t n_excluded = 0) {
  spec.validate();
  if (t_abs.empty()) throw data_error("no t-stats inside the inclusion region");
  const auto starts = detail::lhs_starts(spec);
  std::vector<detail::StartOutcome> outcomes(starts.size());
  parallel_for(starts.size(), spec.threads,
               [&](std::size_t i) { outcomes[i] = detail::run_start(spec, starts[i], t_abs); });
  return detail::finish(spec, outcomes, t_abs.size(), n_excluded);
}

/// Fits the spec to raw t-stats; records outside the inclusion region are dropped.
inline FitResult fit(std::span<const double> t, const FitSpec& spec) {
  const auto t_abs = included_abs_t(t, spec);
  return fit_abs(t_abs, spec, t.size() - t_abs.size());
}

struct ProfilePoint {
  double value = 0.0;
  double loglik = -std::numeric_limits<double>::infinity();
  bool converged = false;
};

/// Profile log-likelihood: for each grid value, fix `param` there and maximize
/// over the remaining parameters.
inline std::vector<ProfilePoint> profile_loglik(std::span<const double> t, const FitSpec& spec,
                                                std::string_view param, std::span<const double> grid) {
  const auto& b = spec.bound(param);
  for (double g : grid)
    if (!(g >= b.lo - 1e-12 && g <= b.hi + 1e-12)) throw domain_error("profile grid lies outside the bounds");
  const auto t_abs = included_abs_t(t, spec);
  std::vector<ProfilePoint> out;
  for (double g : grid) {
    FitSpec s = spec;
    s.fix(param, g);
    ProfilePoint p{g};
    try {
      const auto r = fit_abs(t_abs, s);
      p.loglik = r.loglik;
      p.converged = r.converged;
    } catch (const convergence_error&) {
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace thurdle
