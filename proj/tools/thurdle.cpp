// thurdle: simulate literatures, fit the structural model, compute multiple
// testing statistics, and bootstrap them.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "thurdle/io.hpp"
#include "thurdle/thurdle.hpp"

namespace fs = std::filesystem;
using namespace thurdle;
using io::json;
using io::num;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = ".";
};

// Parameter flags shared by simulate and stats.
struct ThetaFlags {
  std::string theta_file;
  std::string preset = "estimate";
  std::optional<double> pi_f, lambda_mu, lambda_sigma, e_mu, sd_mu, exp_mean, t_scale, t_dof;
  std::vector<double> mix;
  std::string latent;
  std::string pub;
  std::optional<double> eta, t_low, t_good, logistic_location, logistic_slope;

  void add(CLI::App* app) {
    app->add_option("--theta", theta_file, "JSON with pi_f/latent/pub (or a fit result)")->check(CLI::ExistingFile);
    app->add_option("--preset", preset, "starting parameters: estimate or hlz")->check(CLI::IsMember({"estimate", "hlz"}));
    app->add_option("--pi-f", pi_f, "share of false factors");
    app->add_option("--latent", latent, "lognormal, exponential, scaled-t, mixnorm")
        ->check(CLI::IsMember({"lognormal", "exponential", "scaled-t", "mixnorm"}));
    app->add_option("--lambda-mu", lambda_mu, "lognormal log-mean");
    app->add_option("--lambda-sigma", lambda_sigma, "lognormal log-sd");
    app->add_option("--e-mu", e_mu, "lognormal mean of mu (with --sd-mu)");
    app->add_option("--sd-mu", sd_mu, "lognormal sd of mu (with --e-mu)");
    app->add_option("--exp-mean", exp_mean, "exponential mean");
    app->add_option("--t-scale", t_scale, "scaled-t scale");
    app->add_option("--t-dof", t_dof, "scaled-t degrees of freedom");
    app->add_option("--mix", mix, "mixture w,m1,s1,m2,s2")->delimiter(',')->expected(5);
    app->add_option("--pub", pub, "staircase, logistic, unselected")
        ->check(CLI::IsMember({"staircase", "logistic", "unselected"}));
    app->add_option("--eta", eta, "staircase haircut");
    app->add_option("--t-low", t_low, "staircase lower cutoff");
    app->add_option("--t-good", t_good, "staircase upper cutoff");
    app->add_option("--logistic-location", logistic_location);
    app->add_option("--logistic-slope", logistic_slope);
  }

  ModelParams build() const {
    ModelParams p = preset == "hlz" ? presets::hlz() : presets::estimate();
    if (!theta_file.empty()) p = io::params_from_json(json::parse(io::read_file(theta_file)));
    if (pi_f) p.pi_f = *pi_f;

    std::string fam = latent;
    if (fam.empty() && (lambda_mu || lambda_sigma || e_mu || sd_mu)) fam = "lognormal";
    if (fam == "lognormal") {
      LogNormal d = std::holds_alternative<LogNormal>(p.latent) ? std::get<LogNormal>(p.latent) : LogNormal{};
      if (e_mu || sd_mu) {
        if (!(e_mu && sd_mu)) throw usage_error("--e-mu and --sd-mu go together");
        if (lambda_mu || lambda_sigma) throw usage_error("give either moments or lambda parameters, not both");
        if (!(*e_mu > 0 && *sd_mu > 0)) throw usage_error("--e-mu and --sd-mu must be positive");
        d = LogNormal::from_moments(*e_mu, *sd_mu);
      }
      if (lambda_mu) d.lambda_mu = *lambda_mu;
      if (lambda_sigma) d.lambda_sigma = *lambda_sigma;
      p.latent = d;
    } else if (fam == "exponential") {
      p.latent = Exponential{exp_mean.value_or(2.0)};
    } else if (fam == "scaled-t") {
      p.latent = ScaledT{t_scale.value_or(1.0), t_dof.value_or(4.0)};
    } else if (fam == "mixnorm") {
      if (mix.size() != 5) throw usage_error("--latent mixnorm needs --mix w,m1,s1,m2,s2");
      p.latent = MixtureNormal{mix[0], mix[1], mix[2], mix[3], mix[4]};
    } else if (exp_mean) {
      p.latent = Exponential{*exp_mean};
    }

    if (pub == "unselected") {
      p.pub.shape = Unselected{};
    } else if (pub == "logistic") {
      p.pub.shape = Logistic{logistic_location.value_or(2.0), logistic_slope.value_or(3.0)};
    } else if (pub == "staircase" || eta || t_low || t_good) {
      Staircase s = std::holds_alternative<Staircase>(p.pub.shape) ? std::get<Staircase>(p.pub.shape) : Staircase{};
      if (eta) s.eta = *eta;
      if (t_low) s.t_low = *t_low;
      if (t_good) s.t_good = *t_good;
      p.pub.shape = s;
    }
    try {
      p.validate();
    } catch (const domain_error& e) {
      throw usage_error(std::string("invalid parameters: ") + e.what());
    }
    return p;
  }
};

std::string out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return (fs::path(g.out_dir) / name).string();
}

void finish_manifest(const Globals& g, io::RunManifest& m, const std::string& name) {
  m.seed = g.seed;
  io::write_json(out_path(g, name + ".manifest.json"), m.to_json());
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Globals& g, std::size_t n, double rho, bool no_pub, const ThetaFlags& tf) {
  if (n < 1) throw usage_error("--n must be >= 1");
  if (!(std::fabs(rho) < 1)) throw usage_error("--rho must lie in (-1, 1)");
  SimConfig cfg{n, tf.build(), rho, g.seed, !no_pub};
  const auto lit = simulate(cfg);
  std::ostringstream csv;
  io::write_literature_csv(csv, lit);
  const auto path = out_path(g, "literature.csv");
  io::write_text(path, csv.str());

  io::RunManifest m;
  m.command = "simulate";
  m.config = {{"n", n}, {"rho", num(rho)}, {"apply_publication", !no_pub}, {"params", io::to_json(cfg.params)}};
  m.outputs = {path};
  finish_manifest(g, m, "literature");
  std::size_t exceed = 0, pubs = 0;
  for (const auto& r : lit.records) exceed += std::fabs(r.t) > 1.96, pubs += r.published.value_or(true);
  std::printf("wrote %s: %zu factors, %zu published, %zu with |t| > 1.96\n", path.c_str(), n, pubs, exceed);
  return 0;
}

int cmd_fit(const Globals& g, const std::string& input, const std::string& spec_name, int n_starts,
            bool allow_small, const std::string& profile_param, int profile_points) {
  FitSpec spec = FitSpec::preset(spec_name);
  spec.seed = g.seed;
  spec.threads = g.threads;
  if (n_starts > 0) spec.n_starts = n_starts;
  const auto lit = io::read_literature_csv(input);
  const auto t = lit.published_t();
  const auto t_abs = included_abs_t(t, spec);
  if (t_abs.empty()) throw data_error("every row is excluded by the inclusion cutoff " + io::format_double(spec.inclusion_cutoff()));
  if (t_abs.size() < 30 && !allow_small)
    throw data_error("only " + std::to_string(t_abs.size()) + " usable rows; at least 30 are required (--allow-small overrides)");

  const auto r = fit_abs(t_abs, spec, t.size() - t_abs.size());
  io::RunManifest m;
  m.command = "fit";
  m.add_input(input);
  m.config = {{"spec", io::to_json(spec)}};
  const auto path = out_path(g, "fit.json");
  io::write_json(path, io::to_json(r));
  m.outputs = {path};

  if (!profile_param.empty()) {
    if (profile_points < 2) throw usage_error("--profile-points must be >= 2");
    const auto& b = spec.bound(profile_param);
    if (b.fixed()) throw usage_error("cannot profile a fixed parameter");
    std::vector<double> grid;
    for (int i = 0; i < profile_points; ++i) grid.push_back(b.lo + (b.hi - b.lo) * i / (profile_points - 1));
    const auto prof = profile_loglik(t, spec, profile_param, grid);
    std::ostringstream csv;
    csv << profile_param << ",loglik,converged\n";
    for (const auto& p : prof) csv << io::format_double(p.value) << ',' << io::format_double(p.loglik) << ',' << p.converged << '\n';
    const auto ppath = out_path(g, "profile_" + profile_param + ".csv");
    io::write_text(ppath, csv.str());
    m.outputs.push_back(ppath);
  }
  finish_manifest(g, m, "fit");
  std::printf("fit %s: n=%zu loglik=%.6f pi_f=%.4f E(mu|T)=%.4f SD(mu|T)=%.4f%s\n", spec.name.c_str(), r.n_obs,
              r.loglik, r.theta_hat.pi_f, r.e_mu(), r.sd_mu(), r.converged ? "" : " (not converged)");
  return 0;
}

json hurdle_block(const Model& m) {
  const double alphas[] = {0.05, 0.01};
  const auto h = hurdles_for_fdr(alphas, m);
  return {{"fdr_5pct", io::to_json(h[0])}, {"fdr_1pct", io::to_json(h[1])}};
}

// Binned |t| densities split by truth status, weighted by pi_F.
std::string binned_csv(const std::vector<std::pair<std::string, const Model*>>& models, double width, double t_max) {
  std::ostringstream csv;
  csv << "bin_lo,bin_hi";
  for (const auto& [name, _] : models) csv << ',' << name << "_false," << name << "_true";
  csv << '\n';
  for (double lo = 0.0; lo < t_max - 1e-9; lo += width) {
    const double hi = lo + width;
    csv << io::format_double(lo) << ',' << io::format_double(hi);
    for (const auto& [name, m] : models) {
      const double pf = m->params().pi_f;
      csv << ',' << io::format_double(pf * m->tail_prob(lo, hi, Condition::False) / width) << ','
          << io::format_double((1 - pf) * m->tail_prob(lo, hi, Condition::True) / width);
    }
    csv << '\n';
  }
  return csv.str();
}

int cmd_stats(const Globals& g, const ThetaFlags& tf, bool hlz_demo, double step, double t_max,
              const std::string& input) {
  io::RunManifest m;
  m.command = "stats";
  if (hlz_demo) {
    const ModelParams base = presets::hlz();
    ModelParams zero = base;
    zero.pi_f = 0.0;
    const Model mb(base), mz(zero);
    const json out{{"baseline", {{"params", io::to_json(base)}, {"hurdles", hurdle_block(mb)}}},
                   {"pi_f_zero", {{"params", io::to_json(zero)}, {"hurdles", hurdle_block(mz)}}}};
    const auto jp = out_path(g, "hlz_demo.json"), cp = out_path(g, "hlz_hist.csv");
    io::write_json(jp, out);
    io::write_text(cp, binned_csv({{"baseline", &mb}, {"pi_f_zero", &mz}}, 0.25, 10.0));
    m.outputs = {jp, cp};
    m.config = {{"hlz_demo", true}};
    finish_manifest(g, m, "hlz_demo");
    std::printf("hlz demo: hurdle(5%%) baseline %.4f, pi_F = 0 %.4f\n", hurdle_for_fdr(0.05, mb).hurdle,
                hurdle_for_fdr(0.05, mz).hurdle);
    return 0;
  }
  if (!(step > 0) || !(t_max > step)) throw usage_error("need 0 < --step < --t-max");
  const ModelParams p = tf.build();
  const Model model(p);
  const bool is_signed = !positive_support(p.latent);

  std::ostringstream csv;
  csv << "t,density_marginal,density_published,fdr,local_fdr,fnr,shrinkage,sf_marginal\n";
  const int n = static_cast<int>(std::lround(t_max / step));
  for (int i = 0; i <= n; ++i) {
    const double t = i * step;
    auto safe = [](auto f) {
      try {
        return f();
      } catch (const numerical_error&) {
        return std::numeric_limits<double>::quiet_NaN();
      } catch (const domain_error&) {
        return std::numeric_limits<double>::quiet_NaN();
      }
    };
    csv << io::format_double(t) << ',' << io::format_double(model.density_marginal(t)) << ','
        << io::format_double(safe([&] { return model.density_published(t); })) << ','
        << io::format_double(safe([&] { return fdr_bayes(t, model); })) << ','
        << io::format_double(safe([&] { return local_fdr(t, model); })) << ','
        << io::format_double(safe([&] { return fnr(t, model); })) << ','
        << io::format_double(safe([&] { return shrinkage(t, model, is_signed).shrinkage; })) << ','
        << io::format_double(model.sf_marginal(t)) << '\n';
  }
  json out{{"params", io::to_json(p)},
           {"hurdles", hurdle_block(model)},
           {"pr_abs_t_gt_1_96", num(model.sf_marginal(1.96))},
           {"fdr_at_1_96", num(fdr_bayes(1.96, model))},
           {"fnr_at_1_96", num(fnr(1.96, model))}};
  if (!input.empty()) {
    m.add_input(input);
    const auto lit = io::read_literature_csv(input);
    const auto t = lit.published_t();
    if (t.empty()) throw data_error("input has no published t-stats");
    json su = json::object();
    for (auto method : {HurdleMethod::BH95, HurdleMethod::BY13}) {
      su[method_name(method) + "_5pct"] = io::to_json(stepup_hurdle(t, 0.05, method));
    }
    out["stepup"] = su;
    out["mean_local_fdr_published"] = num(mean_local_fdr(t, model));
    std::vector<double> nonzero;
    for (double v : t)
      if (v != 0.0) nonzero.push_back(v);
    out["mean_shrinkage_published"] = num(mean_shrinkage(nonzero, model, is_signed));
  }
  const auto jp = out_path(g, "stats.json"), cp = out_path(g, "curves.csv");
  io::write_json(jp, out);
  io::write_text(cp, csv.str());
  m.outputs = {jp, cp};
  m.config = {{"params", io::to_json(p)}, {"step", num(step)}, {"t_max", num(t_max)}};
  finish_manifest(g, m, "stats");
  const auto h = hurdle_for_fdr(0.05, model);
  std::printf("hurdle(5%%) = %s%s\n", io::format_double(h.hurdle).c_str(), h.feasible ? "" : " (infeasible)");
  return 0;
}

int cmd_bootstrap(const Globals& g, const std::string& mode, const std::string& input, const std::string& panel_file,
                  const std::string& theta_file, const std::string& spec_name, std::size_t reps, bool no_resample,
                  int n_starts, std::size_t n_predictors, std::size_t n_months) {
  if (mode == "semiparam" && panel_file.empty()) throw usage_error("--mode semiparam requires --panel");
  if (mode == "nonparam" && input.empty()) throw usage_error("--mode nonparam requires --input");
  if (reps < 1) throw usage_error("--reps must be >= 1");
  BootConfig cfg;
  cfg.n_reps = reps;
  cfg.spec = FitSpec::preset(spec_name);
  if (n_starts > 0) cfg.spec.n_starts = n_starts;
  cfg.spec.seed = g.seed;
  cfg.seed = g.seed;
  cfg.threads = g.threads;
  cfg.resample = !no_resample;
  cfg.fail_on_excess_failures = false;
  cfg.n_predictors = n_predictors;
  cfg.n_months = n_months;

  io::RunManifest m;
  m.command = "bootstrap";
  BootResult res;
  if (mode == "nonparam") {
    m.add_input(input);
    const auto lit = io::read_literature_csv(input);
    res = bootstrap_nonparametric(lit.published_t(), cfg);
  } else {
    m.add_input(panel_file);
    const auto panel = io::read_panel_csv(panel_file);
    ModelParams point;
    if (!theta_file.empty()) {
      m.add_input(theta_file);
      point = io::params_from_json(json::parse(io::read_file(theta_file)));
    } else if (!input.empty()) {
      m.add_input(input);
      auto spec = cfg.spec;
      spec.threads = g.threads;
      point = fit(io::read_literature_csv(input).published_t(), spec).theta_hat;
    } else {
      throw usage_error("--mode semiparam needs a point estimate: --theta or --input");
    }
    res = bootstrap_semiparametric(panel, point, cfg);
  }
  std::ostringstream reps_csv, sum_csv;
  io::write_boot_reps_csv(reps_csv, res);
  const auto summary = summarize(res);
  io::write_summary_csv(sum_csv, summary);
  const auto rp = out_path(g, "boot_reps.csv"), sp = out_path(g, "boot_summary.csv"), jp = out_path(g, "boot_summary.json");
  io::write_text(rp, reps_csv.str());
  io::write_text(sp, sum_csv.str());
  io::write_json(jp, io::to_json(summary));
  m.outputs = {rp, sp, jp};
  m.config = {{"mode", mode}, {"reps", reps}, {"resample", !no_resample}, {"spec", io::to_json(cfg.spec)},
              {"n_predictors", n_predictors}, {"n_months", n_months}};
  finish_manifest(g, m, "boot");
  std::printf("bootstrap %s: %zu reps, %zu failed\n", mode.c_str(), res.reps.size(), res.n_failed());
  res.check_failure_rate();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiple testing under publication bias: simulation, QML fitting, t-hurdles, bootstraps"};
  app.set_version_flag("--version", io::kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--threads", g.threads, "worker threads (0 = all cores)");
  app.add_option("--out-dir", g.out_dir, "output directory");

  auto* sim = app.add_subcommand("simulate", "simulate a literature");
  std::size_t n = 0;
  double rho = 0.0;
  bool no_pub = false;
  ThetaFlags sim_theta;
  sim->add_option("--n", n, "number of factors")->required();
  sim->add_option("--rho", rho, "AR1 coefficient of the noise across factors");
  sim->add_flag("--no-publication", no_pub, "mark every factor published");
  sim_theta.add(sim);

  auto* fitc = app.add_subcommand("fit", "fit the structural model by QML");
  std::string fit_input, fit_spec = "baseline", profile_param;
  int fit_starts = 0, profile_points = 21;
  bool allow_small = false;
  fitc->add_option("--input", fit_input, "t-stat CSV")->required()->check(CLI::ExistingFile);
  fitc->add_option("--spec", fit_spec, "specification")->check(CLI::IsMember(FitSpec::preset_names()));
  fitc->add_option("--n-starts", fit_starts, "optimizer starts");
  fitc->add_flag("--allow-small", allow_small, "fit fewer than 30 observations");
  fitc->add_option("--profile", profile_param, "also write a profile log-likelihood for this parameter");
  fitc->add_option("--profile-points", profile_points, "profile grid size");

  auto* st = app.add_subcommand("stats", "multiple-testing statistics for given parameters");
  ThetaFlags st_theta;
  bool hlz_demo = false;
  double step = 0.01, t_max = 20.0;
  std::string st_input;
  st_theta.add(st);
  st->add_flag("--hlz-demo", hlz_demo, "baseline HLZ calibration vs pi_F = 0");
  st->add_option("--step", step, "t grid step");
  st->add_option("--t-max", t_max, "t grid end");
  st->add_option("--input", st_input, "optional t-stat CSV for step-up hurdles and published means")
      ->check(CLI::ExistingFile);

  auto* bs = app.add_subcommand("bootstrap", "bootstrap the fit and its statistics");
  std::string mode = "nonparam", bs_input, panel, bs_theta, bs_spec = "baseline";
  std::size_t reps = 1000, n_predictors = 5000, n_months = 350;
  bool no_resample = false;
  int bs_starts = 0;
  bs->add_option("--mode", mode)->check(CLI::IsMember({"nonparam", "semiparam"}));
  bs->add_option("--input", bs_input, "t-stat CSV")->check(CLI::ExistingFile);
  bs->add_option("--panel", panel, "long panel CSV predictor,month,return")->check(CLI::ExistingFile);
  bs->add_option("--theta", bs_theta, "point estimate JSON (semiparam)")->check(CLI::ExistingFile);
  bs->add_option("--spec", bs_spec)->check(CLI::IsMember(FitSpec::preset_names()));
  bs->add_option("--reps", reps);
  bs->add_flag("--no-resample", no_resample, "identity resample (nonparam)");
  bs->add_option("--n-starts", bs_starts, "optimizer starts per fit");
  bs->add_option("--n-predictors", n_predictors, "predictor draws per replication (semiparam)");
  bs->add_option("--n-months", n_months, "month draws per replication (semiparam)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*sim) return cmd_simulate(g, n, rho, no_pub, sim_theta);
    if (*fitc) return cmd_fit(g, fit_input, fit_spec, fit_starts, allow_small, profile_param, profile_points);
    if (*st) return cmd_stats(g, st_theta, hlz_demo, step, t_max, st_input);
    if (*bs)
      return cmd_bootstrap(g, mode, bs_input, panel, bs_theta, bs_spec, reps, no_resample, bs_starts, n_predictors,
                           n_months);
  } catch (const usage_error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const domain_error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const json::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
