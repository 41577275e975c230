#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "thurdle/normal.hpp"
#include "thurdle/presets.hpp"
#include "thurdle/sim.hpp"
#include "thurdle/stats.hpp"

using namespace thurdle;

TEST(Fdr, HlzHurdlesMatchQuadrature) {
  const Model m(presets::hlz());
  EXPECT_NEAR(hurdle_for_fdr(0.05, m).hurdle, 2.254849027385442, 2e-6);
  EXPECT_NEAR(hurdle_for_fdr(0.01, m).hurdle, 2.9385918488057916, 2e-6);
  EXPECT_NEAR(shrinkage_delta(4.0, Model([] {
                                auto p = presets::hlz();
                                p.pi_f = 0.9;
                                return p;
                              }())),
              0.031418057516298135, 1e-8);
}

TEST(Fdr, AchievedFdrHitsTarget) {
  const Model m(presets::hlz());
  const auto h = hurdle_for_fdr(0.05, m);
  EXPECT_TRUE(h.feasible);
  EXPECT_NEAR(h.achieved_fdr, 0.05, 1e-6);
  EXPECT_EQ(h.method, HurdleMethod::BayesModel);
}

TEST(Fdr, NoFalseFactorsMeansZeroHurdle) {
  auto p = presets::hlz();
  p.pi_f = 0.0;
  EXPECT_EQ(hurdle_for_fdr(0.05, p).hurdle, 0.0);
}

TEST(Fdr, AllFalseIsInfeasible) {
  auto p = presets::hlz();
  p.pi_f = 1.0;
  const auto h = hurdle_for_fdr(0.05, p);
  EXPECT_FALSE(h.feasible);
  EXPECT_EQ(h.hurdle, kTMax);
}

TEST(Fdr, BackOfEnvelopeApproximation) {
  EXPECT_NEAR(fdr_bayes_approx(0.05, 353.0 / 1378.0, 0.444), 0.0866, 5e-4);
}

TEST(Fdr, IntegralRelationWithLocalFdr) {
  // Fdr(h) Pr(|t| > h) equals the integral of fdr(t) f(t) above h.
  const Model m(presets::hlz());
  for (double h : {1.0, 1.96, 3.0}) {
    const int n = 4000;
    const double step = (20.0 - h) / n;
    double s = 0;
    for (int i = 0; i <= n; ++i) {
      const double t = h + i * step;
      const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
      s += w * local_fdr(t, m) * m.density_marginal(t);
    }
    s *= step / 3;
    EXPECT_NEAR(fdr_bayes(h, m) * m.sf_marginal(h), s, 1e-9) << h;
  }
}

TEST(Fdr, TrichotomyAroundSignificanceShare) {
  // pi_F equal to Pr(|t| > 1.96) puts the 5% hurdle at 1.96, up to 2 Pr(Z > 1.96) != 0.05.
  ModelParams p = presets::hlz();
  p.pi_f = 0.0;
  const double a = Model(p).sf_true(1.96), f = Model::sf_false(1.96);
  p.pi_f = a / (1 + a - f);
  const double base = p.pi_f;
  EXPECT_NEAR(Model(p).sf_marginal(1.96), base, 1e-14);
  EXPECT_NEAR(hurdle_for_fdr(0.05, p).hurdle, 1.96, 1e-4);
  p.pi_f = base + 0.05;
  EXPECT_GT(hurdle_for_fdr(0.05, p).hurdle, 1.96);
  p.pi_f = base - 0.05;
  EXPECT_LT(hurdle_for_fdr(0.05, p).hurdle, 1.96);
}

TEST(LocalFdr, Bounds) {
  const Model m(presets::hlz());
  double prev = 1.0;
  for (double t = 0.0; t <= 8.0; t += 0.25) {
    const double v = local_fdr(t, m);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, prev + 1e-12);
    prev = v;
  }
}

TEST(Shrinkage, UnsignedEqualsDeltaForm) {
  const Model m(presets::hlz());
  for (double t : {1.0, 2.5, 4.0}) {
    const auto s = shrinkage(t, m);
    EXPECT_NEAR(s.posterior_mean_mu, posterior_mean_true(t, m) / (1 + shrinkage_delta(t, m)), 1e-12);
    EXPECT_GT(s.shrinkage, 0.0);
  }
}

TEST(Shrinkage, SignedIsOddForSymmetricLatent) {
  ModelParams p;
  p.pi_f = 0.3;
  p.latent = ScaledT{1.5, 5.0};
  const Model m(p);
  const auto a = shrinkage(2.5, m, true), b = shrinkage(-2.5, m, true);
  EXPECT_NEAR(a.posterior_mean_mu, -b.posterior_mean_mu, 1e-10);
  EXPECT_NEAR(a.shrinkage, b.shrinkage, 1e-10);
}

TEST(Fnr, MatchesQuadrature) {
  EXPECT_NEAR(fnr(1.96, Model(presets::estimate())), 0.9790150869367128, 1e-8);
}

TEST(StepUp, HarmonicNumber) {
  EXPECT_DOUBLE_EQ(harmonic_number(1), 1.0);
  EXPECT_NEAR(harmonic_number(300), 6.282663880299502, 1e-12);
}

namespace {

// Brute-force BH/BY: the largest k with p_(k) <= k alpha / (n c) rejects k.
double brute_force_stepup(const std::vector<double>& t, double alpha, double c) {
  std::vector<double> p;
  for (double v : t) p.push_back(normal::two_sided_p(v));
  std::sort(p.begin(), p.end());
  const std::size_t n = p.size();
  std::size_t k_best = 0;
  for (std::size_t k = 1; k <= n; ++k)
    if (p[k - 1] <= k * alpha / (n * c)) k_best = k;
  if (k_best == 0) return INFINITY;
  std::vector<double> a;
  for (double v : t) a.push_back(std::fabs(v));
  std::sort(a.rbegin(), a.rend());
  return a[k_best - 1];
}

}  // namespace

TEST(StepUp, FiftyHandBuiltStatistics) {
  std::vector<double> t;
  for (int i = 0; i < 50; ++i) t.push_back((i % 2 ? -1 : 1) * (0.1 + 0.09 * i));
  for (auto [m, c] : {std::pair{HurdleMethod::BH95, 1.0}, std::pair{HurdleMethod::BY13, harmonic_number(50)}}) {
    for (double alpha : {0.01, 0.05, 0.1, 0.2}) {
      const auto h = stepup_hurdle(t, alpha, m);
      const double expect = brute_force_stepup(t, alpha, c);
      if (std::isinf(expect)) {
        EXPECT_FALSE(h.feasible);
      } else {
        EXPECT_DOUBLE_EQ(h.hurdle, expect) << method_name(m) << " " << alpha;
      }
    }
  }
}

TEST(StepUp, PluginAgreesWithStepUp) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    auto p = presets::hlz();
    p.pi_f = 0.2 + 0.015 * seed;
    const auto t = simulate({250, p, 0.0, seed, false}).t_values();
    for (auto m : {HurdleMethod::BH95, HurdleMethod::BY13}) {
      const auto a = stepup_hurdle(t, 0.05, m);
      const auto b = plugin_hurdle(t, 0.05, m);
      ASSERT_EQ(a.feasible, b.feasible);
      if (a.feasible) {
        EXPECT_DOUBLE_EQ(a.hurdle, b.hurdle);
      }
    }
  }
}

TEST(StepUp, ByIsStricterThanBh) {
  const auto t = simulate({1000, presets::hlz(), 0.0, 5, false}).t_values();
  const auto bh = stepup_hurdle(t, 0.05, HurdleMethod::BH95);
  const auto by = stepup_hurdle(t, 0.05, HurdleMethod::BY13);
  ASSERT_TRUE(bh.feasible);
  EXPECT_GE(by.hurdle, bh.hurdle);
  EXPECT_GT(by.hurdle, 1.96);
}

TEST(StepUp, NoRejectionIsFlagged) {
  const std::vector<double> t{0.1, -0.2, 0.3, 0.5};
  const auto h = stepup_hurdle(t, 0.05, HurdleMethod::BH95);
  EXPECT_FALSE(h.feasible);
  EXPECT_TRUE(std::isinf(h.hurdle));
}

TEST(Counts, EmpiricalFdrNearBayesInLargeSample) {
  const auto p = presets::hlz();
  const auto lit = simulate({300000, p, 0.0, 8, false});
  EXPECT_NEAR(empirical_fdr_counts(lit, 1.96), fdr_bayes(1.96, p), 0.01);
}

TEST(Identification, BoundsHoldForWellSeparatedLatent) {
  ModelParams p;
  p.pi_f = 0.0;
  p.latent = LogNormal{1.3, 0.4};
  const Model truth(p);
  const double tg = 3.5;
  const double eps = identification_epsilon(tg, truth);
  ASSERT_LT(eps, 0.05);
  for (double pi : {0.2, 0.5, 0.66}) {
    p.pi_f = pi;
    const Model m(p);
    for (double tb : {3.6, 5.0, 9.0}) {
      const double r = well_observed_cdf(tb, tg, m) / well_observed_cdf(tb, tg, truth, true);
      EXPECT_LE(std::fabs(r - 1), 2 * eps);
    }
  }
}
