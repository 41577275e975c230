#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "thurdle/gof.hpp"
#include "thurdle/normal.hpp"
#include "thurdle/presets.hpp"
#include "thurdle/sim.hpp"

using namespace thurdle;

TEST(Simulate, SeedReproducible) {
  const auto a = simulate({5000, presets::estimate(), 0.3, 17, true});
  const auto b = simulate({5000, presets::estimate(), 0.3, 17, true});
  const auto c = simulate({5000, presets::estimate(), 0.3, 18, true});
  EXPECT_EQ(a.t_values(), b.t_values());
  EXPECT_NE(a.t_values(), c.t_values());
}

TEST(Simulate, PublicationDoesNotChangeT) {
  const auto a = simulate({3000, presets::hlz(), 0.0, 5, true});
  const auto b = simulate({3000, presets::hlz(), 0.0, 5, false});
  EXPECT_EQ(a.t_values(), b.t_values());
  for (const auto& r : b.records) EXPECT_TRUE(*r.published);
}

TEST(Simulate, Ar1NoiseMoments) {
  ModelParams p = presets::hlz();
  p.pi_f = 1.0;
  const double rho = 0.5;
  const auto t = simulate({200000, p, rho, 3, false}).t_values();
  double s = 0, ss = 0, lag = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    s += t[i];
    ss += t[i] * t[i];
    if (i) lag += t[i] * t[i - 1];
  }
  const double n = static_cast<double>(t.size());
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(ss / n, 1.0, 0.02);
  EXPECT_NEAR(lag / (n - 1), rho, 0.02);
  // Thinned to near-independence, the marginal is standard normal.
  std::vector<double> thin;
  for (std::size_t i = 0; i < t.size(); i += 20) thin.push_back(t[i]);
  EXPECT_GT(gof::ks_one_sample(thin, normal::cdf).p_value, 1e-3);
}

TEST(Simulate, PublishedHistogramMatchesModel) {
  const auto p = presets::estimate();
  const auto t = simulate_published_t(p, 100000, 41);
  const Model m(p);
  const std::vector<double> edges{1.96, 2.3, 2.58, 3, 4, 6, INFINITY};
  std::vector<double> counts(edges.size() - 1, 0.0), probs;
  for (double v : t) {
    const double a = std::fabs(v);
    ASSERT_GT(a, 1.96);
    for (std::size_t k = 0; k + 1 < edges.size(); ++k)
      if (a > edges[k] && a <= edges[k + 1]) counts[k] += 1;
  }
  for (std::size_t k = 0; k + 1 < edges.size(); ++k)
    probs.push_back(m.tail_prob(edges[k], edges[k + 1], Condition::Published));
  EXPECT_GT(gof::chi_square(counts, probs).p_value, 1e-3);
}

TEST(Evidence, PublishedMeanMatchesQuadrature) {
  const auto recs = simulate_evidence({2.0, 0.3, 1.0, 2.5, 2000000, 8});
  double s = 0;
  std::size_t n = 0;
  for (const auto& r : recs)
    if (r.published) s += r.t, ++n;
  EXPECT_NEAR(static_cast<double>(n) / recs.size(), 0.06650695677838185, 1e-3);
  EXPECT_NEAR(s / n, 3.3164659632165465, 0.01);
}

TEST(Evidence, LambdaEstimateInvertsTruncatedMean) {
  for (double lam : {0.5, 2.0, 12.0}) {
    const double m = truncated_mean_t(lam, 2.5);
    const std::vector<double> t{m - 0.1, m + 0.1};
    EXPECT_NEAR(estimate_lambda_misspecified(t, 2.5), lam, 1e-8 * lam);
  }
}

TEST(Evidence, ScreenedPosteriorMatchesSimulation) {
  const double lam = 2.0, rho = 0.3, zmin = 1.0;
  const auto recs = simulate_evidence({lam, rho, zmin, 2.5, 4000000, 9});
  double s = 0;
  std::size_t n = 0;
  for (const auto& r : recs)
    if (r.published && r.t > 2.95 && r.t < 3.05) s += r.mu, ++n;
  ASSERT_GT(n, 2000u);
  EXPECT_NEAR(s / n, posterior_mean_screened(3.0, zmin, lam, rho), 0.05);
  EXPECT_GT(posterior_mean_screened(3.0, zmin, lam, rho), posterior_mean_t_only(3.0, lam));
}

TEST(Evidence, NoScreenNoBiasWhenZMinIsVeryLow) {
  EXPECT_NEAR(posterior_mean_screened(3.0, -30.0, 2.0, 0.3), posterior_mean_t_only(3.0, 2.0), 1e-12);
}

TEST(Evidence, BiasCellScreeningMatters) {
  const auto c0 = shrinkage_bias_cell(2.0, 0.0, 0.0, 400000, 2.5, 3);
  const auto c2 = shrinkage_bias_cell(2.0, 0.0, 2.0, 400000, 2.5, 3);
  ASSERT_TRUE(c0.solved && c2.solved);
  EXPECT_EQ(c2.ordering_violations, 0u);
  EXPECT_GT(c2.lambda_hat, 2.0);
  EXPECT_GT(std::fabs(c2.error()), std::fabs(c0.error()));
}
