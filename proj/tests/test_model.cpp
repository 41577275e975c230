#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "thurdle/model.hpp"
#include "thurdle/presets.hpp"
#include "thurdle/rng.hpp"
#include "thurdle/sim.hpp"

using namespace thurdle;

// Expected values come from tests/oracles/compute_oracles.py (scipy quad).

namespace {

double integrate_published(const Model& m, double lo, double hi, int n) {
  // Simpson on a single smooth piece.
  const double h = (hi - lo) / n;
  double s = m.density_published(lo) + m.density_published(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * m.density_published(lo + i * h);
  return s * h / 3;
}

}  // namespace

TEST(Model, FalseDensityIsFoldedNormal) {
  EXPECT_NEAR(density_false(1.0), 0.48394144903828673, 1e-15);
  EXPECT_NEAR(Model::sf_false(1.96), 0.04999579029644087, 1e-15);
}

TEST(Model, TrueDensityMatchesQuadrature) {
  EXPECT_NEAR(density_true(2.0, LogNormal{std::log(2.0), 0.5}), 0.2838324305596636, 1e-8);
  EXPECT_NEAR(density_true(4.0, Exponential{2.0}), 0.07667387019449867, 1e-8);
}

TEST(Model, PublishedDensityMatchesQuadrature) {
  const auto p = presets::estimate();
  EXPECT_NEAR(density_published(3.0, p, 1.96), 0.3332614820596249, 1e-7);
  EXPECT_NEAR(density_published(2.2, p), 0.29448981192027046, 1e-7);
  EXPECT_NEAR(tail_prob(2.58, INFINITY, p, Condition::All), 0.4126313317444377, 1e-8);
}

TEST(Model, PublishedDensityIntegratesToOne) {
  for (const auto& p : {presets::estimate(), presets::hlz()}) {
    const Model m(p);
    const auto g = p.pub.t_good();
    // Steps are closed on the right, so each piece starts just past its cutoff.
    const double e = 1e-12;
    const double total = integrate_published(m, 1.96 + e, g, 400) + integrate_published(m, g + e, 120, 40000);
    EXPECT_EQ(m.density_published(1.0), 0.0);
    EXPECT_NEAR(total, 1.0, 1e-7);
  }
}

TEST(Model, PublicationScaleCancels) {
  auto p = presets::estimate();
  const Model a(p);
  p.pub.s_bar = 0.17;
  const Model b(p);
  for (double t : {0.3, 2.0, 2.7, 5.0}) EXPECT_DOUBLE_EQ(a.density_published(t), b.density_published(t));
}

TEST(Model, MarginalIsMixture) {
  const Model m(presets::hlz());
  for (double t : {0.0, 1.0, 2.5, 6.0})
    EXPECT_NEAR(m.density_marginal(t), 0.444 * m.density_false(t) + 0.556 * m.density_true(t), 1e-15);
}

TEST(Model, TailsAreConsistent) {
  const Model m(presets::estimate());
  EXPECT_NEAR(m.tail_prob(0, INFINITY, Condition::All), 1.0, 1e-10);
  EXPECT_NEAR(m.tail_prob(0, INFINITY, Condition::Published), 1.0, 1e-10);
  EXPECT_NEAR(m.tail_prob(1.0, 3.0, Condition::True), m.sf_true(1.0) - m.sf_true(3.0), 1e-10);
  EXPECT_NEAR(m.tail_prob(1.0, 3.0, Condition::False), Model::sf_false(1.0) - Model::sf_false(3.0), 1e-14);
}

TEST(Model, PosteriorMeanMatchesQuadrature) {
  ModelParams p;
  p.pi_f = 0.0;
  p.latent = LogNormal{std::log(2.0), 0.5};
  const Model m(p);
  EXPECT_NEAR(m.true_mu_moment(3.0) / m.density_true(3.0), 2.4847465971807035, 1e-7);
}

TEST(Model, InclusionFloorTruncates) {
  const Model m(presets::estimate(), 2.2);
  EXPECT_EQ(m.density_published(2.1), 0.0);
  EXPECT_GT(m.density_published(2.3), 0.0);
  EXPECT_NEAR(m.tail_prob(2.2, INFINITY, Condition::Published), 1.0, 1e-10);
}

TEST(Model, RejectsBadInput) {
  ModelParams p = presets::estimate();
  p.pi_f = 1.2;
  EXPECT_THROW(Model{p}, domain_error);
  const Model m(presets::estimate());
  EXPECT_THROW(m.density_true(-1.0), domain_error);
  EXPECT_THROW(m.tail_prob(3.0, 2.0, Condition::All), domain_error);
}

TEST(Model, PublishedTailMatchesSimulation) {
  const auto p = presets::estimate();
  const auto lit = simulate({400000, p, 0.0, 99, true});
  const auto t = lit.published_t();
  std::size_t above = 0;
  for (double x : t) above += std::fabs(x) > 3.0;
  const double share = static_cast<double>(above) / t.size();
  const double expect = Model(p).tail_prob(3.0, INFINITY, Condition::Published);
  EXPECT_NEAR(share, expect, 5 * std::sqrt(expect * (1 - expect) / t.size()));
}

TEST(Model, MeanLogDensityIsAverage) {
  const Model m(presets::estimate());
  const std::vector<double> t{2.0, 3.1, 4.5};
  double expect = 0;
  for (double x : t) expect += std::log(m.density_published(x)) / 3;
  EXPECT_NEAR(m.mean_log_density_published(t), expect, 1e-12);
}
