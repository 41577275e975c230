#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "thurdle/optimize.hpp"
#include "thurdle/presets.hpp"
#include "thurdle/qml.hpp"
#include "thurdle/sim.hpp"

using namespace thurdle;

TEST(NelderMead, MinimizesRosenbrock) {
  auto f = [](const std::vector<double>& x) {
    return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
  };
  opt::NelderMeadOptions o;
  o.max_iter = 5000;
  o.ftol_rel = 1e-14;
  const auto r = opt::nelder_mead(f, {-1.2, 1.0}, o);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x[0], 1.0, 1e-3);
  EXPECT_NEAR(r.x[1], 1.0, 2e-3);
}

TEST(FitSpec, PresetsRoundTripParameters) {
  for (const auto& name : FitSpec::preset_names()) {
    const auto s = FitSpec::preset(name);
    s.validate();
    std::vector<double> v;
    for (const auto& b : s.bounds) v.push_back(0.3 * b.lo + 0.7 * b.hi);
    const auto p = params_from_values(s, v);
    const auto back = values_from_params(s, p);
    ASSERT_EQ(back.size(), v.size()) << name;
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(back[i], v[i], 1e-12) << name << " " << s.bounds[i].name;
  }
  EXPECT_THROW(FitSpec::preset("nope"), usage_error);
}

TEST(FitSpec, InclusionCutoffs) {
  EXPECT_DOUBLE_EQ(FitSpec::preset("baseline").inclusion_cutoff(), 1.96);
  EXPECT_DOUBLE_EQ(FitSpec::preset("3step").inclusion_cutoff(), 0.5);
  EXPECT_DOUBLE_EQ(FitSpec::preset("unselected").inclusion_cutoff(), 0.0);
  const std::vector<double> t{0.3, -1.0, 2.0, -2.7};
  EXPECT_EQ(included_abs_t(t, FitSpec::preset("baseline")), (std::vector<double>{2.0, 2.7}));
}

TEST(Likelihood, GeneratingParametersBeatPerturbations) {
  const auto truth = presets::estimate();
  const auto t = simulate_published_t(truth, 20000, 31);
  const auto spec = FitSpec::preset("baseline");
  const auto t_abs = included_abs_t(t, spec);
  const double at_truth = neg_mean_loglik(truth, t_abs, spec);
  const auto v0 = values_from_params(spec, truth);
  Rng rng(31, 9);
  int worse = 0;
  for (int k = 0; k < 50; ++k) {
    auto v = v0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto& b = spec.bounds[i];
      v[i] = std::clamp(v[i] + 0.15 * (b.hi - b.lo) * (rng.uniform() - 0.5), b.lo, b.hi);
    }
    worse += neg_mean_loglik(params_from_values(spec, v), t_abs, spec) >= at_truth;
  }
  EXPECT_GE(worse, 48);
}

TEST(Likelihood, ThreeStepNonMonotoneIsInfeasible) {
  const auto spec = FitSpec::preset("3step");
  const std::vector<double> t_abs{0.7, 1.8, 2.2, 3.0, 4.1};
  auto v = values_from_params(spec, [] {
    auto p = presets::estimate();
    p.pub.shape = ThreeStep{0.1, 0.2, 0.5};
    return p;
  }());
  EXPECT_TRUE(std::isfinite(detail::objective(spec, v, t_abs)));
  v[spec.index("eta_a")] = 0.6;
  EXPECT_TRUE(std::isinf(detail::objective(spec, v, t_abs)));
}

class FitTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    t_ = new std::vector<double>(simulate_published_t(presets::estimate(), 183, 2024));
    spec_ = new FitSpec(FitSpec::preset("baseline"));
    spec_->n_starts = 4;
    first_ = new FitResult(fit(*t_, *spec_));
  }
  static void TearDownTestSuite() {
    delete t_;
    delete spec_;
    delete first_;
  }
  static std::vector<double>* t_;
  static FitSpec* spec_;
  static FitResult* first_;
};
std::vector<double>* FitTest::t_ = nullptr;
FitSpec* FitTest::spec_ = nullptr;
FitResult* FitTest::first_ = nullptr;

TEST_F(FitTest, Deterministic) {
  const auto again = fit(*t_, *spec_);
  EXPECT_EQ(again.values, first_->values);
  EXPECT_EQ(again.loglik, first_->loglik);
}

TEST_F(FitTest, EstimatesRespectBounds) {
  ASSERT_TRUE(first_->converged);
  for (std::size_t i = 0; i < first_->values.size(); ++i) {
    EXPECT_GE(first_->values[i], spec_->bounds[i].lo);
    EXPECT_LE(first_->values[i], spec_->bounds[i].hi);
  }
  for (const auto& name : first_->at_bound) {
    const auto& b = spec_->bound(name);
    const double v = first_->value(name);
    EXPECT_TRUE(std::fabs(v - b.lo) <= 1e-6 || std::fabs(v - b.hi) <= 1e-6) << name;
  }
  EXPECT_EQ(first_->n_obs + first_->n_excluded, t_->size());
}

TEST_F(FitTest, OptimumBeatsGeneratingParameters) {
  const auto t_abs = included_abs_t(*t_, *spec_);
  EXPECT_GE(first_->loglik, -neg_mean_loglik(presets::estimate(), t_abs, *spec_) - 1e-9);
  EXPECT_GE(first_->e_mu(), 1.0);
  EXPECT_LE(first_->e_mu(), 5.0);
}

TEST_F(FitTest, FixedParameterStaysFixed) {
  auto s = *spec_;
  s.fix("eta", 0.5);
  s.n_starts = 2;
  const auto r = fit(*t_, s);
  EXPECT_DOUBLE_EQ(r.value("eta"), 0.5);
  EXPECT_LE(r.loglik, first_->loglik + 1e-9);
}

TEST(Fit, RecoversExponentialMeanInLargeSample) {
  ModelParams p;
  p.pi_f = 0.3;
  p.latent = Exponential{3.0};
  p.pub.shape = Staircase{0.5, 1.96, 2.58};
  const auto t = simulate_published_t(p, 3000, 77);
  auto spec = FitSpec::preset("exp");
  spec.n_starts = 3;
  const auto r = fit(t, spec);
  EXPECT_NEAR(r.value("mean"), 3.0, 0.6);
  EXPECT_NEAR(r.value("eta"), 0.5, 0.15);
}

TEST(Fit, RejectsEmptyData) {
  const std::vector<double> t{0.1, 0.2};
  EXPECT_THROW(fit(t, FitSpec::preset("baseline")), data_error);
}
