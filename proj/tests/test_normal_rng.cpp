#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "thurdle/gof.hpp"
#include "thurdle/latent.hpp"
#include "thurdle/normal.hpp"
#include "thurdle/rng.hpp"

using namespace thurdle;

TEST(Philox, KnownAnswerZeroCounterZeroKey) {
  const auto out = Philox4x32::block({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerAllOnes) {
  // Random123 kat_vectors: philox4x32_10, all-ones counter and key.
  const auto out = Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPiDigits) {
  const auto out =
      Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out[0], 0xd16cfe09u);
  EXPECT_EQ(out[1], 0x94fdccebu);
  EXPECT_EQ(out[2], 0x5001e420u);
  EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42, 3), b(42, 3), c(42, 4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a(), y = b(), z = c();
    EXPECT_EQ(x, y);
    differs |= x != z;
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformStaysOpen) {
  Rng r(7);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, BelowIsUniform) {
  Rng r(11);
  std::vector<double> counts(7, 0.0), probs(7, 1.0 / 7);
  for (int i = 0; i < 70000; ++i) counts[r.below(7)] += 1;
  EXPECT_GT(gof::chi_square(counts, probs).p_value, 1e-3);
}

TEST(Rng, NormalPassesKs) {
  Rng r(12);
  std::vector<double> x(20000);
  for (auto& v : x) v = r.normal();
  EXPECT_GT(gof::ks_one_sample(x, normal::cdf).p_value, 1e-3);
}

TEST(Rng, GammaMoments) {
  Rng r(13);
  for (double shape : {0.5, 2.0, 7.5}) {
    double s = 0, ss = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double g = r.gamma(shape);
      s += g;
      ss += g * g;
    }
    const double m = s / n, v = ss / n - m * m;
    EXPECT_NEAR(m, shape, 5 * std::sqrt(shape / n));
    EXPECT_NEAR(v / shape, 1.0, 0.05);
  }
}

TEST(Normal, CdfSfQuantile) {
  EXPECT_NEAR(normal::cdf(1.959963984540054), 0.975, 1e-15);
  EXPECT_NEAR(normal::sf(3.0), 0.0013498980316300946, 1e-17);
  EXPECT_NEAR(normal::two_sided_p(1.96), 0.04999579029644087, 1e-15);
  for (double p : {1e-10, 0.001, 0.3, 0.5, 0.9, 0.999999})
    EXPECT_NEAR(normal::cdf(normal::quantile(p)), p, 1e-12 * std::max(p, 1e-3));
}

TEST(Latent, SamplersMatchMoments) {
  Rng r(21);
  const LatentDistSpec specs[] = {LogNormal::from_moments(2.66, 2.29), Exponential{2.0}, ScaledT{1.5, 8.0},
                                  MixtureNormal{0.3, -1.0, 0.5, 2.0, 1.5}};
  for (const auto& g : specs) {
    const int n = 400000;
    double s = 0, ss = 0;
    for (int i = 0; i < n; ++i) {
      const double x = sample(g, r);
      s += x;
      ss += x * x;
    }
    const double m = s / n, sdv = std::sqrt(ss / n - m * m);
    EXPECT_NEAR(m, mean(g), 6 * sd(g) / std::sqrt(n)) << family_name(g);
    EXPECT_NEAR(sdv / sd(g), 1.0, 0.03) << family_name(g);
  }
}

TEST(Latent, FromMomentsRoundTrip) {
  const auto g = LogNormal::from_moments(2.66, 2.29);
  EXPECT_NEAR(g.lambda_mu, 0.7010524420074449, 1e-13);
  EXPECT_NEAR(g.lambda_sigma, 0.7446793683004288, 1e-13);
  EXPECT_NEAR(mean(LatentDistSpec{g}), 2.66, 1e-12);
  EXPECT_NEAR(sd(LatentDistSpec{g}), 2.29, 1e-12);
}

TEST(Latent, ValidationRejectsBadParameters) {
  EXPECT_THROW(validate(LatentDistSpec{Exponential{-1.0}}), domain_error);
  EXPECT_THROW(validate(LatentDistSpec{ScaledT{1.0, 2.0}}), domain_error);
  EXPECT_THROW(validate(LatentDistSpec{LogNormal{0.0, 0.0}}), domain_error);
  EXPECT_THROW(validate(LatentDistSpec{MixtureNormal{1.5, 0, 1, 0, 1}}), domain_error);
}

TEST(Gof, KolmogorovSurvivalMatchesReference) {
  // scipy.special.kolmogorov
  const std::pair<double, double> ref[] = {{0.3, 0.9999906941986655}, {0.5, 0.9639452436648751},
                                           {0.8, 0.5441424115741981}, {0.99, 0.2808738392255489},
                                           {1.0, 0.26999967167735456}, {1.2, 0.11224966667072497},
                                           {2.0, 0.0006709252557796953}};
  for (auto [x, p] : ref) EXPECT_NEAR(gof::kolmogorov_sf(x), p, 1e-10) << x;
}

TEST(Gof, QuantileType7) {
  const std::vector<double> x{5, 1, 4, 2, 3};
  EXPECT_DOUBLE_EQ(gof::quantile(x, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(gof::quantile(x, 0.25), 2.0);
  EXPECT_DOUBLE_EQ(gof::quantile(x, 0.1), 1.4);
  EXPECT_DOUBLE_EQ(gof::quantile(std::vector<double>{7}, 0.95), 7.0);
}
