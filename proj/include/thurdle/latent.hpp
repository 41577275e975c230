#pragma once

// Distribution of unbiased t-stats mu for true factors.

#include <cmath>
#include <numbers>
#include <string>
#include <variant>

#include "thurdle/error.hpp"
#include "thurdle/normal.hpp"
#include "thurdle/quadrature.hpp"
#include "thurdle/rng.hpp"

namespace thurdle {

/// log(mu) ~ Normal(lambda_mu, lambda_sigma).
struct LogNormal {
  double lambda_mu = 0.0;
  double lambda_sigma = 1.0;

  static LogNormal from_moments(double mean, double sd) {
    const double s2 = std::log1p((sd * sd) / (mean * mean));
    return {std::log(mean) - 0.5 * s2, std::sqrt(s2)};
  }
};

struct Exponential {
  double mean = 1.0;
};

/// mu = scale * T, T ~ Student t(dof). Symmetric about zero.
struct ScaledT {
  double scale = 1.0;
  double dof = 4.0;
};

/// w * Normal(m1, s1) + (1 - w) * Normal(m2, s2).
struct MixtureNormal {
  double w = 0.5;
  double m1 = 0.0, s1 = 1.0;
  double m2 = 0.0, s2 = 1.0;
};

using LatentDistSpec = std::variant<LogNormal, Exponential, ScaledT, MixtureNormal>;

inline std::string family_name(const LatentDistSpec& g) {
  struct V {
    std::string operator()(const LogNormal&) const { return "lognormal"; }
    std::string operator()(const Exponential&) const { return "exponential"; }
    std::string operator()(const ScaledT&) const { return "scaled_t"; }
    std::string operator()(const MixtureNormal&) const { return "mixture_normal"; }
  };
  return std::visit(V{}, g);
}

inline void validate(const LatentDistSpec& g) {
  struct V {
    void operator()(const LogNormal& d) const {
      if (!(d.lambda_sigma > 0) || !std::isfinite(d.lambda_mu) || !std::isfinite(d.lambda_sigma))
        throw domain_error("lognormal latent requires finite lambda_mu and lambda_sigma > 0");
    }
    void operator()(const Exponential& d) const {
      if (!(d.mean > 0) || !std::isfinite(d.mean))
        throw domain_error("exponential latent requires mean > 0");
    }
    void operator()(const ScaledT& d) const {
      if (!(d.scale > 0) || !(d.dof > 2) || !std::isfinite(d.scale) || !std::isfinite(d.dof))
        throw domain_error("scaled-t latent requires scale > 0 and dof > 2");
    }
    void operator()(const MixtureNormal& d) const {
      if (!(d.w >= 0 && d.w <= 1) || !(d.s1 > 0) || !(d.s2 > 0) || !std::isfinite(d.m1) ||
          !std::isfinite(d.m2))
        throw domain_error("mixture-normal latent requires w in [0,1] and s1, s2 > 0");
    }
  };
  std::visit(V{}, g);
}

/// True when all mass lies on mu > 0.
inline bool positive_support(const LatentDistSpec& g) {
  return std::holds_alternative<LogNormal>(g) || std::holds_alternative<Exponential>(g);
}

namespace detail {
inline double student_pdf(double x, double dof) {
  const double c = std::lgamma(0.5 * (dof + 1)) - std::lgamma(0.5 * dof) -
                   0.5 * std::log(dof * std::numbers::pi);
  return std::exp(c - 0.5 * (dof + 1) * std::log1p(x * x / dof));
}
}  // namespace detail

inline double pdf(const LatentDistSpec& g, double mu) {
  struct V {
    double mu;
    double operator()(const LogNormal& d) const {
      if (mu <= 0) return 0.0;
      return normal::pdf((std::log(mu) - d.lambda_mu) / d.lambda_sigma) / (d.lambda_sigma * mu);
    }
    double operator()(const Exponential& d) const {
      return mu < 0 ? 0.0 : std::exp(-mu / d.mean) / d.mean;
    }
    double operator()(const ScaledT& d) const {
      return detail::student_pdf(mu / d.scale, d.dof) / d.scale;
    }
    double operator()(const MixtureNormal& d) const {
      return d.w * normal::pdf((mu - d.m1) / d.s1) / d.s1 +
             (1 - d.w) * normal::pdf((mu - d.m2) / d.s2) / d.s2;
    }
  };
  return std::visit(V{mu}, g);
}

/// E(mu | T).
inline double mean(const LatentDistSpec& g) {
  struct V {
    double operator()(const LogNormal& d) const {
      return std::exp(d.lambda_mu + 0.5 * d.lambda_sigma * d.lambda_sigma);
    }
    double operator()(const Exponential& d) const { return d.mean; }
    double operator()(const ScaledT&) const { return 0.0; }
    double operator()(const MixtureNormal& d) const { return d.w * d.m1 + (1 - d.w) * d.m2; }
  };
  return std::visit(V{}, g);
}

/// SD(mu | T). Lognormal uses sqrt[(exp(s^2) - 1) exp(2m + s^2)].
inline double sd(const LatentDistSpec& g) {
  struct V {
    double operator()(const LogNormal& d) const {
      const double s2 = d.lambda_sigma * d.lambda_sigma;
      return std::sqrt(std::expm1(s2) * std::exp(2 * d.lambda_mu + s2));
    }
    double operator()(const Exponential& d) const { return d.mean; }
    double operator()(const ScaledT& d) const { return d.scale * std::sqrt(d.dof / (d.dof - 2)); }
    double operator()(const MixtureNormal& d) const {
      const double m = d.w * d.m1 + (1 - d.w) * d.m2;
      const double second = d.w * (d.s1 * d.s1 + d.m1 * d.m1) + (1 - d.w) * (d.s2 * d.s2 + d.m2 * d.m2);
      return std::sqrt(std::max(0.0, second - m * m));
    }
  };
  return std::visit(V{}, g);
}

inline double sample(const LatentDistSpec& g, Rng& rng) {
  struct V {
    Rng& rng;
    double operator()(const LogNormal& d) const {
      return std::exp(d.lambda_mu + d.lambda_sigma * rng.normal());
    }
    double operator()(const Exponential& d) const { return rng.exponential(d.mean); }
    double operator()(const ScaledT& d) const { return d.scale * rng.student_t(d.dof); }
    double operator()(const MixtureNormal& d) const {
      return rng.bernoulli(d.w) ? d.m1 + d.s1 * rng.normal() : d.m2 + d.s2 * rng.normal();
    }
  };
  return std::visit(V{rng}, g);
}

/// Adaptive Gauss-Legendre discretization of the latent distribution. The lognormal
/// is integrated in log(mu), the scaled t through mu = scale * tan(u) on (-pi/2, pi/2),
/// the others directly; truncated tails carry less than 1e-10 mass.
inline quad::DiscreteMeasure discretize(const LatentDistSpec& g,
                                        const quad::MeasureOptions& opt = {}) {
  validate(g);
  quad::DiscreteMeasure out;
  constexpr double kSigmas = 8.5;
  const auto identity = [](double u) { return u; };
  // Normal shapes are integrated in the standardized coordinate z, which keeps
  // rounding in the map far below the panel tolerance even for tiny scales.
  const auto std_normal = [](double z) { return normal::pdf(z); };
  const auto normal_component = [&](double m, double s, double weight) {
    quad::append_measure(
        out, std_normal, [m, s](double z) { return m + s * z; }, -kSigmas, kSigmas, weight, opt);
  };
  if (const auto* d = std::get_if<LogNormal>(&g)) {
    const double m = d->lambda_mu, s = d->lambda_sigma;
    quad::append_measure(
        out, std_normal, [m, s](double z) { return std::exp(m + s * z); }, -kSigmas, kSigmas, 1.0,
        opt);
  } else if (const auto* d = std::get_if<Exponential>(&g)) {
    const double m = d->mean;
    quad::append_measure(
        out, [m](double u) { return std::exp(-u / m) / m; }, identity, 0.0, 25.0 * m, 1.0, opt);
  } else if (const auto* d = std::get_if<ScaledT>(&g)) {
    const double scale = d->scale, dof = d->dof;
    const double half_pi = 0.5 * std::numbers::pi;
    quad::append_measure(
        out,
        [dof](double u) {
          const double x = std::tan(u);
          return detail::student_pdf(x, dof) * (1.0 + x * x);
        },
        [scale](double u) { return scale * std::tan(u); }, -half_pi, half_pi, 1.0, opt);
  } else {
    const auto& mix = std::get<MixtureNormal>(g);
    normal_component(mix.m1, mix.s1, mix.w);
    normal_component(mix.m2, mix.s2, 1.0 - mix.w);
  }
  return out;
}

}  // namespace thurdle
