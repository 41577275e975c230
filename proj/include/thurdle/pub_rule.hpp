#pragma once

// Publication probability s(|t|) = s_bar * relative(|t|). Likelihoods use only
// relative(), so s_bar never enters a conditional density.

#include <cmath>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "thurdle/error.hpp"

namespace thurdle {

/// 0 for |t| <= t_low, eta on (t_low, t_good], 1 above t_good.
struct Staircase {
  double eta = 0.5;
  double t_low = 1.96;
  double t_good = 2.58;
};

/// eta_a on [0, t_a], eta_b on (t_a, t_b], eta_c on (t_b, t_good], 1 above.
struct ThreeStep {
  double eta_a = 0.1, eta_b = 0.2, eta_c = 0.5;
  double t_a = 1.50, t_b = 1.96, t_good = 2.58;
};

/// 1 / (1 + exp(-slope (|t| - location))).
struct Logistic {
  double location = 2.0;
  double slope = 3.0;
};

/// No selection: every factor is published with probability s_bar.
struct Unselected {};

struct Step {
  double lo, hi, level;  // level applies on (lo, hi]
};

struct PubRule {
  std::variant<Staircase, ThreeStep, Logistic, Unselected> shape = Staircase{};
  double s_bar = 1.0;

  bool is_step() const { return !std::holds_alternative<Logistic>(shape); }

  std::string family() const {
    if (std::holds_alternative<Staircase>(shape)) return "staircase";
    if (std::holds_alternative<ThreeStep>(shape)) return "three_step";
    if (std::holds_alternative<Unselected>(shape)) return "unselected";
    return "logistic";
  }

  /// Threshold above which s is flat at s_bar. For the logistic rule this is the
  /// smallest |t| with s >= 0.999 s_bar.
  double t_good() const {
    if (auto* s = std::get_if<Staircase>(&shape)) return s->t_good;
    if (auto* s = std::get_if<ThreeStep>(&shape)) return s->t_good;
    if (std::holds_alternative<Unselected>(shape)) return 0.0;
    const auto& l = std::get<Logistic>(shape);
    return std::max(0.0, l.location + std::log(999.0) / l.slope);
  }

  /// Piecewise-constant representation, ordered by |t|. Empty for the logistic rule.
  std::vector<Step> steps() const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (auto* s = std::get_if<Staircase>(&shape))
      return {{0.0, s->t_low, 0.0}, {s->t_low, s->t_good, s->eta}, {s->t_good, inf, 1.0}};
    if (auto* s = std::get_if<ThreeStep>(&shape))
      return {{0.0, s->t_a, s->eta_a},
              {s->t_a, s->t_b, s->eta_b},
              {s->t_b, s->t_good, s->eta_c},
              {s->t_good, inf, 1.0}};
    if (std::holds_alternative<Unselected>(shape)) return {{0.0, inf, 1.0}};
    return {};
  }

  /// s(|t|) / s_bar.
  double relative(double t_abs) const {
    if (auto* l = std::get_if<Logistic>(&shape))
      return 1.0 / (1.0 + std::exp(-l->slope * (t_abs - l->location)));
    for (const auto& st : steps())
      if (t_abs <= st.hi) return st.level;
    return 1.0;
  }

  double probability(double t_abs) const { return s_bar * relative(t_abs); }

  void validate() const {
    if (!(s_bar > 0 && s_bar <= 1)) throw domain_error("publication rule requires s_bar in (0, 1]");
    if (auto* l = std::get_if<Logistic>(&shape)) {
      if (!(l->slope > 0) || !std::isfinite(l->location))
        throw domain_error("logistic publication rule requires slope > 0");
      return;
    }
    double prev_hi = 0.0;
    for (const auto& st : steps()) {
      if (!(st.level >= 0 && st.level <= 1))
        throw domain_error("publication step probabilities must lie in [0, 1]");
      if (st.lo < prev_hi || !(st.hi > st.lo))
        throw domain_error("publication rule cutoffs must be strictly increasing");
      prev_hi = st.hi;
    }
    double prev = relative(0.0);
    for (int i = 1; i <= 2000; ++i) {
      const double v = relative(0.01 * i);
      if (v < prev) throw domain_error("publication probability must be weakly increasing in |t|");
      prev = v;
    }
  }
};

}  // namespace thurdle
