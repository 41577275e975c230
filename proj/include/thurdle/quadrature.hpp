#pragma once

// Adaptive Gauss-Legendre quadrature. Two entry points:
//  - integrate(): adaptive bisection with a 10-point rule and a halves-vs-whole
//    error estimate, for one-off integrals;
//  - DiscreteMeasure builder: adaptively places 10-point panels under a
//    probability density so that any smooth kernel (here, unit-variance normal
//    densities and tails) can be integrated against it by a weighted sum.

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "thurdle/error.hpp"

namespace thurdle::quad {

/// 10-point Gauss-Legendre nodes and weights on [-1, 1].
struct Rule10 {
  std::array<double, 10> x{};
  std::array<double, 10> w{};

  static const Rule10& get() {
    static const Rule10 rule = [] {
      using G = boost::math::quadrature::gauss<double, 10>;
      const auto& a = G::abscissa();
      const auto& wt = G::weights();
      Rule10 r;
      for (std::size_t i = 0; i < 5; ++i) {
        r.x[4 - i] = -a[i];
        r.w[4 - i] = wt[i];
        r.x[5 + i] = a[i];
        r.w[5 + i] = wt[i];
      }
      return r;
    }();
    return rule;
  }
};

template <class F>
double gauss10(F&& f, double a, double b) {
  const auto& r = Rule10::get();
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < 10; ++i) s += r.w[i] * f(c + h * r.x[i]);
  return s * h;
}

struct Result {
  double value = 0.0;
  double error = 0.0;
};

struct Options {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  int max_depth = 40;
  int initial_panels = 8;
};

/// Adaptive integral of f over the finite interval [a, b].
/// Throws numerical_error (carrying the achieved error) if a panel cannot be
/// resolved within max_depth bisections.
template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  if (!(b > a)) return {};
  struct Panel {
    double a, b, whole;
    int depth;
  };
  std::vector<Panel> stack;
  const double w0 = (b - a) / opt.initial_panels;
  for (int i = opt.initial_panels - 1; i >= 0; --i) {
    const double pa = a + i * w0;
    const double pb = (i + 1 == opt.initial_panels) ? b : pa + w0;
    stack.push_back({pa, pb, gauss10(f, pa, pb), 0});
  }
  Result out;
  bool failed = false;
  double rough_total = 0.0;
  for (const auto& p : stack) rough_total += std::fabs(p.whole);
  while (!stack.empty()) {
    const Panel p = stack.back();
    stack.pop_back();
    const double m = 0.5 * (p.a + p.b);
    const double left = gauss10(f, p.a, m);
    const double right = gauss10(f, m, p.b);
    const double diff = std::fabs(left + right - p.whole);
    const double share = (p.b - p.a) / (b - a);
    const double tol = std::max(opt.abs_tol, opt.rel_tol * rough_total) * std::max(share, 1e-6);
    if (diff <= tol || p.depth >= opt.max_depth) {
      if (diff > tol) failed = true;
      out.value += left + right;
      out.error += diff;
      continue;
    }
    stack.push_back({m, p.b, right, p.depth + 1});
    stack.push_back({p.a, m, left, p.depth + 1});
  }
  if (failed && out.error > std::max(opt.abs_tol, opt.rel_tol * std::fabs(out.value)) * 1e3)
    throw numerical_error("adaptive quadrature did not converge; achieved error " +
                              std::to_string(out.error),
                          out.error);
  return out;
}

/// Weighted point set approximating a (sub-)probability measure on the real line.
struct DiscreteMeasure {
  std::vector<double> x;
  std::vector<double> w;

  double total() const {
    double s = 0.0;
    for (double v : w) s += v;
    return s;
  }
  std::size_t size() const { return x.size(); }
};

struct MeasureOptions {
  double panel_tol = 1e-12;       // per-panel mass error
  double kernel_zone = 30.0;      // |x| region where kernels are non-negligible
  double kernel_resolution = 4.0; // max panel width (in x) inside the kernel zone
  int initial_panels = 16;
  int max_depth = 48;
  double prune_below = 1e-16;     // drop nodes carrying less mass than this
};

/// Appends to `out` a discretization of `weight * q(u) du` over [ua, ub], where
/// u is a working coordinate mapped monotonically to x by `to_x`. `q` must already
/// include the Jacobian, so that q integrates to one over the full domain.
template <class Q, class Map>
void append_measure(DiscreteMeasure& out, Q&& q, Map&& to_x, double ua, double ub, double weight,
                    const MeasureOptions& opt = {}) {
  if (!(ub > ua) || weight <= 0.0) return;
  struct Panel {
    double a, b;
    int depth;
  };
  const auto& rule = Rule10::get();
  std::vector<Panel> stack;
  const double w0 = (ub - ua) / opt.initial_panels;
  for (int i = opt.initial_panels - 1; i >= 0; --i) {
    const double pa = ua + i * w0;
    stack.push_back({pa, (i + 1 == opt.initial_panels) ? ub : pa + w0, 0});
  }
  double worst = 0.0;
  while (!stack.empty()) {
    const Panel p = stack.back();
    stack.pop_back();
    const double m = 0.5 * (p.a + p.b);
    const double xa = to_x(p.a), xb = to_x(p.b);
    const double lo = std::min(xa, xb), hi = std::max(xa, xb);
    const bool in_zone = hi > -opt.kernel_zone && lo < opt.kernel_zone;
    bool split = in_zone && (hi - lo) > opt.kernel_resolution && p.depth < opt.max_depth;
    if (!split) {
      const double whole = gauss10(q, p.a, p.b);
      const double halves = gauss10(q, p.a, m) + gauss10(q, m, p.b);
      const double diff = std::fabs(whole - halves);
      if (diff > opt.panel_tol) {
        if (p.depth < opt.max_depth)
          split = true;
        else
          worst = std::max(worst, diff);
      }
    }
    if (split) {
      stack.push_back({m, p.b, p.depth + 1});
      stack.push_back({p.a, m, p.depth + 1});
      continue;
    }
    const double c = 0.5 * (p.a + p.b);
    const double h = 0.5 * (p.b - p.a);
    for (std::size_t i = 0; i < 10; ++i) {
      const double u = c + h * rule.x[i];
      const double mass = weight * rule.w[i] * h * q(u);
      if (mass > opt.prune_below) {
        out.x.push_back(to_x(u));
        out.w.push_back(mass);
      }
    }
  }
  if (worst > 1e3 * opt.panel_tol)
    throw numerical_error("latent discretization did not converge; achieved panel error " +
                              std::to_string(worst),
                          worst);
}

}  // namespace thurdle::quad
