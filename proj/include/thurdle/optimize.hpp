#pragma once

// Nelder-Mead simplex minimizer (Lagarias et al. coefficients). Box constraints
// are handled by the caller through a smooth transform to an unbounded space.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace thurdle::opt {

struct NelderMeadOptions {
  double ftol_rel = 1e-9;  // stop when the simplex f-spread is this small relative to |f|
  int max_iter = 500;
  double initial_step = 0.5;
};

struct NelderMeadResult {
  std::vector<double> x;
  double fx = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Minimizes f from x0. f may return +inf to reject a point.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    const std::vector<double>& x0, const NelderMeadOptions& opt = {}) {
  const std::size_t n = x0.size();
  NelderMeadResult res;
  if (n == 0) {
    res.x = x0;
    res.fx = f(x0);
    res.evaluations = 1;
    res.converged = true;
    return res;
  }
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += opt.initial_step;
  for (std::size_t i = 0; i <= n; ++i) fv[i] = eval(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  auto along = [&](double coef, std::vector<double>& out) {
    const auto& worst = simplex[order[n]];
    for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + coef * (worst[j] - centroid[j]);
  };

  for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const double f_best = fv[order[0]], f_worst = fv[order[n]];
    if (std::isfinite(f_worst) &&
        std::fabs(f_worst - f_best) <= opt.ftol_rel * (std::fabs(f_best) + std::fabs(f_worst)) * 0.5 + 1e-300) {
      res.converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[order[i]][j] / static_cast<double>(n);

    const double f_second = fv[order[n - 1]];
    along(-1.0, xr);
    const double fr = eval(xr);
    if (fr < f_best) {
      along(-2.0, xe);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[order[n]] = xe;
        fv[order[n]] = fe;
      } else {
        simplex[order[n]] = xr;
        fv[order[n]] = fr;
      }
      continue;
    }
    if (fr < f_second) {
      simplex[order[n]] = xr;
      fv[order[n]] = fr;
      continue;
    }
    // Contraction: outside if the reflection improved on the worst point, inside otherwise.
    const bool outside = fr < f_worst;
    along(outside ? -0.5 : 0.5, xc);
    const double fc = eval(xc);
    if (fc < (outside ? fr : f_worst)) {
      simplex[order[n]] = xc;
      fv[order[n]] = fc;
      continue;
    }
    // Shrink toward the best vertex.
    const auto best = simplex[order[0]];
    for (std::size_t i = 1; i <= n; ++i) {
      auto& v = simplex[order[i]];
      for (std::size_t j = 0; j < n; ++j) v[j] = best[j] + 0.5 * (v[j] - best[j]);
      fv[order[i]] = eval(v);
    }
  }

  const auto it = std::min_element(fv.begin(), fv.end());
  res.x = simplex[static_cast<std::size_t>(it - fv.begin())];
  res.fx = *it;
  return res;
}

}  // namespace thurdle::opt
