#pragma once

// Reference parameterizations used by the CLI, the examples and the tests.

#include "thurdle/model.hpp"

namespace thurdle::presets {

/// Point estimate of the baseline structural model on the cross-sectional
/// predictor literature: pi_F = 0.01, E(mu|T) = 2.66, SD(mu|T) = 2.29, eta = 2/3.
inline ModelParams estimate() {
  ModelParams p;
  p.pi_f = 0.01;
  p.latent = LogNormal::from_moments(2.66, 2.29);
  p.pub.shape = Staircase{2.0 / 3, 1.96, 2.58};
  return p;
}

/// Harvey-Liu-Zhu style calibration: pi_F = 0.444, exponential mean 2,
/// staircase haircut 0.5 with t_good = 2.57.
inline ModelParams hlz() {
  ModelParams p;
  p.pi_f = 0.444;
  p.latent = Exponential{2.0};
  p.pub.shape = Staircase{0.5, 1.96, 2.57};
  return p;
}

}  // namespace thurdle::presets
