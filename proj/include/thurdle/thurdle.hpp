#pragma once

#include "thurdle/boot.hpp"
#include "thurdle/error.hpp"
#include "thurdle/gof.hpp"
#include "thurdle/latent.hpp"
#include "thurdle/model.hpp"
#include "thurdle/normal.hpp"
#include "thurdle/optimize.hpp"
#include "thurdle/parallel.hpp"
#include "thurdle/presets.hpp"
#include "thurdle/pub_rule.hpp"
#include "thurdle/qml.hpp"
#include "thurdle/quadrature.hpp"
#include "thurdle/rng.hpp"
#include "thurdle/sim.hpp"
#include "thurdle/stats.hpp"
