// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "cfmimo/env/actions.hpp"
#include "cfmimo/env/environment.hpp"
#include "cfmimo/numeric/rng.hpp"

namespace cfmimo::env {

/// Shares beta_i^nu / sum_j beta_j^nu; an all-zero row falls back to uniform.
std::vector<double> fractional_split(const std::vector<double>& beta_row, double nu);

/// Full AP power split in proportion to beta^nu, uniform antennas, no movement.
std::vector<ActionVector> fractional_power_baseline(const EnvState& state, double nu = 1.0);

/// Uniform draws over the raw action space: mobility in [-1, 1]^2, independent
/// uniform shares, antenna weights in [0, 1] and ap_power their mean.
std::vector<ActionVector> random_actions(std::size_t M, std::size_t K, std::size_t N, numeric::RngStream& rng);

}  // namespace cfmimo::env
