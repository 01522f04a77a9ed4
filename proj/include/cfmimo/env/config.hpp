// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "cfmimo/phy/covariance.hpp"
#include "cfmimo/phy/pathloss.hpp"
#include "cfmimo/phy/precoding.hpp"

namespace cfmimo::env {

/// Invalid or infeasible configuration. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Environment parameters. Powers are in watts and distances in meters.
struct EnvConfig {
  std::size_t M = 9;  // mobile APs (= agents)
  std::size_t K = 6;  // UEs
  std::size_t N = 8;  // antennas per AP

  double area_min = 0.0;
  double area_max = 1000.0;
  bool wraparound = true;
  double d_min = 10.0;

  double p_ap_max = 1.0;
  /// Per-antenna cap; a value <= 0 means P_ap_max / N.
  double p_an_max = 0.0;
  double noise_power = 3.98e-13;
  /// Uplink pilot power per UE.
  double pilot_power = 0.1;

  /// 0 means tau_p = K (orthogonal pilots).
  std::size_t tau_p = 0;
  std::size_t tau_c = 200;

  double max_step = 50.0;
  std::size_t episode_length = 40;

  phy::PathlossConfig pathloss;
  phy::CovarianceConfig covariance;
  phy::PrecoderKind precoder = phy::PrecoderKind::kMr;

  std::size_t mc_draws_train = 2000;
  std::size_t mc_draws_eval = 100000;
  std::size_t mc_threads = 1;

  [[nodiscard]] std::size_t pilots() const { return tau_p == 0 ? K : tau_p; }
  [[nodiscard]] double antenna_cap() const { return p_an_max > 0.0 ? p_an_max : p_ap_max / static_cast<double>(N); }
  [[nodiscard]] double side() const { return area_max - area_min; }

  /// Throws ConfigError describing the first violated requirement.
  void validate() const;
};

}  // namespace cfmimo::env
