// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/env/config.hpp"

#include <cmath>

namespace cfmimo::env {

namespace {
void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}
bool positive(double v) { return std::isfinite(v) && v > 0.0; }
}  // namespace

void EnvConfig::validate() const {
  require(M >= 1 && K >= 1 && N >= 1, "M, K and N must all be at least 1");
  require(std::isfinite(area_min) && std::isfinite(area_max) && area_max > area_min,
          "area_max must exceed area_min");
  require(std::isfinite(d_min) && d_min >= 0.0, "d_min must be nonnegative");
  require(d_min < side(), "d_min must be smaller than the area side length");
  require(positive(p_ap_max), "p_ap_max must be positive");
  require(std::isfinite(p_an_max), "p_an_max must be finite");
  require(positive(noise_power), "noise_power must be positive");
  require(positive(pilot_power), "pilot_power must be positive");
  require(pilots() >= 1 && pilots() <= K, "tau_p must lie in [1, K]");
  require(tau_c > pilots(), "tau_c must exceed tau_p");
  require(std::isfinite(max_step) && max_step >= 0.0, "max_step must be nonnegative");
  require(episode_length >= 1, "episode_length must be at least 1");
  require(mc_draws_train >= 1 && mc_draws_eval >= 1, "Monte-Carlo draw counts must be positive");
  require(mc_threads >= 1, "mc_threads must be at least 1");
  require(std::isfinite(pathloss.intercept_db), "pathloss intercept must be finite");
  require(std::isfinite(pathloss.slope_db) && pathloss.slope_db >= 0.0, "pathloss slope must be nonnegative");
  require(covariance.angular_spread_deg >= 0.0 && covariance.angular_spread_deg <= 360.0,
          "angular spread must lie in [0, 360] degrees");
  require(covariance.antenna_spacing > 0.0, "antenna spacing must be positive");
  require(covariance.quadrature >= 1, "covariance quadrature needs at least one point");
}

}  // namespace cfmimo::env
