// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/phy/pathloss.hpp"

#include <algorithm>
#include <cmath>

namespace cfmimo::phy {

namespace {

double cost231_wi_db(double d_m, const PathlossConfig& c) {
  const double d_km = d_m / 1000.0;
  const double f = c.carrier_mhz;
  const double free_space = 32.45 + 20.0 * std::log10(f) + 20.0 * std::log10(d_km);

  const double dh_ms = c.roof_height_m - c.ms_height_m;
  const double phi = c.street_orientation_deg;
  double orientation;
  if (phi < 35.0)
    orientation = -10.0 + 0.354 * phi;
  else if (phi < 55.0)
    orientation = 2.5 + 0.075 * (phi - 35.0);
  else
    orientation = 4.0 - 0.114 * (phi - 55.0);
  const double rooftop = -16.9 - 10.0 * std::log10(c.street_width_m) + 10.0 * std::log10(f) +
                         20.0 * std::log10(std::max(dh_ms, 1e-3)) + orientation;

  const double dh_bs = c.bs_height_m - c.roof_height_m;
  const double l_bsh = dh_bs > 0.0 ? -18.0 * std::log10(1.0 + dh_bs) : 0.0;
  double ka = 54.0;
  if (dh_bs <= 0.0) ka = d_km >= 0.5 ? 54.0 - 0.8 * dh_bs : 54.0 - 0.8 * dh_bs * d_km / 0.5;
  const double kd = dh_bs > 0.0 ? 18.0 : 18.0 - 15.0 * dh_bs / c.roof_height_m;
  const double kf = c.metropolitan ? -4.0 + 1.5 * (f / 925.0 - 1.0) : -4.0 + 0.7 * (f / 925.0 - 1.0);
  const double multiscreen = l_bsh + ka + kd * std::log10(d_km) + kf * std::log10(f) -
                             9.0 * std::log10(c.building_separation_m);

  return free_space + std::max(0.0, rooftop + multiscreen);
}

}  // namespace

double pathloss_db(double d, const PathlossConfig& cfg) {
  const double dm = std::max(d, 1.0);
  switch (cfg.model) {
    case PathlossModel::kLogDistance: return cfg.intercept_db + cfg.slope_db * std::log10(dm / 1000.0);
    case PathlossModel::kCost231WalfischIkegami: return cost231_wi_db(dm, cfg);
  }
  return 0.0;
}

double pathloss(double d, const PathlossConfig& cfg) { return std::pow(10.0, -pathloss_db(d, cfg) / 10.0); }

}  // namespace cfmimo::phy
