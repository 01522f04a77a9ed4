// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace cfmimo::phy {

enum class PathlossModel {
  /// PL(dB) = intercept + slope * log10(d / 1 km).
  kLogDistance,
  /// COST-231 Walfisch-Ikegami, non-line-of-sight urban profile.
  kCost231WalfischIkegami,
};

struct PathlossConfig {
  PathlossModel model = PathlossModel::kLogDistance;
  double intercept_db = 140.7;
  double slope_db = 36.7;

  // COST-231 WI parameters (only read by that model).
  double carrier_mhz = 1900.0;
  double bs_height_m = 15.0;
  double ms_height_m = 1.65;
  double roof_height_m = 12.0;
  double street_width_m = 20.0;
  double building_separation_m = 40.0;
  double street_orientation_deg = 90.0;
  bool metropolitan = false;
};

/// Pathloss in dB at distance d (meters). d below 1 m is treated as 1 m.
double pathloss_db(double d, const PathlossConfig& cfg);
/// Linear large-scale gain 10^(-PL/10).
double pathloss(double d, const PathlossConfig& cfg);

}  // namespace cfmimo::phy
