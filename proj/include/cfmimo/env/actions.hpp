// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "cfmimo/env/config.hpp"
#include "cfmimo/phy/geometry.hpp"

namespace cfmimo::env {

/// One agent's action. Mobility is in units of max_step; ap_power is a fraction
/// of P_ap_max; power_split is a per-UE share; antenna_weights shape how the AP
/// power is spread over its antennas (uniform by default).
struct ActionVector {
  std::array<double, 2> mobility{0.0, 0.0};
  double ap_power = 0.0;
  std::vector<double> power_split;
  std::vector<double> antenna_weights;

  /// Zero move, zero power, uniform split and antenna profile.
  static ActionVector idle(std::size_t K, std::size_t N);
};

/// Transmit powers implied by a feasible action.
struct PowerAllocation {
  std::vector<double> rho;              // per UE, watts
  std::vector<double> antenna_profile;  // per antenna, sums to 1
  [[nodiscard]] double total() const;
  /// Power carried by antenna n: total() * antenna_profile[n].
  [[nodiscard]] double antenna_power(std::size_t n) const;
};

struct ProjectedAction {
  ActionVector action;  // the feasible action actually applied
  phy::Point position;  // AP position after the move
  PowerAllocation power;
  bool move_truncated = false;
  bool power_scaled = false;
};

/// Rejects NaN/inf entries and size mismatches with std::invalid_argument.
void validate_raw_action(const ActionVector& a, std::size_t K, std::size_t N);

/// Maps a raw action for AP m onto the feasible set: the move is clipped to the
/// area and truncated along its direction at the first point where any UE would
/// come closer than d_min; shares are renormalized; the total power is scaled
/// down until both the AP and the per-antenna caps hold.
ProjectedAction project_action(const ActionVector& raw, std::size_t m, const phy::NetworkGeometry& geom,
                               const EnvConfig& cfg);
std::vector<ProjectedAction> project_actions(const std::vector<ActionVector>& raw, const phy::NetworkGeometry& geom,
                                             const EnvConfig& cfg);

struct ConstraintReport {
  bool distance_ok = true;
  bool bounds_ok = true;
  bool ap_power_ok = true;
  bool antenna_power_ok = true;
  [[nodiscard]] bool all() const { return distance_ok && bounds_ok && ap_power_ok && antenna_power_ok; }
};

/// Checks all four constraints from scratch: every AP-UE distance, the area
/// bounds, the AP power cap and every per-antenna cap.
ConstraintReport check_constraints(const phy::NetworkGeometry& geom, const std::vector<PowerAllocation>& power,
                                   const EnvConfig& cfg);

/// Whether p keeps at least d_min from every UE and lies inside the area.
bool position_feasible(const phy::Point& p, const phy::NetworkGeometry& geom, double d_min);

}  // namespace cfmimo::env
