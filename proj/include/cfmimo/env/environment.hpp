// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "cfmimo/env/actions.hpp"
#include "cfmimo/env/config.hpp"
#include "cfmimo/env/observation.hpp"
#include "cfmimo/numeric/rng.hpp"
#include "cfmimo/phy/estimation.hpp"
#include "cfmimo/phy/pilots.hpp"

namespace cfmimo::env {

struct EnvState {
  phy::NetworkGeometry geometry;
  phy::CovarianceSet cov;  // beta lives in cov.beta
  phy::ChannelRealization channels;
  phy::ChannelEstimate estimates;
  std::size_t slot = 0;
};

/// Spectral efficiency of one power allocation in a fixed geometry.
struct SeOutcome {
  std::vector<double> ue_se;
  double sum_se = 0.0;
  bool guard_triggered = false;
};

struct StepResult {
  std::vector<Observation> observations;
  std::vector<double> r_ex;  // sum_se / M for every agent
  double sum_se = 0.0;
  std::vector<double> ue_se;
  ConstraintReport constraints;
  std::vector<ProjectedAction> applied;
  bool sinr_guard = false;
  bool done = false;
};

class Environment {
 public:
  /// Validates cfg; throws ConfigError.
  explicit Environment(EnvConfig cfg);

  /// Uniform AP and UE positions, redrawn until every AP-UE pair keeps d_min.
  std::vector<Observation> reset(numeric::RngStream& rng);
  /// Starts an episode from a given geometry (must be feasible).
  std::vector<Observation> reset_with(phy::NetworkGeometry geometry, numeric::RngStream& rng);

  /// Projects the actions, moves the APs, redraws channels and estimates and
  /// scores the new slot. eval selects the evaluation Monte-Carlo budget.
  StepResult step(const std::vector<ActionVector>& actions, numeric::RngStream& rng, bool eval = false);

  /// Sum SE of the given allocation at the current positions.
  [[nodiscard]] SeOutcome score(const std::vector<PowerAllocation>& power, numeric::RngStream& rng,
                                std::size_t draws) const;

  [[nodiscard]] const EnvState& state() const { return state_; }
  [[nodiscard]] const EnvConfig& config() const { return cfg_; }
  [[nodiscard]] const phy::PilotAssignment& pilots() const { return pilots_; }
  [[nodiscard]] std::vector<Observation> observations() const;
  [[nodiscard]] bool done() const { return state_.slot >= cfg_.episode_length; }

  static constexpr int kMaxResetAttempts = 1000;

 private:
  void refresh(numeric::RngStream& rng);

  EnvConfig cfg_;
  phy::PilotAssignment pilots_;
  std::vector<double> pilot_powers_;
  EnvState state_;
};

}  // namespace cfmimo::env
