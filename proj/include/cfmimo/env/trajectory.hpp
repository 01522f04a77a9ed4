// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "cfmimo/env/environment.hpp"

namespace cfmimo::env {

/// Per-slot, per-agent rows: slot, agent, x, y, ap_power, split_k..., se_k...
class TrajectoryRecorder {
 public:
  explicit TrajectoryRecorder(std::size_t K) : K_(K) {}

  /// Records the positions in state together with the step that produced them.
  void record(const EnvState& state, const StepResult& step);
  /// Initial positions, slot 0, before any action.
  void record_initial(const EnvState& state);

  void write_csv(std::ostream& os) const;
  void write_csv(const std::string& path) const;
  [[nodiscard]] std::string header() const;
  [[nodiscard]] std::size_t rows() const { return rows_.size(); }

 private:
  struct Row {
    std::size_t slot, agent;
    double x, y, ap_power;
    std::vector<double> split, se;
  };
  std::size_t K_;
  std::vector<Row> rows_;
};

}  // namespace cfmimo::env
