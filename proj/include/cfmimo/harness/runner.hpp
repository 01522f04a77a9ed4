// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

#include "cfmimo/harness/experiment_config.hpp"
#include "cfmimo/harness/metrics.hpp"

namespace cfmimo::harness {

struct RunOptions {
  /// Progress lines; null for silence.
  std::ostream* log = nullptr;
  std::size_t log_every = 25;
  /// Write the bundle under cfg.output_dir.
  bool write = true;
};

/// Trains and evaluates (learners) or rolls out (baselines) every seed.
/// Learners also leave seed_<s>/training.csv and checkpoints under the output
/// directory. Throws ConfigError and marl::NumericFailure.
MetricsBundle run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Evaluation only: a learner evaluated from a checkpoint file, or a baseline.
MetricsBundle evaluate_experiment(const ExperimentConfig& cfg, const std::string& checkpoint,
                                  const RunOptions& opts = {});

}  // namespace cfmimo::harness
