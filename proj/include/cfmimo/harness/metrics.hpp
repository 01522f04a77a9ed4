// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace cfmimo::harness {

struct SeedMetrics {
  std::uint64_t seed = 0;
  /// Per-episode mean sum SE: the training curve of a learner, or a fixed
  /// policy replayed on the same training geometries.
  std::vector<double> episode_sum_se;
  /// Slot-level sum SE of the evaluation episodes (CDF samples, raw order).
  std::vector<double> eval_sum_se;
  /// Per-UE SE of every evaluation slot, K values per slot.
  std::vector<double> eval_ue_se;
  std::optional<std::size_t> convergence_episode;
  /// CSV text of the first evaluation episode, in the environment dump schema.
  std::string trajectory_csv;
};

struct MetricsBundle {
  nlohmann::json config;  // resolved experiment config
  std::vector<SeedMetrics> seeds;

  [[nodiscard]] std::string algorithm() const;
  /// Slot-level evaluation samples of every seed, concatenated in seed order.
  [[nodiscard]] std::vector<double> pooled_eval() const;
};

/// Trailing mean over `window` episodes; entry i covers episodes i-window+1..i
/// and the first window-1 entries average whatever precedes them.
std::vector<double> moving_average(const std::vector<double>& curve, std::size_t window);

/// First episode whose full trailing window average lies within tol (relative)
/// of the final window's average. Empty when the curve is shorter than window.
std::optional<std::size_t> convergence_point(const std::vector<double>& curve, std::size_t window = 100,
                                             double tol = 0.01);

double mean(const std::vector<double>& v);
/// Mean of the last n entries (all of them if fewer).
double tail_mean(const std::vector<double>& v, std::size_t n);
/// Linear interpolation between order statistics; q in [0, 1].
double quantile(std::vector<double> v, double q);
double median(const std::vector<double>& v);

struct CdfPoint {
  double value;
  double probability;
};
/// Sorted samples with ties collapsed to their largest cumulative probability.
std::vector<CdfPoint> empirical_cdf(std::vector<double> samples);

/// Files under dir: resolved_config.json, summary.json and, per seed s,
/// episodes_seed<s>.csv, eval_seed<s>.csv, ue_se_seed<s>.csv, trajectory_seed<s>.csv.
void write_bundle(const MetricsBundle& bundle, const std::string& dir);
MetricsBundle read_bundle(const std::string& dir);

}  // namespace cfmimo::harness
