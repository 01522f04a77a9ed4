// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cfmimo/harness/metrics.hpp"

namespace cfmimo::harness {

enum class Pairing {
  /// Seeds resampled jointly; requires identical seed lists.
  kBySeed,
  kUnpaired,
};

struct Interval {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct Comparison {
  std::string candidate, reference;
  std::size_t candidate_seeds = 0, reference_seeds = 0;
  /// Medians of the pooled evaluation samples.
  double candidate_median = 0.0, reference_median = 0.0;
  /// mean_seeds(median_c) / mean_seeds(median_r) - 1, with a 95% percentile
  /// bootstrap interval over seeds.
  Interval improvement;
  /// Mean convergence episode ratio, when every seed of both bundles has one.
  std::optional<Interval> convergence_ratio;
};

/// Throws ConfigError when the bundles differ in anything but the algorithm,
/// feature flags, training knobs or output directory.
Comparison compare(const MetricsBundle& candidate, const MetricsBundle& reference, Pairing pairing = Pairing::kBySeed,
                   std::size_t resamples = 1000, std::uint64_t seed = 1);

void write_comparison_table(std::ostream& os, const std::vector<Comparison>& rows);
nlohmann::json to_json(const Comparison& c);

}  // namespace cfmimo::harness
