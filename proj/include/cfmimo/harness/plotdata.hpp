// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "cfmimo/harness/metrics.hpp"

namespace cfmimo::harness {

enum class Figure { kCdf, kConvergence, kTrajectory, kScaling };

/// "cdf", "convergence", "trajectory" or "scaling"; throws ConfigError.
Figure parse_figure(const std::string& name);

/// CSV files under dir, one per bundle except scaling (one file for all):
///   cdf_<label>.csv          sum_se,cumulative_probability
///   convergence_<label>.csv  episode,mean_sum_se,moving_average   (means over seeds)
///   trajectory_<label>.csv   environment dump schema, first seed
///   scaling.csv              M,algorithm,median,q25,q75
/// The label is the last component of the bundle's output directory.
/// Returns the paths written.
std::vector<std::string> emit_plotdata(const std::vector<MetricsBundle>& bundles, Figure figure,
                                       const std::string& dir);

}  // namespace cfmimo::harness
