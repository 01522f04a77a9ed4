// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "cfmimo/numeric/autodiff.hpp"
#include "cfmimo/numeric/params.hpp"
#include "cfmimo/numeric/rng.hpp"

namespace cfmimo::numeric {

/// Builds a scalar loss on a fresh graph from the current store values.
using LossBuilder = std::function<Var(Graph&, ParamStore&)>;

struct GradCheckEntry {
  std::string param;
  std::size_t offset = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  /// Parameters that received an identically zero analytic gradient.
  std::vector<std::string> dead_params;
  [[nodiscard]] bool passed(double tol) const { return max_rel_error < tol; }
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps near-zero pairs from
/// dominating; it is far below every gradient magnitude the suites care about.
double relative_error(double analytic, double numeric, double floor = 1e-7);

/// Compares reverse-mode gradients against central differences for `samples`
/// randomly chosen scalar entries (spread over as many tensors as possible).
GradCheckReport check_gradients(ParamStore& store, const LossBuilder& loss, std::size_t samples, RngStream& rng,
                                double step = 1e-5);

}  // namespace cfmimo::numeric
