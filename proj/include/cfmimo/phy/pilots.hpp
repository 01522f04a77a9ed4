// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

namespace cfmimo::phy {

/// Pilot indices are zero-based: t[k] in [0, tau_p).
struct PilotAssignment {
  std::size_t tau_p = 0;
  std::vector<std::size_t> t;
  /// coset[k] = { i : t[i] == t[k] }, ascending.
  std::vector<std::vector<std::size_t>> coset;
};

/// Round-robin: UE k gets pilot k mod tau_p.
PilotAssignment assign_pilots(std::size_t K, std::size_t tau_p);

}  // namespace cfmimo::phy
