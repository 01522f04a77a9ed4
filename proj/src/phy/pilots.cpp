// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/phy/pilots.hpp"

#include <stdexcept>

namespace cfmimo::phy {

PilotAssignment assign_pilots(std::size_t K, std::size_t tau_p) {
  if (tau_p == 0) throw std::invalid_argument("assign_pilots: tau_p must be positive");
  PilotAssignment p;
  p.tau_p = tau_p;
  p.t.resize(K);
  for (std::size_t k = 0; k < K; ++k) p.t[k] = k % tau_p;
  p.coset.resize(K);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t i = 0; i < K; ++i)
      if (p.t[i] == p.t[k]) p.coset[k].push_back(i);
  return p;
}

}  // namespace cfmimo::phy
