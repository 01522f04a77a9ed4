// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cfmimo/numeric/autodiff.hpp"
#include "cfmimo/numeric/layers.hpp"
#include "cfmimo/numeric/params.hpp"
#include "cfmimo/numeric/rng.hpp"

namespace cfmimo::marl {

using numeric::Graph;
using numeric::ParamStore;
using numeric::Var;

/// Differentiable version of policy::to_env_action without the ap_power column:
/// [tanh mobility | softmax split | sigmoid antenna weights].
Var squash_actions(Var pre, std::size_t K, std::size_t N);

/// One critic per agent, Q_l(o_l, a_l), each with its own parameters.
class MixedCritics {
 public:
  static MixedCritics create(ParamStore& store, const std::string& name, std::size_t agents, std::size_t obs_width,
                             std::size_t action_width, const std::vector<std::size_t>& hidden, numeric::RngStream& rng);
  /// obs: (B L) x obs_width, actions: (B L) x action_width (squashed), rows sample-major. Returns (B L) x 1.
  [[nodiscard]] Var operator()(Graph& g, ParamStore& store, Var obs, Var actions) const;
  [[nodiscard]] std::size_t agents() const { return nets_.size(); }

 private:
  std::vector<numeric::Mlp> nets_;
};

/// Q_g(O, A) on the concatenation of every agent's (o_l, a_l).
class GlobalCritic {
 public:
  static GlobalCritic create(ParamStore& store, const std::string& name, std::size_t agents, std::size_t obs_width,
                             std::size_t action_width, const std::vector<std::size_t>& hidden, numeric::RngStream& rng);
  /// Same row layout as MixedCritics; returns B x 1.
  [[nodiscard]] Var operator()(Graph& g, ParamStore& store, Var obs, Var actions) const;

 private:
  std::size_t agents_ = 0;
  numeric::Mlp net_;
};

}  // namespace cfmimo::marl
