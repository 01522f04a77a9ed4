// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>

#include "cfmimo/numeric/autodiff.hpp"
#include "cfmimo/numeric/layers.hpp"
#include "cfmimo/numeric/params.hpp"
#include "cfmimo/numeric/rng.hpp"

namespace cfmimo::marl {

using numeric::Graph;
using numeric::ParamStore;
using numeric::Var;

struct RewardNetConfig {
  std::size_t embed_width = 64;
  std::size_t heads = 8;
  std::size_t mixer_width = 64;
};

/// Attention-based intrinsic rewards: each agent embeds its (o, a), attends over
/// the other agents of the same sample and reads out one scalar.
class IntrinsicRewardNet {
 public:
  static IntrinsicRewardNet create(ParamStore& store, const std::string& name, std::size_t in_width,
                                   const RewardNetConfig& cfg, numeric::RngStream& rng);
  /// features: (B L) x in_width with agents consecutive. Returns (B L) x 1.
  [[nodiscard]] Var operator()(Graph& g, ParamStore& store, Var features, std::size_t agents) const;

 private:
  std::size_t heads_ = 1;
  numeric::Linear embed_, query_, key_, value_, readout_;
};

/// Softplus-transformed mixing weights; w1 and w2 are nonnegative.
struct MixWeights {
  Var w1, w2, b;
};

/// Hypernetwork mixer r_m = w1 r_ex + w2 r_in + b. The weights come from the
/// agent's own (o, a) encoding concatenated with the sample mean over agents,
/// so they never depend on the reward values and the mix is monotone in r_ex.
class RewardMixer {
 public:
  static RewardMixer create(ParamStore& store, const std::string& name, std::size_t in_width,
                            const RewardNetConfig& cfg, numeric::RngStream& rng);
  [[nodiscard]] MixWeights weights(Graph& g, ParamStore& store, Var features, std::size_t agents) const;
  /// All operands (B L) x 1.
  static Var mix(const MixWeights& w, Var r_in, Var r_ex);

 private:
  numeric::Linear encode_;
  numeric::Mlp hyper_;
};

}  // namespace cfmimo::marl
