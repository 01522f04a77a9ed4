// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/marl/reward_nets.hpp"

#include <cmath>
#include <stdexcept>

namespace cfmimo::marl {

IntrinsicRewardNet IntrinsicRewardNet::create(ParamStore& store, const std::string& name, std::size_t in_width,
                                              const RewardNetConfig& cfg, numeric::RngStream& rng) {
  if (cfg.heads == 0 || cfg.embed_width % cfg.heads != 0)
    throw std::invalid_argument("IntrinsicRewardNet: embed width must split evenly over heads");
  IntrinsicRewardNet n;
  n.heads_ = cfg.heads;
  const std::size_t d = cfg.embed_width;
  n.embed_ = numeric::Linear::create(store, name + ".embed", in_width, d, rng);
  n.query_ = numeric::Linear::create(store, name + ".query", d, d, rng, false);
  n.key_ = numeric::Linear::create(store, name + ".key", d, d, rng, false);
  n.value_ = numeric::Linear::create(store, name + ".value", d, d, rng, false);
  n.readout_ = numeric::Linear::create(store, name + ".readout", 2 * d, 1, rng);
  return n;
}

Var IntrinsicRewardNet::operator()(Graph& g, ParamStore& store, Var features, std::size_t agents) const {
  Var e = numeric::relu(embed_(g, store, features));
  Var att = numeric::group_attention(query_(g, store, e), key_(g, store, e), value_(g, store, e), agents, heads_);
  return readout_(g, store, numeric::concat_cols({e, att}));
}

RewardMixer RewardMixer::create(ParamStore& store, const std::string& name, std::size_t in_width,
                                const RewardNetConfig& cfg, numeric::RngStream& rng) {
  RewardMixer m;
  const std::size_t d = cfg.mixer_width;
  m.encode_ = numeric::Linear::create(store, name + ".encode", in_width, d, rng);
  m.hyper_ = numeric::Mlp::create(store, name + ".hyper", {2 * d, d, 3}, rng);
  // Start near r_m = r_ex + 0.1 r_in: small output weights, softplus^-1 biases.
  auto& last = m.hyper_.layers.back();
  for (auto& v : store[last.w].value.values()) v *= 0.1;
  auto& bias = store[last.b].value;
  bias(0, 0) = std::log(std::exp(1.0) - 1.0);
  bias(0, 1) = std::log(std::exp(0.1) - 1.0);
  bias(0, 2) = 0.0;
  return m;
}

MixWeights RewardMixer::weights(Graph& g, ParamStore& store, Var features, std::size_t agents) const {
  Var h = numeric::relu(encode_(g, store, features));
  Var ctx = numeric::repeat_rows(numeric::scale(numeric::group_sum(h, agents), 1.0 / static_cast<double>(agents)),
                                 agents);
  Var out = hyper_(g, store, numeric::concat_cols({h, ctx}));
  return {numeric::softplus(numeric::slice_cols(out, 0, 1)), numeric::softplus(numeric::slice_cols(out, 1, 1)),
          numeric::slice_cols(out, 2, 1)};
}

Var RewardMixer::mix(const MixWeights& w, Var r_in, Var r_ex) {
  return numeric::add(numeric::add(numeric::mul(w.w1, r_ex), numeric::mul(w.w2, r_in)), w.b);
}

}  // namespace cfmimo::marl
