// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/policy/mlp_actor.hpp"

#include <stdexcept>

#include "cfmimo/env/observation.hpp"

namespace cfmimo::policy {

std::unique_ptr<MlpActor> MlpActor::create(ParamStore& store, const std::string& name, std::size_t K, std::size_t N,
                                           numeric::RngStream& rng, std::vector<std::size_t> hidden,
                                           double leaky_slope) {
  std::unique_ptr<MlpActor> a(new MlpActor(K, N));
  std::vector<std::size_t> widths{K * env::Observation::ue_features(N) + N * env::Observation::kAntennaFeatures};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(2 + K + N);
  a->net_ = numeric::Mlp::create(store, name + ".mlp", widths, rng, numeric::Activation::kLeakyRelu,
                                 numeric::Activation::kNone, leaky_slope);
  return a;
}

PolicyOutput MlpActor::forward(Graph& g, ParamStore& store, const EntityBatch& batch, const RealTensor&,
                               const gnn::CommGraph&, const ForwardOptions&) const {
  if (batch.K != K_ || batch.N != N_) throw std::invalid_argument("MlpActor: batch entity counts do not match");
  PolicyOutput out;
  out.mean = net_(g, store, g.constant(batch.flat));
  out.mobility = numeric::slice_cols(out.mean, 0, 2);
  out.split = numeric::slice_cols(out.mean, 2, K_);
  out.antenna = numeric::slice_cols(out.mean, 2 + K_, N_);
  return out;
}

}  // namespace cfmimo::policy
