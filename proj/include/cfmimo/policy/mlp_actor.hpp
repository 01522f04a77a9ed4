// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cfmimo/numeric/layers.hpp"
#include "cfmimo/policy/actor.hpp"

namespace cfmimo::policy {

/// Order-sensitive baseline actor on the flattened observation.
class MlpActor : public Actor {
 public:
  static std::unique_ptr<MlpActor> create(ParamStore& store, const std::string& name, std::size_t K, std::size_t N,
                                          numeric::RngStream& rng, std::vector<std::size_t> hidden = {128, 64},
                                          double leaky_slope = 0.01);

  PolicyOutput forward(Graph& g, ParamStore& store, const EntityBatch& batch, const RealTensor& hidden,
                       const gnn::CommGraph& graph, const ForwardOptions& opts) const override;
  [[nodiscard]] std::size_t hidden_width() const override { return 0; }
  [[nodiscard]] bool uses_graph() const override { return false; }
  [[nodiscard]] std::unique_ptr<Actor> clone() const override { return std::make_unique<MlpActor>(*this); }

  MlpActor(const MlpActor&) = default;

 private:
  MlpActor(std::size_t K, std::size_t N) : Actor(K, N) {}
  numeric::Mlp net_;
};

}  // namespace cfmimo::policy
