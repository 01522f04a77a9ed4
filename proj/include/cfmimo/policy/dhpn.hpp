// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "cfmimo/gnn/comm.hpp"
#include "cfmimo/numeric/layers.hpp"
#include "cfmimo/policy/actor.hpp"

namespace cfmimo::policy {

enum class WeightMode {
  /// Every entity row generates its own weight matrix.
  kHypernet,
  /// Every entity row picks from a small pool through a Gumbel-softmax selector.
  kFinitePool,
};

struct DhpnConfig {
  WeightMode mode = WeightMode::kHypernet;
  std::size_t d_r = 256;
  std::size_t hyper_hidden = 64;
  std::vector<std::size_t> head_widths{128, 64};
  std::size_t pool_size = 4;
  bool recurrent = true;
  bool use_gnn = false;
  gnn::GnnConfig gnn;
  /// Per-entity (equivariant) power heads. When false the split and antenna
  /// logits come from B_t alone, which makes them invariant as well.
  bool joint = true;
};

/// Permutation network over UE rows (input module, PI mobility head, PE split
/// head) and antenna rows (PE antenna head), with an RNN and optional GNN backbone.
class Dhpn : public Actor {
 public:
  static std::unique_ptr<Dhpn> create(ParamStore& store, const std::string& name, const DhpnConfig& cfg,
                                      std::size_t K, std::size_t N, numeric::RngStream& rng);

  PolicyOutput forward(Graph& g, ParamStore& store, const EntityBatch& batch, const RealTensor& hidden,
                       const gnn::CommGraph& graph, const ForwardOptions& opts) const override;
  [[nodiscard]] std::size_t hidden_width() const override { return cfg_.recurrent ? cfg_.d_r : 0; }
  [[nodiscard]] bool uses_graph() const override { return cfg_.use_gnn; }
  [[nodiscard]] std::unique_ptr<Actor> clone() const override { return std::make_unique<Dhpn>(*this); }

  /// Sum over UE rows of o^T W(o): rows (S L K) x f -> (S L) x d_r.
  [[nodiscard]] Var input_pi(Graph& g, ParamStore& store, Var ue_rows, const ForwardOptions& opts) const;
  /// GNN fusion (if enabled) followed by the recurrent cell. Returns B_t.
  [[nodiscard]] Var backbone(Graph& g, ParamStore& store, Var a, const RealTensor& hidden, const gnn::CommGraph& graph,
                             gnn::CommGraph* next) const;
  /// Pre-tanh mobility mean, rows x 2.
  [[nodiscard]] Var output_pi(Graph& g, ParamStore& store, Var b) const;
  /// One logit per entity row, reshaped to rows x entities.
  [[nodiscard]] Var output_pe(Graph& g, ParamStore& store, Var entity_rows, Var b, bool split_head,
                              const ForwardOptions& opts) const;

  [[nodiscard]] const DhpnConfig& config() const { return cfg_; }

  Dhpn(const Dhpn&) = default;

 private:
  Dhpn(std::size_t K, std::size_t N) : Actor(K, N) {}
  [[nodiscard]] Var select(Graph& g, ParamStore& store, const numeric::Mlp& selector, Var rows, std::uint64_t domain,
                           const ForwardOptions& opts) const;

  std::string name_;
  DhpnConfig cfg_;
  std::size_t f_ue_ = 0;
  numeric::Mlp in_hyper_, sp_hyper_, mp_hyper_;
  numeric::Mlp in_sel_, sp_sel_, mp_sel_;
  std::size_t in_pool_ = 0, sp_pool_ = 0, mp_pool_ = 0;
  numeric::ReluRnnCell rnn_;
  numeric::Linear project_;  // used when the backbone is not recurrent
  std::optional<gnn::CommNet> gnn_;
  numeric::Mlp pi_head_;
  numeric::Linear sp_inv_, mp_inv_;
};

/// Digest of a row's bit pattern; seeds the per-row Gumbel noise so the noise
/// follows the row's content rather than its position.
std::uint64_t row_hash(std::span<const double> row);

}  // namespace cfmimo::policy
