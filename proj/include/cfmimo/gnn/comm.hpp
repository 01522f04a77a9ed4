// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include "cfmimo/numeric/autodiff.hpp"
#include "cfmimo/numeric/layers.hpp"
#include "cfmimo/numeric/params.hpp"
#include "cfmimo/phy/geometry.hpp"

namespace cfmimo::gnn {

using numeric::Graph;
using numeric::ParamStore;
using numeric::RealTensor;
using numeric::Var;

/// Directed neighbour sets over n nodes, possibly several disjoint graphs of
/// `group` nodes stacked (global indices). neighbors[l] never contains l and
/// is ordered by descending score, lowest index first among equals.
struct CommGraph {
  std::size_t nodes = 0;
  std::size_t group = 0;
  std::vector<std::vector<std::size_t>> neighbors;
  /// nodes x group sigmoid scores that produced the sets (zeros if unscored).
  RealTensor scores;

  static CommGraph empty(std::size_t nodes, std::size_t group);
  /// Each node links to its k nearest APs (nearest first, lowest index on ties).
  static CommGraph nearest(const std::vector<phy::Point>& aps, double side, bool wraparound, std::size_t k);
  /// Stacks copies (one per batch element) with offset indices.
  static CommGraph stack(const std::vector<CommGraph>& parts);
  [[nodiscard]] CommGraph block(std::size_t b) const;
  [[nodiscard]] std::size_t edges() const;
};

/// Thresholds a nodes x group score matrix: j != l joins N_l when its score is
/// above `threshold`, keeping at most top_k by score.
CommGraph threshold_scores(const RealTensor& scores, std::size_t group, double threshold, std::size_t top_k);

enum class PoolKind { kMax, kSum };

struct GnnConfig {
  std::size_t encoder_width = 128;
  std::vector<std::size_t> layer_widths{128, 64};
  /// Aggregator heads; each pools its own block of the message width.
  std::size_t heads = 4;
  std::size_t key_width = 32;
  std::size_t top_k = 3;
  double threshold = 0.5;
  PoolKind pool = PoolKind::kMax;
  /// Edge gates on received messages: 1 forward with the score's gradient
  /// (straight-through), or the score itself in both passes. The soft form is
  /// what finite differences can verify.
  bool straight_through = true;
};

struct GnnOutput {
  Var fused;                // nodes x in_width
  std::vector<Var> states;  // s^(0) .. s^(J)
  Var messages;             // nodes x in_width
  Var scores;               // nodes x group
  CommGraph next;
};

/// Message passing over agent embeddings:
///   s^(0) = E_o(x)
///   a^(j)_l = Pool_{l' in N_l} relu(W_a [s^(0)_l, s^(j-1)_l, s^(j-1)_l'])
///   s^(j)_l = relu(W_c [s^(0)_l, s^(j-1)_l, a^(j)_l])
/// then messages m = W_m s^(J), scores sigmoid(k_l . k_l' / sqrt(d)) with
/// k = W_k s^(J), next neighbour sets by threshold and top-k, and the fused
/// input x_l + W_f mean_{l' in N'_l} g_ll' m_l' where g is 1 in the forward
/// pass and the score in the backward pass.
class CommNet {
 public:
  static CommNet create(ParamStore& store, const std::string& name, std::size_t in_width, const GnnConfig& cfg,
                        numeric::RngStream& rng);

  GnnOutput forward(Graph& g, ParamStore& store, Var x, const CommGraph& graph) const;

  // Individual stages.
  [[nodiscard]] Var encode_observation(Graph& g, ParamStore& store, Var x) const;
  [[nodiscard]] Var aggregate(Graph& g, ParamStore& store, std::size_t layer, Var enc, Var prev,
                              const CommGraph& graph) const;
  [[nodiscard]] Var combine(Graph& g, ParamStore& store, std::size_t layer, Var enc, Var prev, Var agg) const;
  /// Messages, sigmoid scores and the thresholded next graph.
  std::tuple<Var, Var, CommGraph> encode_messages(Graph& g, ParamStore& store, Var last, std::size_t group) const;
  [[nodiscard]] Var update_observation(Graph& g, ParamStore& store, Var x, Var messages, Var scores,
                                       const CommGraph& next) const;

  [[nodiscard]] const GnnConfig& config() const { return cfg_; }
  [[nodiscard]] std::size_t in_width() const { return in_; }
  [[nodiscard]] std::size_t layers() const { return agg_.size(); }
  [[nodiscard]] const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::size_t in_ = 0;
  GnnConfig cfg_;
  numeric::Linear encoder_;
  std::vector<numeric::Linear> agg_, comb_;
  numeric::Linear msg_, key_, fuse_;
};

/// CSV rows "slot,i,j,score" for every edge of the graph.
void write_adjacency_csv(std::ostream& os, std::size_t slot, const CommGraph& graph, bool header);

}  // namespace cfmimo::gnn
