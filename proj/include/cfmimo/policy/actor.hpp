// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "cfmimo/env/actions.hpp"
#include "cfmimo/env/observation.hpp"
#include "cfmimo/gnn/comm.hpp"
#include "cfmimo/numeric/autodiff.hpp"
#include "cfmimo/numeric/params.hpp"
#include "cfmimo/numeric/rng.hpp"

namespace cfmimo::policy {

using numeric::Graph;
using numeric::ParamStore;
using numeric::RealTensor;
using numeric::Var;

/// Observations of S samples x L agents, stacked agent-major inside each sample.
struct EntityBatch {
  std::size_t samples = 0, agents = 0, K = 0, N = 0;
  RealTensor ue_rows;       // (S L K) x (2N + 5)
  RealTensor antenna_rows;  // (S L N) x 3
  RealTensor flat;          // (S L) x (K (2N + 5) + 3 N)

  static EntityBatch from(const std::vector<std::vector<env::Observation>>& samples);
  static EntityBatch from(const std::vector<env::Observation>& agents) { return from(std::vector<std::vector<env::Observation>>(1, agents)); }
  [[nodiscard]] std::size_t rows() const { return samples * agents; }
};

struct ForwardOptions {
  /// Training mode: soft weight selection with Gumbel noise. Eval is hard and noise-free.
  bool train = false;
  std::uint64_t noise_seed = 0;
  double temperature = 1.0;
};

/// Pre-squash action means, one row per agent: [mobility (2) | split logits (K) | antenna logits (N)].
struct PolicyOutput {
  Var mean;
  Var mobility;     // rows x 2
  Var split;        // rows x K
  Var antenna;      // rows x N
  Var embedding;    // input-module output A_t (rows x d_r), absent for the MLP actor
  Var hidden;       // next recurrent state, absent when hidden_width() == 0
  gnn::CommGraph next_graph;
};

class Actor {
 public:
  virtual ~Actor() = default;
  /// hidden is rows x hidden_width() (ignored when that is 0); graph is used only if uses_graph().
  virtual PolicyOutput forward(Graph& g, ParamStore& store, const EntityBatch& batch, const RealTensor& hidden,
                               const gnn::CommGraph& graph, const ForwardOptions& opts) const = 0;
  [[nodiscard]] virtual std::size_t hidden_width() const = 0;
  [[nodiscard]] virtual bool uses_graph() const = 0;
  [[nodiscard]] virtual std::unique_ptr<Actor> clone() const = 0;
  [[nodiscard]] std::size_t K() const { return K_; }
  [[nodiscard]] std::size_t N() const { return N_; }
  [[nodiscard]] std::size_t action_dim() const { return 2 + K_ + N_; }

 protected:
  Actor(std::size_t K, std::size_t N) : K_(K), N_(N) {}
  std::size_t K_, N_;
};

/// Squashes one pre-squash row: tanh mobility, softmax split, sigmoid antenna
/// weights and ap_power equal to their mean.
env::ActionVector to_env_action(std::span<const double> pre, std::size_t K, std::size_t N);

/// x = mean + sigma * eps with eps ~ N(0, I).
RealTensor gaussian_sample(const RealTensor& mean, double sigma, numeric::RngStream& rng);

/// Per-row log-density of x under N(mean, sigma^2 I): rows x 1.
Var gaussian_log_prob(Var mean, Var x, double sigma);

/// Softmax over consecutive groups of `group` rows of a column; sums use sorted
/// order so a permutation inside a group permutes the result exactly.
Var group_softmax(Var column, std::size_t group);

}  // namespace cfmimo::policy
