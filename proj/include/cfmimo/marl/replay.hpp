// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "cfmimo/env/observation.hpp"
#include "cfmimo/gnn/comm.hpp"
#include "cfmimo/numeric/rng.hpp"
#include "cfmimo/numeric/tensor.hpp"
#include "cfmimo/policy/actor.hpp"

namespace cfmimo::marl {

using numeric::RealTensor;

/// One slot of experience for all L agents: (o, s, a, r_ex, r_m, s', o').
/// The recurrent state and communication graph play the role of s.
struct Transition {
  std::vector<env::Observation> obs, next_obs;
  RealTensor hidden, next_hidden;  // L x hidden width (0 columns without recurrence)
  gnn::CommGraph graph, next_graph;
  RealTensor actions;              // L x (2 + K + N), pre-squash samples
  RealTensor means;                // L x (2 + K + N), behaviour policy means
  std::vector<double> r_ex;        // per agent
  std::vector<double> r_m;         // per agent, mixed with the reward nets of the time
  double sum_se = 0.0;
  bool done = false;
};

/// Ring buffer of transitions.
class ReplayPool {
 public:
  explicit ReplayPool(std::size_t capacity);

  void push(Transition t);
  [[nodiscard]] std::size_t size() const { return items_.size(); }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  /// Total pushes, including overwritten ones.
  [[nodiscard]] std::size_t pushed() const { return pushed_; }
  [[nodiscard]] const Transition& at(std::size_t i) const { return items_.at(i); }

  /// n distinct slots drawn uniformly from the occupied part (Floyd's algorithm).
  [[nodiscard]] std::vector<std::size_t> sample_indices(std::size_t n, numeric::RngStream& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::size_t pushed_ = 0;
  std::vector<Transition> items_;
};

/// Sampled transitions laid out for batched network evaluation. Rows are
/// sample-major with agents consecutive, matching policy::EntityBatch.
struct TrainBatch {
  std::size_t samples = 0, agents = 0;
  policy::EntityBatch obs, next_obs;
  RealTensor hidden, next_hidden;  // (B L) x h
  gnn::CommGraph graph, next_graph;
  RealTensor actions;              // (B L) x A
  RealTensor means;                // (B L) x A
  RealTensor r_ex, r_m;            // (B L) x 1
  RealTensor sum_se;               // B x 1
  RealTensor done;                 // B x 1, 1 for the last slot of an episode
};

TrainBatch make_batch(const ReplayPool& pool, const std::vector<std::size_t>& indices);

}  // namespace cfmimo::marl
