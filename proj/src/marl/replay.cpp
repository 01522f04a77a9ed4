// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/marl/replay.hpp"

#include <algorithm>
#include <stdexcept>

namespace cfmimo::marl {

ReplayPool::ReplayPool(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayPool: capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayPool::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
  ++pushed_;
}

std::vector<std::size_t> ReplayPool::sample_indices(std::size_t n, numeric::RngStream& rng) const {
  const std::size_t size = items_.size();
  if (n > size) throw std::invalid_argument("ReplayPool: batch larger than occupancy");
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t j = size - n; j < size; ++j) {
    const std::size_t t = rng.index(j + 1);
    if (std::find(out.begin(), out.end(), t) == out.end())
      out.push_back(t);
    else
      out.push_back(j);
  }
  return out;
}

namespace {

RealTensor stack_rows(const std::vector<const RealTensor*>& parts) {
  std::size_t rows = 0;
  const std::size_t cols = parts.front()->cols();
  for (const auto* p : parts) rows += p->rows();
  RealTensor out(rows, cols);
  std::size_t off = 0;
  for (const auto* p : parts) {
    std::copy(p->values().begin(), p->values().end(), out.data() + off);
    off += p->size();
  }
  return out;
}

}  // namespace

TrainBatch make_batch(const ReplayPool& pool, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw std::invalid_argument("make_batch: no indices");
  TrainBatch b;
  b.samples = indices.size();
  b.agents = pool.at(indices[0]).obs.size();
  std::vector<std::vector<env::Observation>> obs, next;
  std::vector<const RealTensor*> h, h2, acts, means;
  std::vector<gnn::CommGraph> g, g2;
  b.r_ex = RealTensor(b.samples * b.agents, 1);
  b.r_m = RealTensor(b.samples * b.agents, 1);
  b.sum_se = RealTensor(b.samples, 1);
  b.done = RealTensor(b.samples, 1);
  for (std::size_t s = 0; s < indices.size(); ++s) {
    const Transition& t = pool.at(indices[s]);
    if (t.obs.size() != b.agents || t.r_ex.size() != b.agents || t.r_m.size() != b.agents)
      throw std::invalid_argument("make_batch: agent counts differ");
    obs.push_back(t.obs);
    next.push_back(t.next_obs);
    h.push_back(&t.hidden);
    h2.push_back(&t.next_hidden);
    acts.push_back(&t.actions);
    if (t.means.shape() != t.actions.shape()) throw std::invalid_argument("make_batch: behaviour means missing");
    means.push_back(&t.means);
    g.push_back(t.graph);
    g2.push_back(t.next_graph);
    for (std::size_t l = 0; l < b.agents; ++l) {
      b.r_ex(s * b.agents + l, 0) = t.r_ex[l];
      b.r_m(s * b.agents + l, 0) = t.r_m[l];
    }
    b.sum_se(s, 0) = t.sum_se;
    b.done(s, 0) = t.done ? 1.0 : 0.0;
  }
  b.obs = policy::EntityBatch::from(obs);
  b.next_obs = policy::EntityBatch::from(next);
  b.hidden = stack_rows(h);
  b.next_hidden = stack_rows(h2);
  b.actions = stack_rows(acts);
  b.means = stack_rows(means);
  b.graph = gnn::CommGraph::stack(g);
  b.next_graph = gnn::CommGraph::stack(g2);
  return b;
}

}  // namespace cfmimo::marl
