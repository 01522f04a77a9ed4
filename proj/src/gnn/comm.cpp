// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/gnn/comm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cfmimo::gnn {

namespace {

// Orders candidates by descending key, then ascending index.
void rank(std::vector<std::pair<double, std::size_t>>& c) {
  std::stable_sort(c.begin(), c.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
}

}  // namespace

CommGraph CommGraph::empty(std::size_t nodes, std::size_t group) {
  if (group == 0 || nodes % group != 0) throw std::invalid_argument("CommGraph: nodes must be a multiple of group");
  CommGraph c;
  c.nodes = nodes;
  c.group = group;
  c.neighbors.assign(nodes, {});
  c.scores = RealTensor(nodes, group);
  return c;
}

CommGraph CommGraph::nearest(const std::vector<phy::Point>& aps, double side, bool wraparound, std::size_t k) {
  const std::size_t L = aps.size();
  CommGraph c = empty(L, L);
  for (std::size_t l = 0; l < L; ++l) {
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t j = 0; j < L; ++j)
      if (j != l) cand.emplace_back(-phy::planar_distance(aps[l], aps[j], side, wraparound), j);
    rank(cand);
    for (std::size_t i = 0; i < std::min(k, cand.size()); ++i) c.neighbors[l].push_back(cand[i].second);
  }
  return c;
}

CommGraph CommGraph::stack(const std::vector<CommGraph>& parts) {
  if (parts.empty()) throw std::invalid_argument("CommGraph::stack: nothing to stack");
  const std::size_t group = parts[0].group;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.group != group) throw std::invalid_argument("CommGraph::stack: group sizes differ");
    total += p.nodes;
  }
  CommGraph c = empty(total, group);
  std::size_t off = 0;
  for (const auto& p : parts) {
    for (std::size_t l = 0; l < p.nodes; ++l) {
      for (std::size_t j : p.neighbors[l]) c.neighbors[off + l].push_back(off + j);
      for (std::size_t j = 0; j < group; ++j) c.scores(off + l, j) = p.scores(l, j);
    }
    off += p.nodes;
  }
  return c;
}

CommGraph CommGraph::block(std::size_t b) const {
  CommGraph c = empty(group, group);
  const std::size_t off = b * group;
  for (std::size_t l = 0; l < group; ++l) {
    for (std::size_t j : neighbors.at(off + l)) c.neighbors[l].push_back(j - off);
    for (std::size_t j = 0; j < group; ++j) c.scores(l, j) = scores(off + l, j);
  }
  return c;
}

std::size_t CommGraph::edges() const {
  std::size_t e = 0;
  for (const auto& n : neighbors) e += n.size();
  return e;
}

CommGraph threshold_scores(const RealTensor& scores, std::size_t group, double threshold, std::size_t top_k) {
  CommGraph c = CommGraph::empty(scores.rows(), group);
  c.scores = scores;
  for (std::size_t l = 0; l < scores.rows(); ++l) {
    const std::size_t base = (l / group) * group;
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t j = 0; j < group; ++j)
      if (base + j != l && scores(l, j) > threshold) cand.emplace_back(scores(l, j), base + j);
    rank(cand);
    for (std::size_t i = 0; i < std::min(top_k, cand.size()); ++i) c.neighbors[l].push_back(cand[i].second);
  }
  return c;
}

CommNet CommNet::create(ParamStore& store, const std::string& name, std::size_t in_width, const GnnConfig& cfg,
                        numeric::RngStream& rng) {
  if (cfg.layer_widths.empty()) throw std::invalid_argument("CommNet: need at least one layer");
  CommNet n;
  n.name_ = name;
  n.in_ = in_width;
  n.cfg_ = cfg;
  const std::size_t e = cfg.encoder_width;
  n.encoder_ = numeric::Linear::create(store, name + ".enc", in_width, e, rng);
  std::size_t prev = e;
  for (std::size_t j = 0; j < cfg.layer_widths.size(); ++j) {
    const std::size_t w = cfg.layer_widths[j];
    if (cfg.heads == 0 || w % cfg.heads != 0) throw std::invalid_argument("CommNet: width not divisible by heads");
    const std::string tag = std::to_string(j + 1);
    n.agg_.push_back(numeric::Linear::create(store, name + ".agg" + tag, e + 2 * prev, w, rng));
    n.comb_.push_back(numeric::Linear::create(store, name + ".comb" + tag, e + prev + w, w, rng));
    prev = w;
  }
  n.msg_ = numeric::Linear::create(store, name + ".msg", prev, in_width, rng);
  n.key_ = numeric::Linear::create(store, name + ".key", prev, cfg.key_width, rng, false);
  n.fuse_ = numeric::Linear::create(store, name + ".fuse", in_width, in_width, rng, false, 0.1);
  return n;
}

Var CommNet::encode_observation(Graph& g, ParamStore& store, Var x) const {
  return numeric::relu(encoder_(g, store, x));
}

Var CommNet::aggregate(Graph& g, ParamStore& store, std::size_t layer, Var enc, Var prev,
                       const CommGraph& graph) const {
  const std::size_t n = prev.rows(), w = cfg_.layer_widths.at(layer);
  if (graph.nodes != n) throw std::invalid_argument("aggregate: graph size mismatch");
  std::vector<std::size_t> dst, src, offsets{0};
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t j : graph.neighbors[l]) {
      dst.push_back(l);
      src.push_back(j);
    }
    offsets.push_back(dst.size());
  }
  if (dst.empty()) return g.constant(RealTensor(n, w));
  Var in = numeric::concat_cols(
      {numeric::gather_rows(enc, dst), numeric::gather_rows(prev, dst), numeric::gather_rows(prev, src)});
  Var msg = numeric::relu(agg_[layer](g, store, in));
  // With elementwise pooling each head reduces its own column block, so the
  // heads split the message width rather than changing the arithmetic.
  return cfg_.pool == PoolKind::kMax ? numeric::segment_max(msg, offsets) : numeric::segment_sum(msg, offsets);
}

Var CommNet::combine(Graph& g, ParamStore& store, std::size_t layer, Var enc, Var prev, Var agg) const {
  return numeric::relu(comb_.at(layer)(g, store, numeric::concat_cols({enc, prev, agg})));
}

std::tuple<Var, Var, CommGraph> CommNet::encode_messages(Graph& g, ParamStore& store, Var last,
                                                         std::size_t group) const {
  Var m = msg_(g, store, last);
  Var k = key_(g, store, last);
  Var s = numeric::sigmoid(numeric::scale(numeric::group_gram(k, group), 1.0 / std::sqrt(double(cfg_.key_width))));
  CommGraph next = threshold_scores(s.value(), group, cfg_.threshold, cfg_.top_k);
  return {m, s, std::move(next)};
}

Var CommNet::update_observation(Graph& g, ParamStore& store, Var x, Var messages, Var scores,
                                const CommGraph& next) const {
  const std::size_t n = x.rows();
  std::vector<std::size_t> src, offsets{0}, flat;
  RealTensor inv_count(n, 1);
  for (std::size_t l = 0; l < n; ++l) {
    const std::size_t base = (l / next.group) * next.group;
    for (std::size_t j : next.neighbors[l]) {
      src.push_back(j);
      flat.push_back(l * next.group + (j - base));
    }
    offsets.push_back(src.size());
    inv_count(l, 0) = next.neighbors[l].empty() ? 0.0 : 1.0 / static_cast<double>(next.neighbors[l].size());
  }
  if (src.empty()) return x;
  Var soft = numeric::gather_rows(numeric::reshape(scores, scores.rows() * scores.cols(), 1), flat);
  Var gate = cfg_.straight_through ? numeric::straight_through(g.constant(RealTensor(src.size(), 1, 1.0)), soft) : soft;
  Var recv = numeric::segment_sum(numeric::mul(numeric::gather_rows(messages, src), gate), offsets);
  recv = numeric::mul(recv, g.constant(inv_count));
  return numeric::add(x, fuse_(g, store, recv));
}

GnnOutput CommNet::forward(Graph& g, ParamStore& store, Var x, const CommGraph& graph) const {
  if (x.cols() != in_) throw std::invalid_argument("CommNet: input width mismatch");
  GnnOutput out;
  Var enc = encode_observation(g, store, x);
  out.states.push_back(enc);
  Var s = enc;
  for (std::size_t j = 0; j < agg_.size(); ++j) {
    Var a = aggregate(g, store, j, enc, s, graph);
    s = combine(g, store, j, enc, s, a);
    out.states.push_back(s);
  }
  auto [m, sc, next] = encode_messages(g, store, s, graph.group);
  out.messages = m;
  out.scores = sc;
  out.fused = update_observation(g, store, x, m, sc, next);
  out.next = std::move(next);
  return out;
}

void write_adjacency_csv(std::ostream& os, std::size_t slot, const CommGraph& graph, bool header) {
  if (header) os << "slot,i,j,score\n";
  for (std::size_t l = 0; l < graph.nodes; ++l) {
    const std::size_t base = (l / graph.group) * graph.group;
    for (std::size_t j : graph.neighbors[l]) os << slot << ',' << l << ',' << j << ',' << graph.scores(l, j - base) << '\n';
  }
}

}  // namespace cfmimo::gnn
