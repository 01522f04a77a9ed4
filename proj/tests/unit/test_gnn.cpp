// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <numeric>
#include <sstream>

#include "cfmimo/gnn/comm.hpp"
#include "cfmimo/numeric/gradcheck.hpp"
#include "doctest.h"

using namespace cfmimo;
using namespace cfmimo::gnn;
using numeric::RngStream;

namespace {

RealTensor random_tensor(std::size_t r, std::size_t c, RngStream& rng, double s = 1.0) {
  RealTensor t(r, c);
  for (auto& v : t.values()) v = s * rng.normal();
  return t;
}

GnnConfig small_cfg() {
  GnnConfig c;
  c.encoder_width = 8;
  c.layer_widths = {8, 4};
  c.heads = 4;
  c.key_width = 4;
  return c;
}

CommGraph random_graph(std::size_t L, RngStream& rng) {
  CommGraph c = CommGraph::empty(L, L);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t j = 0; j < L; ++j)
      if (j != l && rng.uniform() < 0.4) c.neighbors[l].push_back(j);
  return c;
}

CommGraph path_graph(std::size_t L) {
  CommGraph c = CommGraph::empty(L, L);
  for (std::size_t l = 0; l < L; ++l) {
    if (l > 0) c.neighbors[l].push_back(l - 1);
    if (l + 1 < L) c.neighbors[l].push_back(l + 1);
  }
  return c;
}

}  // namespace

TEST_CASE("aggregate: empty, single and duplicated neighbourhoods") {
  RngStream rng(1);
  ParamStore store;
  auto net = CommNet::create(store, "g", 5, small_cfg(), rng);
  Graph g(false);
  Var x = g.constant(random_tensor(3, 5, rng));
  Var enc = net.encode_observation(g, store, x);

  CommGraph none = CommGraph::empty(3, 3);
  Var a0 = net.aggregate(g, store, 0, enc, enc, none);
  CHECK(a0.value() == RealTensor(3, 8));

  CommGraph one = CommGraph::empty(3, 3);
  one.neighbors[0] = {2};
  const RealTensor a1 = net.aggregate(g, store, 0, enc, enc, one).value();
  // Manual message for the single edge 0 <- 2.
  Var in = numeric::concat_cols({numeric::slice_rows(enc, 0, 1), numeric::slice_rows(enc, 0, 1),
                                 numeric::slice_rows(enc, 2, 1)});
  Var msg = numeric::relu(numeric::add(numeric::matmul(in, g.param(store, "g.agg1.w")), g.param(store, "g.agg1.b")));
  for (std::size_t c = 0; c < 8; ++c) CHECK(a1(0, c) == msg.value()(0, c));
  for (std::size_t c = 0; c < 8; ++c) CHECK(a1(1, c) == 0.0);

  CommGraph dup = one;
  dup.neighbors[0] = {2, 2};
  const RealTensor a2 = net.aggregate(g, store, 0, enc, enc, dup).value();
  CHECK(a2 == a1);
}

TEST_CASE("combine: zero weights and inputs give a zero state; node-local dataflow") {
  RngStream rng(2);
  ParamStore store;
  auto net = CommNet::create(store, "g", 5, small_cfg(), rng);
  ParamStore zero = store;
  for (auto& p : zero) p.value.fill(0.0);
  Graph g(false);
  Var z = g.constant(RealTensor(3, 8));
  CHECK(net.combine(g, zero, 0, z, z, z).value() == RealTensor(3, 8));

  // Changing node 2's input does not move node 0's combine output when the aggregate is held fixed.
  RealTensor xa = random_tensor(3, 5, rng), xb = xa;
  xb(2, 1) += 3.0;
  Var ea = net.encode_observation(g, store, g.constant(xa));
  Var eb = net.encode_observation(g, store, g.constant(xb));
  Var agg = g.constant(random_tensor(3, 8, rng));
  Var ca = net.combine(g, store, 0, ea, ea, agg), cb = net.combine(g, store, 0, eb, eb, agg);
  for (std::size_t c = 0; c < 8; ++c) CHECK(ca.value()(0, c) == cb.value()(0, c));
}

TEST_CASE("score thresholding: ties, top-k cap and range") {
  RealTensor s(4, 4, 0.8);
  auto c = threshold_scores(s, 4, 0.5, 2);
  CHECK(c.neighbors[0] == std::vector<std::size_t>{1, 2});
  CHECK(c.neighbors[3] == std::vector<std::size_t>{0, 1});
  auto none = threshold_scores(s, 4, 0.5, 0);
  CHECK(none.edges() == 0);
  RealTensor low(4, 4, 0.5);
  CHECK(threshold_scores(low, 4, 0.5, 3).edges() == 0);

  // Identical node states give identical scores and the lowest indices win.
  RngStream rng(3);
  ParamStore store;
  auto net = CommNet::create(store, "g", 5, small_cfg(), rng);
  Graph g(false);
  RealTensor same(5, 5);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t q = 0; q < 5; ++q) same(r, q) = 0.3 * double(q) - 0.2;
  auto out = net.forward(g, store, g.constant(same), CommGraph::empty(5, 5));
  const auto& sc = out.scores.value();
  for (double v : sc.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == sc[0]);
  }
  if (sc[0] > 0.5) CHECK(out.next.neighbors[4] == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("nearest-AP initial graph") {
  std::vector<phy::Point> aps = {{0, 0}, {10, 0}, {30, 0}, {990, 0}, {500, 500}};
  auto c = CommGraph::nearest(aps, 1000.0, true, 3);
  CHECK(c.neighbors[0] == std::vector<std::size_t>{1, 3, 2});
  for (std::size_t l = 0; l < 5; ++l) CHECK(std::find(c.neighbors[l].begin(), c.neighbors[l].end(), l) == c.neighbors[l].end());
  auto z = CommGraph::nearest(aps, 1000.0, true, 0);
  CHECK(z.edges() == 0);
}

TEST_CASE("node relabeling permutes every per-node output exactly") {
  RngStream rng(4);
  ParamStore store;
  auto net = CommNet::create(store, "g", 6, small_cfg(), rng);
  const std::size_t L = 6;
  for (int trial = 0; trial < 100; ++trial) {
    RealTensor x = random_tensor(L, 6, rng);
    CommGraph graph = random_graph(L, rng);
    std::vector<std::size_t> perm(L);  // new node i is old node perm[i]
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::size_t> inv(L);
    for (std::size_t i = 0; i < L; ++i) inv[perm[i]] = i;
    RealTensor xp(L, 6);
    CommGraph gp = CommGraph::empty(L, L);
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t c = 0; c < 6; ++c) xp(i, c) = x(perm[i], c);
      for (std::size_t j : graph.neighbors[perm[i]]) gp.neighbors[i].push_back(inv[j]);
    }
    Graph g(false);
    auto a = net.forward(g, store, g.constant(x), graph);
    auto b = net.forward(g, store, g.constant(xp), gp);
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t c = 0; c < 6; ++c) REQUIRE(b.fused.value()(i, c) == a.fused.value()(perm[i], c));
      for (std::size_t c = 0; c < 4; ++c) REQUIRE(b.states.back().value()(i, c) == a.states.back().value()(perm[i], c));
      for (std::size_t j = 0; j < L; ++j) REQUIRE(b.scores.value()(i, j) == a.scores.value()(perm[i], perm[j]));
      std::vector<std::size_t> mapped;
      for (std::size_t j : a.next.neighbors[perm[i]]) mapped.push_back(inv[j]);
      REQUIRE(b.next.neighbors[i] == mapped);
    }
  }
}

TEST_CASE("two layers only see two hops") {
  RngStream rng(5);
  ParamStore store;
  auto net = CommNet::create(store, "g", 4, small_cfg(), rng);
  const std::size_t L = 6;
  CommGraph path = path_graph(L);
  RealTensor x = random_tensor(L, 4, rng), y = x;
  for (std::size_t c = 0; c < 4; ++c) y(5, c) += 2.0 + c;
  Graph g(false);
  auto a = net.forward(g, store, g.constant(x), path);
  auto b = net.forward(g, store, g.constant(y), path);
  const auto& sa = a.states.back().value();
  const auto& sb = b.states.back().value();
  for (std::size_t l = 0; l < 3; ++l)  // graph distance from node 5 is at least 3
    for (std::size_t c = 0; c < 4; ++c) CHECK(sa(l, c) == sb(l, c));
  double moved = 0.0;
  for (std::size_t c = 0; c < 4; ++c) moved += std::abs(sa(3, c) - sb(3, c)) + std::abs(sa(4, c) - sb(4, c));
  CHECK(moved > 0.0);
}

TEST_CASE("no edges and no messages reduce to the plain input") {
  RngStream rng(6);
  ParamStore store;
  GnnConfig cfg = small_cfg();
  cfg.top_k = 0;
  auto net = CommNet::create(store, "g", 5, cfg, rng);
  Graph g(false);
  RealTensor x = random_tensor(4, 5, rng);
  auto out = net.forward(g, store, g.constant(x), CommGraph::empty(4, 4));
  CHECK(out.fused.value() == x);
  CHECK(out.next.edges() == 0);

  // Zero fusion weights: identity even with live edges.
  GnnConfig live = small_cfg();
  live.threshold = 0.0;
  ParamStore s2;
  auto net2 = CommNet::create(s2, "g", 5, live, rng);
  s2.at("g.fuse.w").value.fill(0.0);
  auto o2 = net2.forward(g, s2, g.constant(x), random_graph(4, rng));
  CHECK(o2.next.edges() > 0);
  CHECK(o2.fused.value() == x);
}

TEST_CASE("downstream loss gradients reach every GNN parameter") {
  RngStream rng(7);
  ParamStore store;
  GnnConfig cfg = small_cfg();
  cfg.threshold = 0.3;
  cfg.straight_through = false;
  auto net = CommNet::create(store, "g", 5, cfg, rng);
  CommGraph graph = random_graph(5, rng);
  for (std::size_t l = 0; l < 5; ++l)
    if (graph.neighbors[l].empty()) graph.neighbors[l] = {(l + 1) % 5};
  RealTensor x = random_tensor(5, 5, rng);
  RealTensor probe = random_tensor(5, 5, rng);
  auto loss = [&](Graph& g, ParamStore& s) {
    auto out = net.forward(g, s, g.constant(x), graph);
    return numeric::sum(numeric::mul(numeric::tanh(out.fused), g.constant(probe)));
  };
  auto rep = numeric::check_gradients(store, loss, 40, rng);
  CHECK(rep.max_rel_error < 1e-4);
  CHECK(rep.dead_params.empty());
}

TEST_CASE("stacked graphs keep blocks independent") {
  RngStream rng(8);
  ParamStore store;
  auto net = CommNet::create(store, "g", 5, small_cfg(), rng);
  CommGraph a = random_graph(3, rng), b = random_graph(3, rng);
  RealTensor xa = random_tensor(3, 5, rng), xb = random_tensor(3, 5, rng);
  RealTensor xs(6, 5);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 5; ++c) {
      xs(r, c) = xa(r, c);
      xs(r + 3, c) = xb(r, c);
    }
  Graph g(false);
  auto sa = net.forward(g, store, g.constant(xa), a);
  auto sb = net.forward(g, store, g.constant(xb), b);
  auto st = net.forward(g, store, g.constant(xs), CommGraph::stack({a, b}));
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 5; ++c) {
      CHECK(st.fused.value()(r, c) == sa.fused.value()(r, c));
      CHECK(st.fused.value()(r + 3, c) == sb.fused.value()(r, c));
    }
  CHECK(st.next.block(1).neighbors == sb.next.neighbors);
  std::ostringstream os;
  write_adjacency_csv(os, 7, sa.next, true);
  CHECK(os.str().rfind("slot,i,j,score\n", 0) == 0);
}

TEST_CASE("straight-through gates pass messages at full weight and keep the soft gradient") {
  RngStream rng(9);
  GnnConfig hard = small_cfg(), soft = small_cfg();
  hard.threshold = soft.threshold = 0.2;
  soft.straight_through = false;
  ParamStore sh, ss;
  RngStream r1 = rng, r2 = rng;
  auto nh = CommNet::create(sh, "g", 5, hard, r1);
  auto ns = CommNet::create(ss, "g", 5, soft, r2);
  RealTensor x = random_tensor(4, 5, rng);
  CommGraph graph = random_graph(4, rng);
  Graph g;
  auto oh = nh.forward(g, sh, g.constant(x), graph);
  auto os = ns.forward(g, ss, g.constant(x), graph);
  REQUIRE(oh.next.edges() > 0);
  // Manual forward of the hard gate: plain neighbour mean of messages.
  const RealTensor m = oh.messages.value();
  RealTensor recv(4, 5);
  for (std::size_t l = 0; l < 4; ++l)
    for (std::size_t j : oh.next.neighbors[l])
      for (std::size_t c = 0; c < 5; ++c) recv(l, c) += m(j, c) / double(oh.next.neighbors[l].size());
  const RealTensor expect = numeric::matmul(recv, sh.at("g.fuse.w").value);
  for (std::size_t l = 0; l < 4; ++l)
    for (std::size_t c = 0; c < 5; ++c) CHECK(oh.fused.value()(l, c) == doctest::Approx(x(l, c) + expect(l, c)).epsilon(1e-12));
  // d fused / d scores: for the hard gate this is the soft gate's derivative evaluated at gate = 1.
  RealTensor probe = random_tensor(4, 5, rng);
  auto gh = numeric::grad(numeric::sum(numeric::mul(oh.fused, g.constant(probe))), {oh.scores})[0];
  auto gs = numeric::grad(numeric::sum(numeric::mul(os.fused, g.constant(probe))), {os.scores})[0];
  CHECK(gh == gs);
  CHECK(gh.squared_norm() > 0.0);
}
