// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "cfmimo/numeric/gradcheck.hpp"
#include "cfmimo/policy/dhpn.hpp"
#include "cfmimo/policy/mlp_actor.hpp"
#include "doctest.h"

using namespace cfmimo;
using namespace cfmimo::policy;
using numeric::RngStream;

namespace {

env::Observation random_obs(std::size_t K, std::size_t N, RngStream& rng) {
  env::Observation o;
  o.ue_rows = RealTensor(K, env::Observation::ue_features(N));
  o.antenna_rows = RealTensor(N, 3);
  for (auto& v : o.ue_rows.values()) v = rng.normal();
  for (auto& v : o.antenna_rows.values()) v = rng.uniform();
  return o;
}

env::Observation permute_ues(const env::Observation& o, const std::vector<std::size_t>& perm) {
  env::Observation p = o;
  for (std::size_t k = 0; k < perm.size(); ++k)
    for (std::size_t f = 0; f < o.ue_rows.cols(); ++f) p.ue_rows(k, f) = o.ue_rows(perm[k], f);
  return p;
}

env::Observation permute_antennas(const env::Observation& o, const std::vector<std::size_t>& perm) {
  env::Observation p = o;
  for (std::size_t n = 0; n < perm.size(); ++n)
    for (std::size_t f = 0; f < 3; ++f) p.antenna_rows(n, f) = o.antenna_rows(perm[n], f);
  return p;
}

DhpnConfig small(WeightMode mode = WeightMode::kHypernet) {
  DhpnConfig c;
  c.mode = mode;
  c.d_r = 16;
  c.hyper_hidden = 12;
  c.head_widths = {12, 8};
  return c;
}

PolicyOutput run(const Actor& a, ParamStore& s, Graph& g, const std::vector<env::Observation>& obs,
                 const ForwardOptions& opts = {}, const RealTensor* hidden = nullptr) {
  auto b = EntityBatch::from(obs);
  RealTensor h = hidden ? *hidden : RealTensor(b.rows(), a.hidden_width());
  return a.forward(g, s, b, h, gnn::CommGraph::empty(b.rows(), b.agents), opts);
}

std::vector<std::size_t> shuffled(std::size_t n, RngStream& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

}  // namespace

TEST_CASE("input module: sum merge, zero observation, invariance in both weight modes") {
  for (auto mode : {WeightMode::kHypernet, WeightMode::kFinitePool}) {
    RngStream rng(1);
    ParamStore s;
    auto d = Dhpn::create(s, "p", small(mode), 2, 2, rng);
    Graph g(false);
    auto o = random_obs(2, 2, rng);
    for (std::size_t f = 0; f < o.ue_rows.cols(); ++f) o.ue_rows(1, f) = o.ue_rows(0, f);
    Var both = d->input_pi(g, s, g.constant(o.ue_rows), {});
    // Single-row contribution, computed from the same weights on a one-row batch duplicated by hand.
    RealTensor one(2, o.ue_rows.cols());
    for (std::size_t f = 0; f < one.cols(); ++f) one(0, f) = o.ue_rows(0, f);
    const RealTensor half = d->input_pi(g, s, g.constant(one), {}).value();
    const RealTensor full = both.value();
    for (std::size_t c = 0; c < 16; ++c) CHECK(full(0, c) == doctest::Approx(2.0 * half(0, c)).epsilon(1e-14));
    CHECK(d->input_pi(g, s, g.constant(RealTensor(2, one.cols())), {}).value() == RealTensor(1, 16));

    for (int t = 0; t < 50; ++t) {
      auto x = random_obs(2, 2, rng);
      auto y = permute_ues(x, {1, 0});
      for (bool train : {false, true}) {
        ForwardOptions fo{train, 77, 0.7};
        const RealTensor a = d->input_pi(g, s, g.constant(x.ue_rows), fo).value();
        const RealTensor b = d->input_pi(g, s, g.constant(y.ue_rows), fo).value();
        CHECK(a == b);
      }
    }
  }
}

TEST_CASE("backbone: zero case, purity and memory") {
  RngStream rng(2);
  ParamStore s;
  auto d = Dhpn::create(s, "p", small(), 3, 2, rng);
  ParamStore z = s;
  z.at("p.rnn.rec.w").value.fill(0.0);
  Graph g(false);
  const RealTensor zero(2, 16);
  CHECK(d->backbone(g, z, g.constant(zero), zero, gnn::CommGraph::empty(2, 2), nullptr).value() == zero);

  RealTensor a1(2, 16), a2(2, 16), hidden(2, 16);
  for (auto& v : a1.values()) v = rng.normal();
  for (auto& v : a2.values()) v = rng.normal();
  auto graph = gnn::CommGraph::empty(2, 2);
  const RealTensor b1 = d->backbone(g, s, g.constant(a1), hidden, graph, nullptr).value();
  CHECK(d->backbone(g, s, g.constant(a1), hidden, graph, nullptr).value() == b1);
  const RealTensor b2 = d->backbone(g, s, g.constant(a2), hidden, graph, nullptr).value();
  // Same slot-2 input, different slot-1 history.
  const RealTensor c1 = d->backbone(g, s, g.constant(a1), b1, graph, nullptr).value();
  const RealTensor c2 = d->backbone(g, s, g.constant(a1), b2, graph, nullptr).value();
  CHECK_FALSE(c1 == c2);
}

TEST_CASE("mobility head: range, zero parameters and invariance") {
  RngStream rng(3);
  ParamStore s;
  auto d = Dhpn::create(s, "p", small(), 4, 3, rng);
  Graph g(false);
  for (int t = 0; t < 20; ++t) {
    auto o = random_obs(4, 3, rng);
    const auto out = run(*d, s, g, {o});
    const auto a = to_env_action(out.mean.value().row_span(0), 4, 3);
    CHECK(std::abs(a.mobility[0]) <= 1.0);
    CHECK(std::abs(a.mobility[1]) <= 1.0);
    const auto outp = run(*d, s, g, {permute_ues(o, shuffled(4, rng))});
    CHECK(outp.mobility.value() == out.mobility.value());
  }
  ParamStore z = s;
  for (auto& p : z) p.value.fill(0.0);
  const auto out = run(*d, z, g, {random_obs(4, 3, rng)});
  CHECK(out.mobility.value() == RealTensor(1, 2));
  CHECK(std::tanh(out.mobility.value()[0]) == 0.0);
}

TEST_CASE("per-entity heads: swaps, identical rows and the single-UE split") {
  RngStream rng(4);
  for (auto mode : {WeightMode::kHypernet, WeightMode::kFinitePool}) {
    ParamStore s;
    auto d = Dhpn::create(s, "p", small(mode), 3, 4, rng);
    Graph g(false);
    auto o = random_obs(3, 4, rng);
    const auto a = run(*d, s, g, {o});
    const auto b = run(*d, s, g, {permute_ues(o, {1, 0, 2})});
    CHECK(b.split.value()(0, 0) == a.split.value()(0, 1));
    CHECK(b.split.value()(0, 1) == a.split.value()(0, 0));
    CHECK(b.split.value()(0, 2) == a.split.value()(0, 2));
    const auto c = run(*d, s, g, {permute_antennas(o, {3, 2, 1, 0})});
    for (std::size_t n = 0; n < 4; ++n) CHECK(c.antenna.value()(0, n) == a.antenna.value()(0, 3 - n));
    CHECK(c.mobility.value() == a.mobility.value());

    auto same = o;
    for (std::size_t f = 0; f < same.ue_rows.cols(); ++f) same.ue_rows(2, f) = same.ue_rows(0, f);
    const auto e = run(*d, s, g, {same});
    CHECK(e.split.value()(0, 0) == e.split.value()(0, 2));
  }
  ParamStore s1;
  auto d1 = Dhpn::create(s1, "p", small(), 1, 2, rng);
  Graph g(false);
  const auto out = run(*d1, s1, g, {random_obs(1, 2, rng)});
  CHECK(to_env_action(out.mean.value().row_span(0), 1, 2).power_split == std::vector<double>{1.0});
}

TEST_CASE("group softmax permutes exactly") {
  RngStream rng(5);
  Graph g(false);
  RealTensor x(6, 1);
  for (auto& v : x.values()) v = rng.normal();
  RealTensor y = x;
  std::swap(y[0], y[2]);
  std::swap(y[3], y[5]);
  const RealTensor a = group_softmax(g.constant(x), 3).value();
  const RealTensor b = group_softmax(g.constant(y), 3).value();
  CHECK(a[0] == b[2]);
  CHECK(a[1] == b[1]);
  CHECK(a[5] == b[3]);
  CHECK(a[0] + a[1] + a[2] == doctest::Approx(1.0));
}

TEST_CASE("joint action: dimensions, determinism and permutation structure") {
  RngStream rng(6);
  ParamStore s;
  auto d = Dhpn::create(s, "p", small(), 3, 2, rng);
  Graph g(false);
  std::vector<env::Observation> agents = {random_obs(3, 2, rng), random_obs(3, 2, rng)};
  const auto out = run(*d, s, g, agents);
  CHECK(out.mean.cols() == 2 + 3 + 2);
  CHECK(out.mean.rows() == 2);
  RngStream n1(9), n2(9);
  CHECK(gaussian_sample(out.mean.value(), 0.1, n1) == gaussian_sample(out.mean.value(), 0.1, n2));
  const auto p = run(*d, s, g, {permute_ues(agents[0], {2, 0, 1}), agents[1]});
  for (std::size_t c = 0; c < 2; ++c) CHECK(p.mean.value()(0, c) == out.mean.value()(0, c));
  CHECK(p.mean.value()(0, 2) == out.mean.value()(0, 4));
  CHECK(p.mean.value()(0, 3) == out.mean.value()(0, 2));
  CHECK(p.mean.value()(0, 4) == out.mean.value()(0, 3));
}

TEST_CASE("heads fed only B_t are invariant, not equivariant") {
  RngStream rng(7);
  ParamStore s;
  DhpnConfig c = small();
  c.joint = false;
  auto d = Dhpn::create(s, "p", c, 3, 2, rng);
  Graph g(false);
  auto o = random_obs(3, 2, rng);
  const auto a = run(*d, s, g, {o});
  const auto b = run(*d, s, g, {permute_ues(o, {1, 0, 2})});
  CHECK(a.split.value() == b.split.value());
  CHECK(a.split.value()(0, 0) != a.split.value()(0, 1));  // so a swap would have been visible
}

TEST_CASE("gradients of every DHPN variant match finite differences") {
  struct Variant {
    const char* name;
    DhpnConfig cfg;
  };
  std::vector<Variant> variants;
  variants.push_back({"hypernet", small()});
  variants.push_back({"pool", small(WeightMode::kFinitePool)});
  DhpnConfig gnn = small();
  gnn.use_gnn = true;
  gnn.gnn.encoder_width = 8;
  gnn.gnn.layer_widths = {8, 4};
  gnn.gnn.key_width = 4;
  gnn.gnn.threshold = 0.2;
  gnn.gnn.straight_through = false;
  variants.push_back({"gnn", gnn});
  DhpnConfig inv = small();
  inv.joint = false;
  variants.push_back({"pi-only", inv});
  for (const auto& v : variants) {
    INFO(std::string(v.name));
    RngStream rng(8);
    ParamStore s;
    auto d = Dhpn::create(s, "p", v.cfg, 3, 2, rng);
    std::vector<env::Observation> agents = {random_obs(3, 2, rng), random_obs(3, 2, rng), random_obs(3, 2, rng)};
    auto batch = EntityBatch::from(agents);
    RealTensor hidden(3, 16);
    for (auto& x : hidden.values()) x = rng.uniform();
    auto graph = gnn::CommGraph::empty(3, 3);
    graph.neighbors = {{1, 2}, {0}, {1}};
    RealTensor probe(3, 7);
    for (auto& x : probe.values()) x = rng.normal();
    ForwardOptions fo{true, 5, 0.8};
    auto loss = [&](Graph& g, ParamStore& st) {
      auto out = d->forward(g, st, batch, hidden, graph, fo);
      return numeric::sum(numeric::mul(numeric::tanh(out.mean), g.constant(probe)));
    };
    auto rep = numeric::check_gradients(s, loss, 60, rng);
    CHECK(rep.entries.size() >= 20);
    CHECK(rep.max_rel_error < 1e-4);
    CHECK(rep.dead_params.empty());
  }
}

TEST_CASE("orderings seen by the invariant path collapse to one") {
  RngStream rng(9);
  for (std::size_t L = 2; L <= 5; ++L) {
    ParamStore s, sm;
    auto d = Dhpn::create(s, "p", small(), L, 2, rng);
    auto m = MlpActor::create(sm, "m", L, 2, rng);
    auto o = random_obs(L, 2, rng);
    std::vector<std::size_t> perm(L);
    std::iota(perm.begin(), perm.end(), 0);
    std::set<std::vector<double>> pi, mlp;
    std::size_t count = 0;
    do {
      Graph g(false);
      auto po = permute_ues(o, perm);
      pi.insert(run(*d, s, g, {po}).mobility.value().values());
      mlp.insert(run(*m, sm, g, {po}).mobility.value().values());
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(pi.size() == 1);
    CHECK(mlp.size() == count);
  }
}

TEST_CASE("log-density and action mapping") {
  Graph g;
  RealTensor mu(1, 3, 0.2), x(1, 3);
  x[0] = 0.5;
  x[1] = -0.1;
  x[2] = 0.2;
  Var lp = gaussian_log_prob(g.constant(mu), g.constant(x), 0.1);
  const double expect = -0.5 * (0.09 + 0.09) / 0.01 - 3.0 * std::log(0.1 * std::sqrt(2.0 * M_PI));
  CHECK(lp.item() == doctest::Approx(expect).epsilon(1e-12));
  std::vector<double> pre = {0.0, 100.0, 0.0, 0.0, 50.0, -50.0};
  auto a = to_env_action(pre, 2, 2);
  CHECK(a.mobility[1] == doctest::Approx(1.0));
  CHECK(a.power_split[0] == doctest::Approx(0.5));
  CHECK(a.ap_power == doctest::Approx(0.5));
}
