// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/policy/dhpn.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "cfmimo/env/observation.hpp"

namespace cfmimo::policy {

using numeric::Activation;
using numeric::Mlp;

std::uint64_t row_hash(std::span<const double> row) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (double v : row) h = numeric::mix64(h ^ std::bit_cast<std::uint64_t>(v));
  return h;
}

std::unique_ptr<Dhpn> Dhpn::create(ParamStore& store, const std::string& name, const DhpnConfig& cfg, std::size_t K,
                                   std::size_t N, numeric::RngStream& rng) {
  std::unique_ptr<Dhpn> p(new Dhpn(K, N));
  Dhpn& d = *p;
  d.name_ = name;
  d.cfg_ = cfg;
  d.f_ue_ = env::Observation::ue_features(N);
  const std::size_t fa = env::Observation::kAntennaFeatures, dr = cfg.d_r, hh = cfg.hyper_hidden;
  const std::size_t P = cfg.pool_size;
  const bool hyper = cfg.mode == WeightMode::kHypernet;
  if (!hyper && P == 0) throw std::invalid_argument("Dhpn: finite-pool mode needs a positive pool size");

  if (hyper) {
    d.in_hyper_ = Mlp::create(store, name + ".in.hyper", {d.f_ue_, hh, d.f_ue_ * dr}, rng, Activation::kRelu);
  } else {
    d.in_sel_ = Mlp::create(store, name + ".in.sel", {d.f_ue_, hh, P}, rng, Activation::kRelu);
    d.in_pool_ = store.add_xavier(name + ".in.pool", d.f_ue_, P * dr, rng);
  }
  if (cfg.use_gnn) d.gnn_ = gnn::CommNet::create(store, name + ".gnn", dr, cfg.gnn, rng);
  if (cfg.recurrent)
    d.rnn_ = numeric::ReluRnnCell::create(store, name + ".rnn", dr, dr, rng);
  else
    d.project_ = numeric::Linear::create(store, name + ".proj", dr, dr, rng);

  std::vector<std::size_t> w{dr};
  w.insert(w.end(), cfg.head_widths.begin(), cfg.head_widths.end());
  w.push_back(2);
  d.pi_head_ = Mlp::create(store, name + ".pi", w, rng, Activation::kRelu);

  if (!cfg.joint) {
    d.sp_inv_ = numeric::Linear::create(store, name + ".sp.inv", dr, K, rng);
    d.mp_inv_ = numeric::Linear::create(store, name + ".mp.inv", dr, N, rng);
  } else if (hyper) {
    d.sp_hyper_ = Mlp::create(store, name + ".sp.hyper", {d.f_ue_, hh, dr}, rng, Activation::kRelu);
    d.mp_hyper_ = Mlp::create(store, name + ".mp.hyper", {fa, hh, dr}, rng, Activation::kRelu);
  } else {
    d.sp_sel_ = Mlp::create(store, name + ".sp.sel", {d.f_ue_, hh, P}, rng, Activation::kRelu);
    d.mp_sel_ = Mlp::create(store, name + ".mp.sel", {fa, hh, P}, rng, Activation::kRelu);
    d.sp_pool_ = store.add_xavier(name + ".sp.pool", dr, P, rng);
    d.mp_pool_ = store.add_xavier(name + ".mp.pool", dr, P, rng);
  }
  return p;
}

Var Dhpn::select(Graph& g, ParamStore& store, const Mlp& selector, Var rows, std::uint64_t domain,
                 const ForwardOptions& opts) const {
  Var logits = selector(g, store, rows);
  const RealTensor& lv = logits.value();
  const std::size_t n = lv.rows(), P = lv.cols();
  if (!opts.train) {
    // Hard selection; the lowest index wins ties.
    RealTensor onehot(n, P);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      for (std::size_t p = 1; p < P; ++p)
        if (lv(i, p) > lv(i, best)) best = p;
      onehot(i, best) = 1.0;
    }
    return g.constant(std::move(onehot));
  }
  RealTensor noise(n, P);
  const RealTensor& rv = rows.value();
  for (std::size_t i = 0; i < n; ++i) {
    numeric::RngStream r(opts.noise_seed, row_hash(rv.row_span(i)) ^ domain);
    for (std::size_t p = 0; p < P; ++p) noise(i, p) = r.gumbel();
  }
  Var z = numeric::scale(numeric::add(logits, g.constant(std::move(noise))), 1.0 / opts.temperature);
  return numeric::softmax_rows(z);
}

Var Dhpn::input_pi(Graph& g, ParamStore& store, Var ue_rows, const ForwardOptions& opts) const {
  const std::size_t dr = cfg_.d_r;
  Var contrib;
  if (cfg_.mode == WeightMode::kHypernet) {
    // Generated weights get fan-in scaling; unscaled, the products of two nets
    // start near saturation and grow polynomially once training moves them.
    Var w = numeric::scale(in_hyper_(g, store, ue_rows), 1.0 / std::sqrt(static_cast<double>(f_ue_)));
    contrib = numeric::row_vecmat(ue_rows, w, dr);
  } else {
    Var probs = select(g, store, in_sel_, ue_rows, 0x1ULL, opts);
    Var y = numeric::matmul(ue_rows, g.param(store, in_pool_));
    contrib = numeric::row_vecmat(probs, y, dr);
  }
  return numeric::group_sum(contrib, K_);
}

Var Dhpn::backbone(Graph& g, ParamStore& store, Var a, const RealTensor& hidden, const gnn::CommGraph& graph,
                   gnn::CommGraph* next) const {
  Var x = a;
  if (gnn_) {
    auto out = gnn_->forward(g, store, a, graph);
    x = out.fused;
    if (next) *next = std::move(out.next);
  }
  if (!cfg_.recurrent) return numeric::relu(project_(g, store, x));
  if (hidden.rows() != a.rows() || hidden.cols() != cfg_.d_r) throw std::invalid_argument("Dhpn: hidden state shape");
  return rnn_(g, store, x, g.constant(hidden));
}

Var Dhpn::output_pi(Graph& g, ParamStore& store, Var b) const { return pi_head_(g, store, b); }

Var Dhpn::output_pe(Graph& g, ParamStore& store, Var entity_rows, Var b, bool split_head,
                    const ForwardOptions& opts) const {
  const std::size_t E = split_head ? K_ : N_;
  if (!cfg_.joint) return split_head ? sp_inv_(g, store, b) : mp_inv_(g, store, b);
  Var brep = numeric::repeat_rows(b, E);
  Var logit;
  if (cfg_.mode == WeightMode::kHypernet) {
    const Mlp& h = split_head ? sp_hyper_ : mp_hyper_;
    logit = numeric::scale(numeric::rowwise_dot(brep, h(g, store, entity_rows)),
                           1.0 / std::sqrt(static_cast<double>(cfg_.d_r)));
  } else {
    Var probs = select(g, store, split_head ? sp_sel_ : mp_sel_, entity_rows, split_head ? 0x2ULL : 0x3ULL, opts);
    Var z = numeric::matmul(brep, g.param(store, split_head ? sp_pool_ : mp_pool_));
    logit = numeric::rowwise_dot(probs, z);
  }
  return numeric::reshape(logit, b.rows(), E);
}

PolicyOutput Dhpn::forward(Graph& g, ParamStore& store, const EntityBatch& batch, const RealTensor& hidden,
                           const gnn::CommGraph& graph, const ForwardOptions& opts) const {
  if (batch.K != K_ || batch.N != N_) throw std::invalid_argument("Dhpn: batch entity counts do not match");
  PolicyOutput out;
  Var ue = g.constant(batch.ue_rows);
  Var ant = g.constant(batch.antenna_rows);
  out.embedding = input_pi(g, store, ue, opts);
  Var b = backbone(g, store, out.embedding, hidden, graph, &out.next_graph);
  if (cfg_.recurrent) out.hidden = b;
  out.mobility = output_pi(g, store, b);
  out.split = output_pe(g, store, ue, b, true, opts);
  out.antenna = output_pe(g, store, ant, b, false, opts);
  out.mean = numeric::concat_cols({out.mobility, out.split, out.antenna});
  return out;
}

}  // namespace cfmimo::policy
