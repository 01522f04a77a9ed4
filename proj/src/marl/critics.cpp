// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/marl/critics.hpp"

#include <stdexcept>

namespace cfmimo::marl {

Var squash_actions(Var pre, std::size_t K, std::size_t N) {
  if (pre.cols() != 2 + K + N) throw std::invalid_argument("squash_actions: wrong action width");
  return numeric::concat_cols({numeric::tanh(numeric::slice_cols(pre, 0, 2)),
                               numeric::softmax_rows(numeric::slice_cols(pre, 2, K)),
                               numeric::sigmoid(numeric::slice_cols(pre, 2 + K, N))});
}

namespace {

std::vector<std::size_t> widths(std::size_t in, const std::vector<std::size_t>& hidden) {
  std::vector<std::size_t> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(1);
  return w;
}

}  // namespace

MixedCritics MixedCritics::create(ParamStore& store, const std::string& name, std::size_t agents,
                                  std::size_t obs_width, std::size_t action_width,
                                  const std::vector<std::size_t>& hidden, numeric::RngStream& rng) {
  if (agents == 0) throw std::invalid_argument("MixedCritics: need at least one agent");
  MixedCritics c;
  for (std::size_t l = 0; l < agents; ++l)
    c.nets_.push_back(
        numeric::Mlp::create(store, name + ".q" + std::to_string(l), widths(obs_width + action_width, hidden), rng));
  return c;
}

Var MixedCritics::operator()(Graph& g, ParamStore& store, Var obs, Var actions) const {
  const std::size_t L = nets_.size();
  const std::size_t rows = obs.rows();
  if (rows % L != 0 || actions.rows() != rows) throw std::invalid_argument("MixedCritics: row count mismatch");
  const std::size_t B = rows / L;
  Var in = numeric::concat_cols({obs, actions});
  if (L == 1) return nets_[0](g, store, in);
  std::vector<Var> per_agent;
  std::vector<std::size_t> idx(B);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t b = 0; b < B; ++b) idx[b] = b * L + l;
    per_agent.push_back(nets_[l](g, store, numeric::gather_rows(in, idx)));
  }
  // Agent-major back to sample-major.
  std::vector<std::size_t> back(rows);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t l = 0; l < L; ++l) back[b * L + l] = l * B + b;
  return numeric::gather_rows(numeric::concat_rows(per_agent), back);
}

GlobalCritic GlobalCritic::create(ParamStore& store, const std::string& name, std::size_t agents,
                                  std::size_t obs_width, std::size_t action_width,
                                  const std::vector<std::size_t>& hidden, numeric::RngStream& rng) {
  GlobalCritic c;
  c.agents_ = agents;
  c.net_ = numeric::Mlp::create(store, name + ".q", widths(agents * (obs_width + action_width), hidden), rng);
  return c;
}

Var GlobalCritic::operator()(Graph& g, ParamStore& store, Var obs, Var actions) const {
  const std::size_t rows = obs.rows();
  if (rows % agents_ != 0 || actions.rows() != rows) throw std::invalid_argument("GlobalCritic: row count mismatch");
  Var in = numeric::concat_cols({obs, actions});
  return net_(g, store, numeric::reshape(in, rows / agents_, agents_ * in.cols()));
}

}  // namespace cfmimo::marl
