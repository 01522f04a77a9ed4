// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/policy/actor.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cfmimo::policy {

EntityBatch EntityBatch::from(const std::vector<std::vector<env::Observation>>& samples) {
  if (samples.empty() || samples[0].empty()) throw std::invalid_argument("EntityBatch: empty input");
  EntityBatch b;
  b.samples = samples.size();
  b.agents = samples[0].size();
  const auto& o0 = samples[0][0];
  b.K = o0.ue_rows.rows();
  b.N = o0.antenna_rows.rows();
  const std::size_t fu = o0.ue_rows.cols(), fa = o0.antenna_rows.cols(), f = o0.flat_size();
  b.ue_rows = RealTensor(b.rows() * b.K, fu);
  b.antenna_rows = RealTensor(b.rows() * b.N, fa);
  b.flat = RealTensor(b.rows(), f);
  std::size_t r = 0;
  for (const auto& s : samples) {
    if (s.size() != b.agents) throw std::invalid_argument("EntityBatch: agent counts differ");
    for (const auto& o : s) {
      if (o.ue_rows.rows() != b.K || o.antenna_rows.rows() != b.N || o.ue_rows.cols() != fu)
        throw std::invalid_argument("EntityBatch: observation shapes differ");
      std::copy(o.ue_rows.values().begin(), o.ue_rows.values().end(), b.ue_rows.data() + r * b.K * fu);
      std::copy(o.antenna_rows.values().begin(), o.antenna_rows.values().end(), b.antenna_rows.data() + r * b.N * fa);
      const auto fl = o.flat();
      std::copy(fl.begin(), fl.end(), b.flat.data() + r * f);
      ++r;
    }
  }
  return b;
}

env::ActionVector to_env_action(std::span<const double> pre, std::size_t K, std::size_t N) {
  if (pre.size() != 2 + K + N) throw std::invalid_argument("to_env_action: wrong action width");
  env::ActionVector a;
  a.mobility = {std::tanh(pre[0]), std::tanh(pre[1])};
  double mx = pre[2];
  for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, pre[2 + k]);
  a.power_split.resize(K);
  double s = 0.0;
  for (std::size_t k = 0; k < K; ++k) s += (a.power_split[k] = std::exp(pre[2 + k] - mx));
  for (double& v : a.power_split) v /= s;
  a.antenna_weights.resize(N);
  double u = 0.0;
  for (std::size_t n = 0; n < N; ++n) u += (a.antenna_weights[n] = 1.0 / (1.0 + std::exp(-pre[2 + K + n])));
  a.ap_power = u / static_cast<double>(N);
  return a;
}

RealTensor gaussian_sample(const RealTensor& mean, double sigma, numeric::RngStream& rng) {
  RealTensor x = mean;
  for (auto& v : x.values()) v += sigma * rng.normal();
  return x;
}

Var gaussian_log_prob(Var mean, Var x, double sigma) {
  const double d = static_cast<double>(mean.cols());
  const double c = -d * (std::log(sigma) + 0.5 * std::log(2.0 * std::numbers::pi));
  Var q = numeric::sum_cols(numeric::square(numeric::sub(x, mean)));
  return numeric::add_scalar(numeric::scale(q, -0.5 / (sigma * sigma)), c);
}

Var group_softmax(Var column, std::size_t group) {
  Var shifted = numeric::sub(column, numeric::repeat_rows(numeric::group_max(column, group), group));
  Var e = numeric::exp(shifted);
  return numeric::div(e, numeric::repeat_rows(numeric::group_sum(e, group), group));
}

}  // namespace cfmimo::policy
