// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/env/baselines.hpp"

#include <cmath>

namespace cfmimo::env {

std::vector<double> fractional_split(const std::vector<double>& beta_row, double nu) {
  std::vector<double> w(beta_row.size());
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = beta_row[i] > 0.0 ? std::pow(beta_row[i], nu) : 0.0;
    s += w[i];
  }
  for (double& v : w) v = s > 0.0 && std::isfinite(s) ? v / s : 1.0 / static_cast<double>(w.size());
  return w;
}

std::vector<ActionVector> fractional_power_baseline(const EnvState& state, double nu) {
  const auto& cov = state.cov;
  std::vector<ActionVector> out;
  for (std::size_t m = 0; m < cov.M; ++m) {
    ActionVector a = ActionVector::idle(cov.K, cov.N);
    a.ap_power = 1.0;
    std::vector<double> row(cov.beta.begin() + static_cast<std::ptrdiff_t>(m * cov.K),
                            cov.beta.begin() + static_cast<std::ptrdiff_t>((m + 1) * cov.K));
    a.power_split = fractional_split(row, nu);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<ActionVector> random_actions(std::size_t M, std::size_t K, std::size_t N, numeric::RngStream& rng) {
  std::vector<ActionVector> out(M);
  for (auto& a : out) {
    a.mobility = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    a.power_split.resize(K);
    for (double& v : a.power_split) v = rng.uniform();
    a.antenna_weights.resize(N);
    double s = 0.0;
    for (double& v : a.antenna_weights) s += (v = rng.uniform());
    a.ap_power = s / static_cast<double>(N);
  }
  return out;
}

}  // namespace cfmimo::env
