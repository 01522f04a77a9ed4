// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/env/environment.hpp"

#include <cmath>
#include <utility>

#include "cfmimo/phy/se.hpp"

namespace cfmimo::env {

Environment::Environment(EnvConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  pilots_ = phy::assign_pilots(cfg_.K, cfg_.pilots());
  pilot_powers_.assign(cfg_.K, cfg_.pilot_power);
}

std::vector<Observation> Environment::reset(numeric::RngStream& rng) {
  phy::NetworkGeometry g;
  g.area_min = cfg_.area_min;
  g.area_max = cfg_.area_max;
  g.wraparound = cfg_.wraparound;
  auto draw = [&] { return phy::Point{rng.uniform(cfg_.area_min, cfg_.area_max), rng.uniform(cfg_.area_min, cfg_.area_max)}; };
  for (int attempt = 0; attempt < kMaxResetAttempts; ++attempt) {
    g.aps.clear();
    g.ues.clear();
    for (std::size_t m = 0; m < cfg_.M; ++m) g.aps.push_back(draw());
    for (std::size_t k = 0; k < cfg_.K; ++k) g.ues.push_back(draw());
    bool ok = true;
    for (std::size_t m = 0; m < cfg_.M && ok; ++m) ok = position_feasible(g.aps[m], g, cfg_.d_min);
    if (ok) return reset_with(std::move(g), rng);
  }
  throw ConfigError("could not place APs and UEs respecting d_min after " + std::to_string(kMaxResetAttempts) +
                    " attempts");
}

std::vector<Observation> Environment::reset_with(phy::NetworkGeometry geometry, numeric::RngStream& rng) {
  if (geometry.num_aps() != cfg_.M || geometry.num_ues() != cfg_.K)
    throw ConfigError("reset_with: geometry does not match M and K");
  geometry.area_min = cfg_.area_min;
  geometry.area_max = cfg_.area_max;
  geometry.wraparound = cfg_.wraparound;
  for (const auto& p : geometry.aps)
    if (!position_feasible(p, geometry, cfg_.d_min)) throw ConfigError("reset_with: infeasible AP position");
  for (const auto& u : geometry.ues)
    if (!geometry.in_bounds(u)) throw ConfigError("reset_with: UE outside the area");
  state_ = EnvState{};
  state_.geometry = std::move(geometry);
  refresh(rng);
  return observations();
}

void Environment::refresh(numeric::RngStream& rng) {
  state_.cov = phy::build_covariance(state_.geometry, cfg_.N, cfg_.pathloss, cfg_.covariance);
  state_.channels = phy::sample_channels(state_.cov, rng);
  state_.estimates = phy::mmse_estimate(state_.cov, pilots_, state_.channels, pilot_powers_, cfg_.noise_power, rng);
}

std::vector<Observation> Environment::observations() const {
  return build_observations(state_.geometry, state_.cov, state_.estimates);
}

SeOutcome Environment::score(const std::vector<PowerAllocation>& power, numeric::RngStream& rng,
                             std::size_t draws) const {
  phy::SeStatisticsOptions opts;
  opts.precoder = cfg_.precoder;
  opts.draws = draws;
  opts.threads = cfg_.mc_threads;
  const auto stats = phy::estimate_se_statistics(state_.cov, pilots_, pilot_powers_, cfg_.noise_power, opts, rng);
  std::vector<Eigen::VectorXd> mu(cfg_.K, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cfg_.M)));
  for (std::size_t m = 0; m < cfg_.M; ++m)
    for (std::size_t k = 0; k < cfg_.K; ++k) mu[k](static_cast<Eigen::Index>(m)) = std::sqrt(power.at(m).rho.at(k));
  const auto sinr = phy::compute_sinr(stats, mu, cfg_.noise_power);
  SeOutcome out;
  out.guard_triggered = sinr.guard_triggered;
  out.ue_se.resize(cfg_.K);
  for (std::size_t k = 0; k < cfg_.K; ++k) {
    out.ue_se[k] = phy::compute_se(sinr.sinr[k], cfg_.pilots(), cfg_.tau_c);
    out.sum_se += out.ue_se[k];
  }
  return out;
}

StepResult Environment::step(const std::vector<ActionVector>& actions, numeric::RngStream& rng, bool eval) {
  StepResult r;
  r.applied = project_actions(actions, state_.geometry, cfg_);
  std::vector<PowerAllocation> power;
  power.reserve(cfg_.M);
  for (std::size_t m = 0; m < cfg_.M; ++m) {
    state_.geometry.aps[m] = r.applied[m].position;
    power.push_back(r.applied[m].power);
  }
  r.constraints = check_constraints(state_.geometry, power, cfg_);
  refresh(rng);
  const auto se = score(power, rng, eval ? cfg_.mc_draws_eval : cfg_.mc_draws_train);
  r.ue_se = se.ue_se;
  r.sum_se = se.sum_se;
  r.sinr_guard = se.guard_triggered;
  r.r_ex.assign(cfg_.M, r.sum_se / static_cast<double>(cfg_.M));
  ++state_.slot;
  r.done = done();
  r.observations = observations();
  return r;
}

}  // namespace cfmimo::env
