// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/marl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "cfmimo/env/baselines.hpp"
#include "cfmimo/policy/mlp_actor.hpp"

namespace cfmimo::marl {

namespace {

// Stream ids below are fixed so every random draw is a function of the seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kEnvStream = 1ULL << 32;
constexpr std::uint64_t kNoiseStream = 2ULL << 32;
constexpr std::uint64_t kReplayStream = 3;
constexpr std::uint64_t kEvalStream = 4ULL << 32;

std::unique_ptr<policy::Actor> make_actor(ParamStore& store, const TrainerConfig& cfg, std::size_t K, std::size_t N,
                                          numeric::RngStream& rng) {
  if (cfg.actor == ActorKind::kMlp)
    return policy::MlpActor::create(store, "mlp", K, N, rng, cfg.mlp_hidden, cfg.mlp_slope);
  return policy::Dhpn::create(store, "dhpn", cfg.dhpn, K, N, rng);
}

RealTensor to_tensor(const std::vector<double>& v) { return RealTensor(v.size(), 1, v); }

}  // namespace

Trainer::Trainer(env::EnvConfig env_cfg, TrainerConfig cfg)
    : env_(std::move(env_cfg)), cfg_(std::move(cfg)), replay_(cfg_.replay_capacity) {
  if (cfg_.batch_size == 0) throw env::ConfigError("batch_size must be positive");
  if (cfg_.update_every == 0) throw env::ConfigError("update_every must be positive");
  if (!(cfg_.sigma > 0.0)) throw env::ConfigError("sigma must be positive");
  const auto& ec = env_.config();
  numeric::RngStream rng(cfg_.seed, kInitStream);
  ParamStore store;
  auto actor = make_actor(store, cfg_, ec.K, ec.N, rng);
  const std::size_t obs_width = ec.K * env::Observation::ue_features(ec.N) + env::Observation::kAntennaFeatures * ec.N;
  learner_ = std::make_unique<Learner>(std::move(actor), std::move(store), ec.M, obs_width, cfg_.learner, rng);
}

gnn::CommGraph Trainer::initial_graph() const {
  const auto& ec = env_.config();
  if (!learner_->actor().uses_graph()) return gnn::CommGraph::empty(ec.M, ec.M);
  return gnn::CommGraph::nearest(env_.state().geometry.aps, ec.side(), ec.wraparound, cfg_.dhpn.gnn.top_k);
}

TrainingResult Trainer::train(const EpisodeCallback& on_episode) {
  const auto& ec = env_.config();
  const std::size_t L = ec.M;
  const std::size_t hw = learner_->actor().hidden_width();
  numeric::RngStream replay_rng(cfg_.seed, kReplayStream);
  TrainingResult result;
  double sigma = cfg_.sigma;
  double temperature = cfg_.temperature;
  double best = -INFINITY;
  std::size_t best_episode = 0;
  std::size_t slot_counter = 0;
  std::size_t update_counter = 0;
  if (!cfg_.output_dir.empty()) std::filesystem::create_directories(cfg_.output_dir);

  for (std::size_t ep = 0; ep < cfg_.max_episodes; ++ep) {
    numeric::RngStream env_rng(cfg_.seed, kEnvStream + ep);
    numeric::RngStream noise_rng(cfg_.seed, kNoiseStream + ep);
    auto obs = env_.reset(env_rng);
    RealTensor hidden(L, hw);
    gnn::CommGraph graph = initial_graph();
    EpisodeLog log;
    log.episode = ep;
    log.sigma = sigma;
    log.r_in.assign(L, 0.0);
    std::size_t slots = 0;
    UpdateStats acc;

    while (!env_.done()) {
      const auto batch = policy::EntityBatch::from(obs);
      policy::ForwardOptions opts{true, numeric::mix64(cfg_.seed ^ numeric::mix64(slot_counter)), temperature};
      Graph g(false);
      auto out = learner_->actor().forward(g, learner_->actor_store(), batch, hidden, graph, opts);
      const RealTensor mean = out.mean.value();
      const RealTensor x = policy::gaussian_sample(mean, sigma, noise_rng);
      RealTensor next_hidden = hw ? out.hidden.value() : RealTensor(L, 0);
      gnn::CommGraph next_graph = learner_->actor().uses_graph() ? out.next_graph : graph;
      std::vector<env::ActionVector> actions;
      for (std::size_t l = 0; l < L; ++l) actions.push_back(policy::to_env_action(x.row_span(l), ec.K, ec.N));
      auto step = env_.step(actions, env_rng);
      if (step.sinr_guard) ++log.sinr_guards;

      Transition t;
      t.obs = std::move(obs);
      t.next_obs = step.observations;
      t.hidden = hidden;
      t.next_hidden = next_hidden;
      t.graph = graph;
      t.next_graph = next_graph;
      t.actions = x;
      t.means = mean;
      t.r_ex = step.r_ex;
      const RealTensor r_in = learner_->intrinsic_rewards(batch, x);
      const RealTensor r_m = learner_->mixed_rewards(batch, x, to_tensor(step.r_ex));
      t.r_m = r_m.values();
      t.sum_se = step.sum_se;
      t.done = step.done;
      replay_.push(std::move(t));
      ++result.transitions;
      for (std::size_t l = 0; l < L; ++l) log.r_in[l] += r_in(l, 0);
      log.sum_se += step.sum_se;
      ++slots;

      obs = std::move(step.observations);
      hidden = std::move(next_hidden);
      graph = std::move(next_graph);
      ++slot_counter;

      if (ep >= cfg_.warmup_episodes && slot_counter % cfg_.update_every == 0 && replay_.size() >= cfg_.batch_size) {
        for (std::size_t u = 0; u < cfg_.updates_per_round; ++u) {
          const auto idx = replay_.sample_indices(cfg_.batch_size, replay_rng);
          const TrainBatch tb = make_batch(replay_, idx);
          policy::ForwardOptions uopts{true, numeric::mix64(~cfg_.seed ^ numeric::mix64(update_counter)),
                                       temperature};
          UpdateStats st;
          try {
            st = learner_->update(tb, sigma, uopts);
          } catch (const NumericFailure& e) {
            if (!cfg_.output_dir.empty()) {
              std::ofstream dump(std::filesystem::path(cfg_.output_dir) / "failure_state.json");
              nlohmann::json doc = learner_->checkpoint();
              doc["episode"] = ep;
              doc["update"] = update_counter;
              doc["error"] = e.what();
              dump << doc.dump();
            }
            throw NumericFailure(std::string(e.what()) + " at episode " + std::to_string(ep) + ", update " +
                                 std::to_string(update_counter));
          }
          ++update_counter;
          ++log.updates;
          acc.mixed_loss += st.mixed_loss;
          acc.extrinsic_loss += st.extrinsic_loss;
          acc.policy_loss += st.policy_loss;
          acc.meta_loss += st.meta_loss;
          acc.mixed_grad_norm += st.mixed_grad_norm;
          acc.extrinsic_grad_norm += st.extrinsic_grad_norm;
          acc.policy_grad_norm += st.policy_grad_norm;
          acc.meta_grad_norm += st.meta_grad_norm;
          if (st.meta_first_order) ++log.first_order_updates;
        }
      }
    }

    log.sum_se /= static_cast<double>(slots);
    for (double& v : log.r_in) v /= static_cast<double>(slots);
    if (log.updates) {
      const double n = static_cast<double>(log.updates);
      log.mixed_loss = acc.mixed_loss / n;
      log.extrinsic_loss = acc.extrinsic_loss / n;
      log.policy_loss = acc.policy_loss / n;
      log.meta_loss = acc.meta_loss / n;
      log.mixed_grad_norm = acc.mixed_grad_norm / n;
      log.extrinsic_grad_norm = acc.extrinsic_grad_norm / n;
      log.policy_grad_norm = acc.policy_grad_norm / n;
      log.meta_grad_norm = acc.meta_grad_norm / n;
    }
    result.episodes.push_back(log);
    if (on_episode) on_episode(log);

    sigma = std::max(cfg_.sigma_min, sigma * cfg_.sigma_decay);
    temperature = std::max(cfg_.temperature_min, temperature * cfg_.temperature_decay);

    if (!cfg_.output_dir.empty() && cfg_.checkpoint_every && (ep + 1) % cfg_.checkpoint_every == 0) {
      std::ofstream ck(std::filesystem::path(cfg_.output_dir) / ("checkpoint_ep" + std::to_string(ep + 1) + ".json"));
      ck << learner_->checkpoint().dump();
    }
    if (log.sum_se > best) {
      best = log.sum_se;
      best_episode = ep;
    } else if (cfg_.plateau_window && ep - best_episode >= cfg_.plateau_window) {
      result.stopped_on_plateau = true;
      break;
    }
  }
  return result;
}

EvaluationResult Trainer::evaluate(std::size_t episodes, std::uint64_t seed, bool eval_draws) {
  const auto& ec = env_.config();
  const std::size_t L = ec.M;
  const std::size_t hw = learner_->actor().hidden_width();
  EvaluationResult res;
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    numeric::RngStream rng(seed, kEvalStream + ep);
    auto obs = env_.reset(rng);
    if (ep == 0) {
      res.trajectory.emplace(ec.K);
      res.trajectory->record_initial(env_.state());
    }
    RealTensor hidden(L, hw);
    gnn::CommGraph graph = initial_graph();
    double total = 0.0;
    std::size_t slots = 0;
    while (!env_.done()) {
      Graph g(false);
      auto out = learner_->actor().forward(g, learner_->actor_store(), policy::EntityBatch::from(obs), hidden, graph, {});
      const RealTensor mean = out.mean.value();
      std::vector<env::ActionVector> actions;
      for (std::size_t l = 0; l < L; ++l) actions.push_back(policy::to_env_action(mean.row_span(l), ec.K, ec.N));
      if (hw) hidden = out.hidden.value();
      if (learner_->actor().uses_graph()) graph = out.next_graph;
      auto step = env_.step(actions, rng, eval_draws);
      if (ep == 0) res.trajectory->record(env_.state(), step);
      res.slot_sum_se.push_back(step.sum_se);
      res.ue_se.insert(res.ue_se.end(), step.ue_se.begin(), step.ue_se.end());
      total += step.sum_se;
      ++slots;
      obs = std::move(step.observations);
    }
    res.episode_sum_se.push_back(total / static_cast<double>(slots));
  }
  return res;
}

namespace {

template <typename Policy>
EvaluationResult evaluate_fixed(const env::EnvConfig& cfg, std::size_t episodes, std::uint64_t seed, bool eval_draws,
                                EpisodeStreams streams, Policy&& policy) {
  env::Environment env(cfg);
  EvaluationResult res;
  for (std::size_t i = 0; i < episodes; ++i) {
    const std::size_t ep = streams.first + i;
    numeric::RngStream rng(seed, streams.base + ep);
    numeric::RngStream act_rng(seed, kNoiseStream + ep);
    env.reset(rng);
    if (i == 0) {
      res.trajectory.emplace(cfg.K);
      res.trajectory->record_initial(env.state());
    }
    double total = 0.0;
    std::size_t slots = 0;
    while (!env.done()) {
      auto step = env.step(policy(env, act_rng), rng, eval_draws);
      if (i == 0) res.trajectory->record(env.state(), step);
      res.slot_sum_se.push_back(step.sum_se);
      res.ue_se.insert(res.ue_se.end(), step.ue_se.begin(), step.ue_se.end());
      total += step.sum_se;
      ++slots;
    }
    res.episode_sum_se.push_back(total / static_cast<double>(slots));
  }
  return res;
}

}  // namespace

EpisodeStreams EpisodeStreams::evaluation() { return {kEvalStream, 0}; }
EpisodeStreams EpisodeStreams::training(std::size_t first) { return {kEnvStream, first}; }

EvaluationResult evaluate_random_policy(const env::EnvConfig& cfg, std::size_t episodes, std::uint64_t seed,
                                        bool eval_draws, EpisodeStreams streams) {
  return evaluate_fixed(cfg, episodes, seed, eval_draws, streams, [&](const env::Environment&, numeric::RngStream& rng) {
    return env::random_actions(cfg.M, cfg.K, cfg.N, rng);
  });
}

EvaluationResult evaluate_fractional(const env::EnvConfig& cfg, std::size_t episodes, std::uint64_t seed,
                                     bool eval_draws, double nu, EpisodeStreams streams) {
  return evaluate_fixed(cfg, episodes, seed, eval_draws, streams, [&](const env::Environment& env, numeric::RngStream&) {
    return env::fractional_power_baseline(env.state(), nu);
  });
}

void write_training_csv(std::ostream& os, const TrainingResult& result, std::size_t agents) {
  os << "episode,sum_se";
  for (std::size_t l = 0; l < agents; ++l) os << ",r_in_" << l;
  os << ",mixed_loss,extrinsic_loss,policy_loss,meta_loss,mixed_grad_norm,extrinsic_grad_norm,policy_grad_norm,"
        "meta_grad_norm,sigma,updates,first_order_updates,sinr_guards\n";
  os << std::setprecision(17);
  for (const auto& e : result.episodes) {
    os << e.episode << ',' << e.sum_se;
    for (double v : e.r_in) os << ',' << v;
    os << ',' << e.mixed_loss << ',' << e.extrinsic_loss << ',' << e.policy_loss << ',' << e.meta_loss << ','
       << e.mixed_grad_norm << ',' << e.extrinsic_grad_norm << ',' << e.policy_grad_norm << ',' << e.meta_grad_norm
       << ',' << e.sigma << ',' << e.updates << ',' << e.first_order_updates << ',' << e.sinr_guards << '\n';
  }
}

}  // namespace cfmimo::marl
