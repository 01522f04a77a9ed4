// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cfmimo/env/environment.hpp"
#include "cfmimo/env/trajectory.hpp"
#include "cfmimo/marl/replay.hpp"
#include "cfmimo/marl/updates.hpp"
#include "cfmimo/policy/dhpn.hpp"

namespace cfmimo::marl {

enum class ActorKind { kDhpn, kMlp };

struct TrainerConfig {
  ActorKind actor = ActorKind::kDhpn;
  policy::DhpnConfig dhpn;
  std::vector<std::size_t> mlp_hidden{128, 64};
  double mlp_slope = 0.01;
  LearnerConfig learner;

  std::size_t replay_capacity = 100000;
  std::size_t batch_size = 1024;
  std::size_t warmup_episodes = 10;
  /// One update round every this many environment slots.
  std::size_t update_every = 1;
  std::size_t updates_per_round = 1;

  /// Exploration noise on the pre-squash actions, decayed once per episode.
  double sigma = 0.1;
  double sigma_decay = 0.999;
  double sigma_min = 0.01;
  /// Gumbel-softmax temperature of the finite-pool selector.
  double temperature = 1.0;
  double temperature_decay = 0.999;
  double temperature_min = 0.1;

  std::size_t max_episodes = 5000;
  /// Stop once the best episode metric is this many episodes old; 0 disables.
  std::size_t plateau_window = 200;
  /// Evaluated only when output_dir is set.
  std::size_t checkpoint_every = 100;
  std::string output_dir;
  std::uint64_t seed = 1;
};

struct EpisodeLog {
  std::size_t episode = 0;
  /// Mean over the episode's slots of the sum SE.
  double sum_se = 0.0;
  std::vector<double> r_in;  // per-agent episode mean
  double mixed_loss = 0.0, extrinsic_loss = 0.0, policy_loss = 0.0, meta_loss = 0.0;
  double mixed_grad_norm = 0.0, extrinsic_grad_norm = 0.0, policy_grad_norm = 0.0, meta_grad_norm = 0.0;
  double sigma = 0.0;
  std::size_t updates = 0;
  std::size_t first_order_updates = 0;
  std::size_t sinr_guards = 0;
};

struct TrainingResult {
  std::vector<EpisodeLog> episodes;
  std::size_t transitions = 0;
  bool stopped_on_plateau = false;
};

void write_training_csv(std::ostream& os, const TrainingResult& result, std::size_t agents);

/// Episode-level sum-SE values of a fixed policy.
struct EvaluationResult {
  std::vector<double> episode_sum_se;  // mean over slots
  std::vector<double> slot_sum_se;     // every slot of every episode
  std::vector<double> ue_se;           // per-UE SE of every slot
  std::optional<env::TrajectoryRecorder> trajectory;  // first episode
};

class Trainer {
 public:
  Trainer(env::EnvConfig env_cfg, TrainerConfig cfg);

  using EpisodeCallback = std::function<void(const EpisodeLog&)>;
  TrainingResult train(const EpisodeCallback& on_episode = {});

  /// Deterministic (mean-action) rollouts on fresh episodes.
  EvaluationResult evaluate(std::size_t episodes, std::uint64_t seed, bool eval_draws);

  [[nodiscard]] Learner& learner() { return *learner_; }
  [[nodiscard]] const ReplayPool& replay() const { return replay_; }
  [[nodiscard]] const TrainerConfig& config() const { return cfg_; }
  [[nodiscard]] const env::EnvConfig& env_config() const { return env_.config(); }

 private:
  gnn::CommGraph initial_graph() const;

  env::Environment env_;
  TrainerConfig cfg_;
  std::unique_ptr<Learner> learner_;
  ReplayPool replay_;
};

/// Which environment streams a fixed-policy rollout draws its episodes from.
/// The default is the evaluation streams; `training(first)` replays the
/// geometries a Trainer with the same seed saw from episode `first` on.
struct EpisodeStreams {
  std::uint64_t base;
  std::size_t first = 0;
  static EpisodeStreams evaluation();
  static EpisodeStreams training(std::size_t first);
};

/// Rollouts of the two reference policies used in comparisons.
EvaluationResult evaluate_random_policy(const env::EnvConfig& cfg, std::size_t episodes, std::uint64_t seed,
                                        bool eval_draws, EpisodeStreams streams = EpisodeStreams::evaluation());
/// Fractional power control (nu = 1) with the APs held at their initial positions.
EvaluationResult evaluate_fractional(const env::EnvConfig& cfg, std::size_t episodes, std::uint64_t seed,
                                     bool eval_draws, double nu = 1.0,
                                     EpisodeStreams streams = EpisodeStreams::evaluation());

}  // namespace cfmimo::marl
