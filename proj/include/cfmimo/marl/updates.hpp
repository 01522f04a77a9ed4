// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "cfmimo/marl/critics.hpp"
#include "cfmimo/marl/replay.hpp"
#include "cfmimo/marl/reward_nets.hpp"
#include "cfmimo/numeric/optim.hpp"
#include "cfmimo/policy/actor.hpp"

namespace cfmimo::marl {

/// Raised when a loss or gradient stops being finite. what() carries the diagnostics.
class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PolicyGradient {
  /// -log pi(x~ | o) * A, with x~ the replayed exploration noise added to the current mean.
  kLikelihoodRatio,
  /// -Q_l(o, mu(o) + eps) with the replayed noise eps: the reparameterized
  /// estimator of the same Gaussian-policy gradient.
  kPathwise,
  /// -Q_l(o, mu(o)) back-propagated through the mixed critic.
  kDeterministic,
};

enum class AdvantageReward { kMixed, kExtrinsic };

struct LearnerConfig {
  double gamma_m = 0.99;
  double gamma_ex = 0.99;
  double gamma_a = 0.99;
  /// Polyak rate of every target network.
  double tau = 0.01;
  double lr = 0.01;
  /// The actor learns slower than the critics and reward nets.
  double actor_lr = 0.001;
  /// Inner policy step used by the reward-net meta-gradient.
  double inner_step = 0.01;
  double clip = 0.5;
  std::vector<std::size_t> critic_hidden{128, 64};
  RewardNetConfig reward;
  /// Off: no reward nets, r_m = r_ex.
  bool intrinsic = true;
  /// Off: the mixer's r_in weight is pinned to 0, cutting the ARN out of r_m.
  bool mix_intrinsic = true;
  PolicyGradient gradient = PolicyGradient::kLikelihoodRatio;
  AdvantageReward advantage_reward = AdvantageReward::kMixed;
  /// Recompute r_m with the current reward nets instead of the stored value.
  bool fresh_mixed_reward = true;
  /// Weight of the quadratic pull of r_m toward r_ex in the reward-net loss
  /// (scaled by inner_step with the rest). The meta objective alone is linear
  /// in r_m and has no finite optimum.
  double reward_anchor = 1.0;
  /// Weight of mean(mu^2) on the pre-squash policy mean, added to the policy
  /// loss. On the saturated side of tanh/sigmoid/softmax the gradient keeps
  /// pointing outward and the mean would drift without bound.
  double action_l2 = 1e-3;
  /// Parameter-space length of the finite-difference probe along v.
  double fd_length = 1e-4;
};

struct UpdateStats {
  double mixed_loss = 0.0;
  double extrinsic_loss = 0.0;
  double policy_loss = 0.0;
  double meta_loss = 0.0;
  double mixed_grad_norm = 0.0;
  double extrinsic_grad_norm = 0.0;
  double policy_grad_norm = 0.0;
  double meta_grad_norm = 0.0;
  double mean_advantage = 0.0;
  bool meta_first_order = false;
};

/// Networks and optimizer state of one SF-MADDPG learner. The actor is shared
/// by all agents; critics are per agent.
class Learner {
 public:
  Learner(std::unique_ptr<policy::Actor> actor, ParamStore actor_store, std::size_t agents, std::size_t obs_width,
          const LearnerConfig& cfg, numeric::RngStream& rng);

  /// Mixed critics, policy, extrinsic critic, reward nets, then all targets.
  UpdateStats update(const TrainBatch& batch, double sigma, const policy::ForwardOptions& opts);

  // Individual steps, exposed for tests. Each returns the loss and leaves the
  // pre-clip gradient norm in *grad_norm when given.
  double mixed_critic_step(const TrainBatch& batch, double* grad_norm = nullptr);
  double extrinsic_critic_step(const TrainBatch& batch, double* grad_norm = nullptr);
  /// A = r + gamma_a V(o') - V(o) with V(o) = Q_l(o, mu(o)); (B L) x 1.
  [[nodiscard]] RealTensor advantages(const TrainBatch& batch);
  /// Likelihood-ratio step with the given advantages (or the deterministic step, which ignores them).
  double policy_step(const TrainBatch& batch, const RealTensor& advantage, double sigma,
                     const policy::ForwardOptions& opts, double* grad_norm = nullptr);
  /// Meta-gradient step on the reward nets. Returns the surrogate loss.
  double meta_step(const TrainBatch& batch, double sigma, const policy::ForwardOptions& opts,
                   double* grad_norm = nullptr, bool* first_order = nullptr);
  void soft_update_targets();

  /// Per-agent credit coefficients c = ((x - mu_b) / sigma^2) . (J_theta mu) v used by meta_step.
  [[nodiscard]] RealTensor credit_coefficients(const TrainBatch& batch, double sigma,
                                               const policy::ForwardOptions& opts, bool* first_order = nullptr);

  /// r_in and r_m for an (o, x) batch without recording gradients; (B L) x 1 each.
  [[nodiscard]] RealTensor intrinsic_rewards(const policy::EntityBatch& obs, const RealTensor& actions);
  [[nodiscard]] RealTensor mixed_rewards(const policy::EntityBatch& obs, const RealTensor& actions,
                                         const RealTensor& r_ex);
  /// Eval-mode policy means.
  [[nodiscard]] RealTensor policy_mean(const policy::EntityBatch& obs, const RealTensor& hidden,
                                       const gnn::CommGraph& graph, bool target = false);

  [[nodiscard]] const policy::Actor& actor() const { return *actor_; }
  ParamStore& actor_store() { return actor_store_; }
  ParamStore& actor_target() { return actor_target_; }
  ParamStore& critic_store() { return critic_store_; }
  ParamStore& critic_target() { return critic_target_; }
  ParamStore& global_store() { return global_store_; }
  ParamStore& global_target() { return global_target_; }
  ParamStore& reward_store() { return reward_store_; }
  [[nodiscard]] const MixedCritics& critics() const { return critics_; }
  [[nodiscard]] const GlobalCritic& global_critic() const { return global_; }
  [[nodiscard]] const IntrinsicRewardNet& arn() const { return arn_; }
  [[nodiscard]] const RewardMixer& hrn() const { return hrn_; }
  [[nodiscard]] const LearnerConfig& config() const { return cfg_; }
  LearnerConfig& mutable_config() { return cfg_; }
  [[nodiscard]] std::size_t agents() const { return agents_; }

  /// Every store under one document.
  [[nodiscard]] nlohmann::json checkpoint() const;
  void load(const nlohmann::json& doc);

 private:
  Var reward_features(Graph& g, const policy::EntityBatch& obs, const RealTensor& actions) const;
  Var mixed_reward_var(Graph& g, const policy::EntityBatch& obs, const RealTensor& actions, const RealTensor& r_ex);
  [[nodiscard]] RealTensor mixed_reward_values(const TrainBatch& batch);
  [[nodiscard]] RealTensor mixed_q(const policy::EntityBatch& obs, const RealTensor& actions, bool target);
  void apply(ParamStore& store, numeric::Adam& opt, const char* what, double* grad_norm);

  LearnerConfig cfg_;
  std::size_t agents_, K_, N_;
  std::unique_ptr<policy::Actor> actor_;
  ParamStore actor_store_, actor_target_;
  ParamStore critic_store_, critic_target_;
  ParamStore global_store_, global_target_;
  ParamStore reward_store_;
  MixedCritics critics_;
  GlobalCritic global_;
  IntrinsicRewardNet arn_;
  RewardMixer hrn_;
  std::optional<numeric::Adam> actor_opt_, critic_opt_, global_opt_, reward_opt_;
};

}  // namespace cfmimo::marl
