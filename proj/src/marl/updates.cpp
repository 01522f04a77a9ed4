// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/marl/updates.hpp"

#include <cmath>
#include <sstream>

namespace cfmimo::marl {

namespace {

using numeric::RealTensor;

void require_finite(const RealTensor& t, const char* what) {
  if (!t.all_finite()) throw NumericFailure(std::string("non-finite values in ") + what);
}

double mean_of(const RealTensor& t) {
  double s = 0.0;
  for (double v : t.values()) s += v;
  return t.size() ? s / static_cast<double>(t.size()) : 0.0;
}

}  // namespace

Learner::Learner(std::unique_ptr<policy::Actor> actor, ParamStore actor_store, std::size_t agents,
                 std::size_t obs_width, const LearnerConfig& cfg, numeric::RngStream& rng)
    : cfg_(cfg),
      agents_(agents),
      K_(actor->K()),
      N_(actor->N()),
      actor_(std::move(actor)),
      actor_store_(std::move(actor_store)) {
  if (agents_ == 0) throw std::invalid_argument("Learner: need at least one agent");
  const std::size_t aw = actor_->action_dim();
  critics_ = MixedCritics::create(critic_store_, "critic", agents_, obs_width, aw, cfg_.critic_hidden, rng);
  global_ = GlobalCritic::create(global_store_, "global", agents_, obs_width, aw, cfg_.critic_hidden, rng);
  arn_ = IntrinsicRewardNet::create(reward_store_, "arn", obs_width + aw, cfg_.reward, rng);
  hrn_ = RewardMixer::create(reward_store_, "hrn", obs_width + aw, cfg_.reward, rng);
  actor_target_ = actor_store_;
  critic_target_ = critic_store_;
  global_target_ = global_store_;
  actor_opt_.emplace(actor_store_, cfg_.actor_lr);
  critic_opt_.emplace(critic_store_, cfg_.lr);
  global_opt_.emplace(global_store_, cfg_.lr);
  reward_opt_.emplace(reward_store_, cfg_.lr);
}

void Learner::apply(ParamStore& store, numeric::Adam& opt, const char* what, double* grad_norm) {
  if (!store.grads_finite()) {
    std::ostringstream msg;
    msg << "non-finite gradient in " << what << " update (";
    for (const auto& p : store)
      if (!p.grad.all_finite()) msg << p.name << ' ';
    msg << ')';
    store.zero_grad();
    throw NumericFailure(msg.str());
  }
  const double norm = numeric::clip_grad_norm(store, cfg_.clip);
  if (grad_norm) *grad_norm = norm;
  opt.step(store);
  store.zero_grad();
}

Var Learner::reward_features(Graph& g, const policy::EntityBatch& obs, const RealTensor& actions) const {
  return numeric::concat_cols({g.constant(obs.flat), squash_actions(g.constant(actions), K_, N_)});
}

RealTensor Learner::policy_mean(const policy::EntityBatch& obs, const RealTensor& hidden, const gnn::CommGraph& graph,
                                bool target) {
  Graph g(false);
  auto out = actor_->forward(g, target ? actor_target_ : actor_store_, obs, hidden, graph, {});
  return out.mean.value();
}

RealTensor Learner::intrinsic_rewards(const policy::EntityBatch& obs, const RealTensor& actions) {
  if (!cfg_.intrinsic) return RealTensor(obs.rows(), 1);
  Graph g(false);
  return arn_(g, reward_store_, reward_features(g, obs, actions), agents_).value();
}

RealTensor Learner::mixed_rewards(const policy::EntityBatch& obs, const RealTensor& actions, const RealTensor& r_ex) {
  if (!cfg_.intrinsic) return r_ex;
  Graph g(false);
  return mixed_reward_var(g, obs, actions, r_ex).value();
}

Var Learner::mixed_reward_var(Graph& g, const policy::EntityBatch& obs, const RealTensor& actions,
                              const RealTensor& r_ex) {
  if (!cfg_.intrinsic) return g.constant(r_ex);
  Var f = reward_features(g, obs, actions);
  Var r_in = arn_(g, reward_store_, f, agents_);
  MixWeights w = hrn_.weights(g, reward_store_, f, agents_);
  if (!cfg_.mix_intrinsic) w.w2 = g.constant(RealTensor(r_ex.rows(), 1));
  return RewardMixer::mix(w, r_in, g.constant(r_ex));
}

RealTensor Learner::mixed_reward_values(const TrainBatch& batch) {
  if (!cfg_.intrinsic) return batch.r_ex;
  if (!cfg_.fresh_mixed_reward) return batch.r_m;
  return mixed_rewards(batch.obs, batch.actions, batch.r_ex);
}

RealTensor Learner::mixed_q(const policy::EntityBatch& obs, const RealTensor& actions, bool target) {
  Graph g(false);
  ParamStore& s = target ? critic_target_ : critic_store_;
  return critics_(g, s, g.constant(obs.flat), squash_actions(g.constant(actions), K_, N_)).value();
}

double Learner::mixed_critic_step(const TrainBatch& batch, double* grad_norm) {
  const RealTensor a_next = policy_mean(batch.next_obs, batch.next_hidden, batch.next_graph, true);
  const RealTensor q_next = mixed_q(batch.next_obs, a_next, true);
  const RealTensor r = mixed_reward_values(batch);
  // Episodes end on a time limit, so the target always bootstraps.
  RealTensor y(r.rows(), 1);
  for (std::size_t i = 0; i < y.rows(); ++i) y(i, 0) = r(i, 0) + cfg_.gamma_m * q_next(i, 0);
  require_finite(y, "mixed critic target");
  Graph g;
  Var q = critics_(g, critic_store_, g.constant(batch.obs.flat), squash_actions(g.constant(batch.actions), K_, N_));
  Var loss = numeric::mean(numeric::square(numeric::sub(q, g.constant(y))));
  const double l = loss.item();
  if (!std::isfinite(l)) throw NumericFailure("non-finite mixed critic loss");
  g.backward(loss);
  apply(critic_store_, *critic_opt_, "mixed critic", grad_norm);
  return l;
}

double Learner::extrinsic_critic_step(const TrainBatch& batch, double* grad_norm) {
  const RealTensor a_next = policy_mean(batch.next_obs, batch.next_hidden, batch.next_graph, true);
  RealTensor q_next;
  {
    Graph g(false);
    q_next = global_(g, global_target_, g.constant(batch.next_obs.flat), squash_actions(g.constant(a_next), K_, N_))
                 .value();
  }
  RealTensor y(batch.samples, 1);
  for (std::size_t s = 0; s < batch.samples; ++s) y(s, 0) = batch.sum_se(s, 0) + cfg_.gamma_ex * q_next(s, 0);
  require_finite(y, "extrinsic critic target");
  Graph g;
  Var q = global_(g, global_store_, g.constant(batch.obs.flat), squash_actions(g.constant(batch.actions), K_, N_));
  Var loss = numeric::mean(numeric::square(numeric::sub(q, g.constant(y))));
  const double l = loss.item();
  if (!std::isfinite(l)) throw NumericFailure("non-finite extrinsic critic loss");
  g.backward(loss);
  apply(global_store_, *global_opt_, "extrinsic critic", grad_norm);
  return l;
}

RealTensor Learner::advantages(const TrainBatch& batch) {
  const RealTensor r = cfg_.advantage_reward == AdvantageReward::kMixed ? mixed_reward_values(batch) : batch.r_ex;
  const RealTensor v = mixed_q(batch.obs, policy_mean(batch.obs, batch.hidden, batch.graph), false);
  const RealTensor v_next =
      mixed_q(batch.next_obs, policy_mean(batch.next_obs, batch.next_hidden, batch.next_graph), false);
  RealTensor a(r.rows(), 1);
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, 0) = r(i, 0) + cfg_.gamma_a * v_next(i, 0) - v(i, 0);
  require_finite(a, "advantage");
  return a;
}

double Learner::policy_step(const TrainBatch& batch, const RealTensor& advantage, double sigma,
                            const policy::ForwardOptions& opts, double* grad_norm) {
  Graph g;
  auto out = actor_->forward(g, actor_store_, batch.obs, batch.hidden, batch.graph, opts);
  Var loss;
  if (cfg_.gradient == PolicyGradient::kDeterministic) {
    Var q = critics_(g, critic_store_, g.constant(batch.obs.flat), squash_actions(out.mean, K_, N_));
    loss = numeric::neg(numeric::mean(q));
  } else if (cfg_.gradient == PolicyGradient::kPathwise) {
    RealTensor eps = batch.actions;
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] -= batch.means[i];
    Var x = numeric::add(out.mean, g.constant(std::move(eps)));
    Var q = critics_(g, critic_store_, g.constant(batch.obs.flat), squash_actions(x, K_, N_));
    loss = numeric::neg(numeric::mean(q));
  } else {
    if (advantage.rows() != batch.obs.rows()) throw std::invalid_argument("policy_step: advantage shape");
    // Replayed noise around the current mean: x~ = mu_theta(o) + (x - mu_b), held constant.
    RealTensor x = out.mean.value();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += batch.actions[i] - batch.means[i];
    Var logp = policy::gaussian_log_prob(out.mean, g.constant(x), sigma);
    loss = numeric::neg(numeric::mean(numeric::mul(logp, g.constant(advantage))));
  }
  if (cfg_.action_l2 > 0.0)
    loss = numeric::add(loss, numeric::scale(numeric::mean(numeric::mul(out.mean, out.mean)), cfg_.action_l2));
  const double l = loss.item();
  if (!std::isfinite(l)) throw NumericFailure("non-finite policy loss");
  g.backward(loss);
  critic_store_.zero_grad();
  apply(actor_store_, *actor_opt_, "policy", grad_norm);
  return l;
}

RealTensor Learner::credit_coefficients(const TrainBatch& batch, double sigma, const policy::ForwardOptions& opts,
                                        bool* first_order) {
  const std::size_t rows = batch.obs.rows();
  const std::size_t aw = actor_->action_dim();
  // v = d mean Q_g(O, mu_theta(O)) / d theta, and the action gradient for the fallback.
  RealTensor mu, dq_da;
  {
    Graph g;
    auto out = actor_->forward(g, actor_store_, batch.obs, batch.hidden, batch.graph, opts);
    mu = out.mean.value();
    Var a = g.leaf(mu);
    Var a_used = numeric::add(out.mean, numeric::sub(a, numeric::stop_gradient(a)));
    Var j = numeric::mean(global_(g, global_store_, g.constant(batch.obs.flat), squash_actions(a_used, K_, N_)));
    g.backward(j);
    dq_da = g.grad_of(a);
  }
  const std::vector<double> v = actor_store_.flat_grads();
  actor_store_.zero_grad();
  global_store_.zero_grad();
  double vn = 0.0;
  for (double x : v) vn += x * x;
  vn = std::sqrt(vn);

  RealTensor jv(rows, aw);
  bool fallback = !(vn > 0.0) || !std::isfinite(vn);
  if (!fallback) {
    const double eps = cfg_.fd_length / vn;
    const std::vector<double> theta = actor_store_.flat_values();
    std::vector<double> shifted(theta.size());
    auto eval_at = [&](double sign) {
      for (std::size_t i = 0; i < theta.size(); ++i) shifted[i] = theta[i] + sign * eps * v[i];
      actor_store_.set_flat_values(shifted);
      Graph g(false);
      return actor_->forward(g, actor_store_, batch.obs, batch.hidden, batch.graph, opts).mean.value();
    };
    const RealTensor plus = eval_at(1.0);
    const RealTensor minus = eval_at(-1.0);
    actor_store_.set_flat_values(theta);
    for (std::size_t i = 0; i < jv.size(); ++i) jv[i] = (plus[i] - minus[i]) / (2.0 * eps);
    fallback = !jv.all_finite();
  }
  if (fallback) jv = dq_da;  // first-order stand-in: the policy moves straight up the action gradient
  if (first_order) *first_order = fallback;

  RealTensor c(rows, 1);
  const double inv = 1.0 / (sigma * sigma);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < aw; ++j) s += (batch.actions(r, j) - batch.means(r, j)) * inv * jv(r, j);
    c(r, 0) = s;
  }
  require_finite(c, "credit coefficients");
  return c;
}

double Learner::meta_step(const TrainBatch& batch, double sigma, const policy::ForwardOptions& opts,
                          double* grad_norm, bool* first_order) {
  if (!cfg_.intrinsic) return 0.0;
  RealTensor c = credit_coefficients(batch, sigma, opts, first_order);
  // c carries the scale of grad Q_g and 1 / sigma^2; only its direction matters
  // to the meta step, and unit RMS keeps the anchor weight meaningful.
  double rms = 0.0;
  for (double v : c.values()) rms += v * v;
  rms = std::sqrt(rms / static_cast<double>(c.size()));
  if (rms > 0.0)
    for (double& v : c.values()) v /= rms;
  // d theta'/d eta = inner_step * mean_b grad log pi_b (d r_m,b / d eta), so the
  // ascent direction on Q_g(pi_theta') is inner_step * mean_b c_b d r_m,b / d eta.
  Graph g;
  Var rm = mixed_reward_var(g, batch.obs, batch.actions, batch.r_ex);
  Var loss = numeric::neg(numeric::mean(numeric::mul(g.constant(c), rm)));
  if (cfg_.reward_anchor > 0.0)
    loss = numeric::add(loss, numeric::scale(numeric::mean(numeric::square(numeric::sub(rm, g.constant(batch.r_ex)))),
                                             cfg_.reward_anchor));
  loss = numeric::scale(loss, cfg_.inner_step);
  const double l = loss.item();
  if (!std::isfinite(l)) throw NumericFailure("non-finite reward-net loss");
  g.backward(loss);
  apply(reward_store_, *reward_opt_, "reward net", grad_norm);
  return l;
}

void Learner::soft_update_targets() {
  numeric::polyak_update(actor_target_, actor_store_, cfg_.tau);
  numeric::polyak_update(critic_target_, critic_store_, cfg_.tau);
  numeric::polyak_update(global_target_, global_store_, cfg_.tau);
}

UpdateStats Learner::update(const TrainBatch& batch, double sigma, const policy::ForwardOptions& opts) {
  UpdateStats st;
  st.mixed_loss = mixed_critic_step(batch, &st.mixed_grad_norm);
  RealTensor adv;
  if (cfg_.gradient == PolicyGradient::kLikelihoodRatio) {
    adv = advantages(batch);
    st.mean_advantage = mean_of(adv);
  }
  st.policy_loss = policy_step(batch, adv, sigma, opts, &st.policy_grad_norm);
  st.extrinsic_loss = extrinsic_critic_step(batch, &st.extrinsic_grad_norm);
  if (cfg_.intrinsic) st.meta_loss = meta_step(batch, sigma, opts, &st.meta_grad_norm, &st.meta_first_order);
  soft_update_targets();
  return st;
}

nlohmann::json Learner::checkpoint() const {
  return {{"actor", numeric::to_checkpoint(actor_store_)},   {"actor_target", numeric::to_checkpoint(actor_target_)},
          {"critic", numeric::to_checkpoint(critic_store_)}, {"critic_target", numeric::to_checkpoint(critic_target_)},
          {"global", numeric::to_checkpoint(global_store_)}, {"global_target", numeric::to_checkpoint(global_target_)},
          {"reward", numeric::to_checkpoint(reward_store_)}};
}

void Learner::load(const nlohmann::json& doc) {
  numeric::load_checkpoint(actor_store_, doc.at("actor"));
  numeric::load_checkpoint(actor_target_, doc.at("actor_target"));
  numeric::load_checkpoint(critic_store_, doc.at("critic"));
  numeric::load_checkpoint(critic_target_, doc.at("critic_target"));
  numeric::load_checkpoint(global_store_, doc.at("global"));
  numeric::load_checkpoint(global_target_, doc.at("global_target"));
  numeric::load_checkpoint(reward_store_, doc.at("reward"));
}

}  // namespace cfmimo::marl
