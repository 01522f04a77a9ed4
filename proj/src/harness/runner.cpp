// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/harness/runner.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace cfmimo::harness {

namespace fs = std::filesystem;

namespace {

void fill_eval(SeedMetrics& s, marl::EvaluationResult&& ev) {
  s.eval_sum_se = std::move(ev.slot_sum_se);
  s.eval_ue_se = std::move(ev.ue_se);
  if (ev.trajectory) {
    std::ostringstream os;
    ev.trajectory->write_csv(os);
    s.trajectory_csv = os.str();
  }
}

SeedMetrics run_baseline(const ExperimentConfig& cfg, std::uint64_t seed) {
  const bool fractional = cfg.algorithm == Algorithm::kFractional;
  auto rollout = [&](std::size_t episodes, bool full, marl::EpisodeStreams streams) {
    return fractional ? marl::evaluate_fractional(cfg.env, episodes, seed, full, 1.0, streams)
                      : marl::evaluate_random_policy(cfg.env, episodes, seed, full, streams);
  };
  SeedMetrics s;
  s.seed = seed;
  // Same geometries a learner with this seed trains on, so curves pair up.
  s.episode_sum_se = rollout(cfg.episodes, false, marl::EpisodeStreams::training(0)).episode_sum_se;
  fill_eval(s, rollout(cfg.eval_episodes, cfg.eval_full_draws, marl::EpisodeStreams::evaluation()));
  return s;
}

std::string seed_dir(const ExperimentConfig& cfg, std::uint64_t seed) {
  return (fs::path(cfg.output_dir) / ("seed_" + std::to_string(seed))).string();
}

}  // namespace

MetricsBundle run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  MetricsBundle bundle;
  bundle.config = to_json(cfg);
  for (const std::uint64_t seed : cfg.seeds) {
    SeedMetrics s;
    if (cfg.learns()) {
      const std::string dir = opts.write ? seed_dir(cfg, seed) : std::string();
      marl::Trainer trainer(cfg.env, cfg.trainer_config(seed, dir));
      const auto result = trainer.train([&](const marl::EpisodeLog& e) {
        if (opts.log && opts.log_every && (e.episode + 1) % opts.log_every == 0)
          *opts.log << to_string(cfg.algorithm) << " seed " << seed << " episode " << e.episode + 1 << " sum_se "
                    << e.sum_se << '\n';
      });
      if (opts.write) {
        std::ofstream f(fs::path(dir) / "training.csv");
        marl::write_training_csv(f, result, cfg.env.M);
        std::ofstream(fs::path(dir) / "final.json") << trainer.learner().checkpoint().dump() << '\n';
      }
      s.seed = seed;
      for (const auto& e : result.episodes) s.episode_sum_se.push_back(e.sum_se);
      fill_eval(s, trainer.evaluate(cfg.eval_episodes, seed, cfg.eval_full_draws));
    } else {
      s = run_baseline(cfg, seed);
    }
    s.convergence_episode = convergence_point(s.episode_sum_se);
    if (opts.log)
      *opts.log << to_string(cfg.algorithm) << " seed " << seed << " final50 " << tail_mean(s.episode_sum_se, 50)
                << " eval median " << median(s.eval_sum_se) << '\n';
    bundle.seeds.push_back(std::move(s));
  }
  if (opts.write) write_bundle(bundle, cfg.output_dir);
  return bundle;
}

MetricsBundle evaluate_experiment(const ExperimentConfig& cfg, const std::string& checkpoint, const RunOptions& opts) {
  MetricsBundle bundle;
  bundle.config = to_json(cfg);
  nlohmann::json doc;
  if (cfg.learns()) {
    std::ifstream f(checkpoint);
    if (!f) throw ConfigError(checkpoint + ": cannot open checkpoint");
    try {
      doc = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(checkpoint + ": " + e.what());
    }
  }
  for (const std::uint64_t seed : cfg.seeds) {
    SeedMetrics s;
    s.seed = seed;
    if (cfg.learns()) {
      marl::Trainer trainer(cfg.env, cfg.trainer_config(seed, ""));
      try {
        trainer.learner().load(doc.contains("learner") ? doc.at("learner") : doc);
      } catch (const std::exception& e) {
        throw ConfigError(checkpoint + ": checkpoint does not match the config: " + e.what());
      }
      fill_eval(s, trainer.evaluate(cfg.eval_episodes, seed, cfg.eval_full_draws));
    } else {
      fill_eval(s, cfg.algorithm == Algorithm::kFractional
                       ? marl::evaluate_fractional(cfg.env, cfg.eval_episodes, seed, cfg.eval_full_draws)
                       : marl::evaluate_random_policy(cfg.env, cfg.eval_episodes, seed, cfg.eval_full_draws));
    }
    if (opts.log) *opts.log << to_string(cfg.algorithm) << " seed " << seed << " eval median " << median(s.eval_sum_se) << '\n';
    bundle.seeds.push_back(std::move(s));
  }
  if (opts.write) write_bundle(bundle, cfg.output_dir);
  return bundle;
}

}  // namespace cfmimo::harness
