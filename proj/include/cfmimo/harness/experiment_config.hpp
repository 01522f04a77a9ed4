// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cfmimo/env/config.hpp"
#include "cfmimo/marl/trainer.hpp"
#include "json.hpp"

namespace cfmimo::harness {

using env::ConfigError;

enum class Algorithm { kSfMaddpg, kMaddpg, kFractional, kRandom };

std::string to_string(Algorithm a);
/// Throws ConfigError on an unknown name.
Algorithm parse_algorithm(const std::string& name);

struct Features {
  bool permutation = true;  // DHPN actor; off gives the plain MLP actor
  bool gnn = false;
  bool intrinsic = true;
  bool joint = true;  // PI+PE heads; off gives PI-only outputs
};

/// One experiment. The trainer block holds every learning knob; the feature
/// flags are folded into it by trainer_config().
struct ExperimentConfig {
  Algorithm algorithm = Algorithm::kSfMaddpg;
  Features features;
  std::vector<std::uint64_t> seeds{1};
  std::size_t episodes = 300;
  /// Evaluation episodes per seed; 25 episodes of 40 slots give 1000 samples.
  std::size_t eval_episodes = 25;
  /// Score evaluation slots with env.mc_draws_eval instead of mc_draws_train.
  bool eval_full_draws = false;
  std::string output_dir = "runs/default";
  env::EnvConfig env;
  marl::TrainerConfig trainer;

  [[nodiscard]] bool learns() const {
    return algorithm == Algorithm::kSfMaddpg || algorithm == Algorithm::kMaddpg;
  }
  /// Trainer settings for one seed, with the feature flags applied.
  [[nodiscard]] marl::TrainerConfig trainer_config(std::uint64_t seed, const std::string& output_dir) const;
};

/// Desk-scale defaults for an algorithm: M=4, K=3, N=2, a small DHPN and the
/// learning schedule used by the acceptance runs.
ExperimentConfig preset(Algorithm a);

/// Strict parse: unknown keys, wrong types and out-of-range values raise
/// ConfigError("<source>:<line>: <key>: <problem>"). The algorithm's preset
/// provides every value the document leaves out.
ExperimentConfig parse_experiment(const std::string& text, const std::string& source = "config");
/// Same, for a document already in memory. `origins` maps dotted key paths to
/// the location reported in errors (see locate_keys).
ExperimentConfig parse_experiment(const nlohmann::json& doc, const std::map<std::string, std::string>& origins);

/// Dotted key path ("env.M", "seeds[2]") to "<source>:<line>" for every value
/// of a syntactically valid JSON text.
std::map<std::string, std::string> locate_keys(const std::string& text, const std::string& source);

/// "--set" override: "env.M=9" or "env.noise_power=-94dBm". The value is read
/// as JSON when it parses and as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment,
                    std::map<std::string, std::string>* origins = nullptr);

/// Every field, SI units, round-trip precision. Feeding it back reproduces the
/// configuration exactly.
nlohmann::json to_json(const ExperimentConfig& cfg);

ExperimentConfig load_experiment_file(const std::string& path, const std::vector<std::string>& overrides = {});

}  // namespace cfmimo::harness
