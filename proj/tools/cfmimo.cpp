// SPDX-License-Identifier: Apache-2.0
// Command-line front end: train, evaluate, baseline, compare, plotdata, selftest.
// Exit codes: 0 ok, 1 failed selftest, 2 configuration error, 3 numeric failure.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cfmimo/harness/compare.hpp"
#include "cfmimo/harness/experiment_config.hpp"
#include "cfmimo/harness/plotdata.hpp"
#include "cfmimo/harness/runner.hpp"
#include "cfmimo/harness/selftest.hpp"

namespace fs = std::filesystem;
using namespace cfmimo;
using namespace cfmimo::harness;

namespace {

constexpr int kConfigExit = 2;
constexpr int kNumericExit = 3;

struct ConfigFlags {
  std::string config;
  std::vector<std::string> sets;
  std::string algorithm;
  std::string seeds;
  std::size_t episodes = 0;
  std::string output;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config, "Experiment JSON file");
    app->add_option("-s,--set", sets, "Override a config key, e.g. env.M=9 or env.noise_power=-94dBm");
    app->add_option("-a,--algorithm", algorithm, "sf-maddpg | maddpg | fractional | random");
    app->add_option("--seeds", seeds, "Comma-separated seed list");
    app->add_option("-e,--episodes", episodes, "Training episodes per seed");
    app->add_option("-o,--output", output, "Output directory (relative to $CFMIMO_OUTPUT_ROOT when set)");
  }

  // Dedicated flags are applied after --set, so they win.
  [[nodiscard]] ExperimentConfig resolve(const std::string& default_algorithm) const {
    std::vector<std::string> overrides = sets;
    if (!algorithm.empty()) overrides.push_back("algorithm=\"" + algorithm + "\"");
    else if (config.empty() && !default_algorithm.empty()) overrides.insert(overrides.begin(), "algorithm=\"" + default_algorithm + "\"");
    if (!seeds.empty()) overrides.push_back("seeds=[" + seeds + "]");
    if (episodes) overrides.push_back("episodes=" + std::to_string(episodes));
    if (!output.empty()) overrides.push_back("output_dir=\"" + output + "\"");

    ExperimentConfig cfg;
    if (config.empty()) {
      nlohmann::json doc = nlohmann::json::object();
      std::map<std::string, std::string> origins{{"", "command line"}};
      for (const auto& o : overrides) apply_override(doc, o, &origins);
      cfg = parse_experiment(doc, origins);
    } else {
      cfg = load_experiment_file(config, overrides);
    }
    if (const char* root = std::getenv("CFMIMO_OUTPUT_ROOT"); root && *root && fs::path(cfg.output_dir).is_relative())
      cfg.output_dir = (fs::path(root) / cfg.output_dir).string();
    return cfg;
  }
};

RunOptions verbose_run() {
  RunOptions o;
  o.log = &std::cerr;
  return o;
}

void report(const MetricsBundle& b, const ExperimentConfig& cfg) {
  for (const auto& s : b.seeds)
    std::cout << to_string(cfg.algorithm) << " seed " << s.seed << ": final-50 sum SE " << tail_mean(s.episode_sum_se, 50)
              << ", eval median " << median(s.eval_sum_se) << " over " << s.eval_sum_se.size() << " slots\n";
  std::cout << "wrote " << cfg.output_dir << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cell-free massive MIMO mobile-AP experiments"};
  app.require_subcommand(1);

  ConfigFlags train_flags, eval_flags, base_flags;
  auto* train = app.add_subcommand("train", "Train and evaluate a learner (sf-maddpg or maddpg)");
  train_flags.attach(train);

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a saved learner checkpoint or a baseline");
  eval_flags.attach(evaluate);
  std::string checkpoint;
  evaluate->add_option("--checkpoint", checkpoint, "final.json or a checkpoint written during training");

  auto* baseline = app.add_subcommand("baseline", "Roll out the fractional or random baseline");
  base_flags.attach(baseline);

  auto* cmp = app.add_subcommand("compare", "Compare result bundles against a reference");
  std::string reference;
  std::vector<std::string> candidates;
  bool unpaired = false;
  std::size_t resamples = 1000;
  std::string cmp_json;
  cmp->add_option("reference", reference, "Reference bundle directory")->required();
  cmp->add_option("candidates", candidates, "Candidate bundle directories")->required();
  cmp->add_flag("--unpaired", unpaired, "Bootstrap the two seed sets independently");
  cmp->add_option("--resamples", resamples, "Bootstrap resamples");
  cmp->add_option("--json", cmp_json, "Also write the comparison as JSON");

  auto* plot = app.add_subcommand("plotdata", "Write figure CSVs from result bundles");
  std::string figure;
  std::vector<std::string> bundles;
  std::string plot_out = "plotdata";
  plot->add_option("--figure", figure, "cdf | convergence | trajectory | scaling")->required();
  plot->add_option("bundles", bundles, "Bundle directories")->required();
  plot->add_option("-o,--output", plot_out, "Directory for the CSV files");

  auto* self = app.add_subcommand("selftest", "Run the invariant suites");
  bool full = false;
  std::vector<std::string> only;
  std::string cache;
  bool verbose = false;
  self->add_flag("--full", full, "Acceptance-size runs (the learning suites take tens of minutes)");
  self->add_option("--only", only, "Suites to run")->check(CLI::IsMember(suite_names()));
  self->add_option("--cache", cache, "Directory for cached learning runs");
  self->add_flag("-v,--verbose", verbose, "Per-module progress");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const auto cfg = train_flags.resolve("sf-maddpg");
      if (!cfg.learns()) throw ConfigError("algorithm " + to_string(cfg.algorithm) + " does not train; use `baseline`");
      report(run_experiment(cfg, verbose_run()), cfg);
    } else if (*evaluate) {
      const auto cfg = eval_flags.resolve("sf-maddpg");
      if (cfg.learns() && checkpoint.empty()) throw ConfigError("evaluate: --checkpoint is required for learners");
      report(evaluate_experiment(cfg, checkpoint, verbose_run()), cfg);
    } else if (*baseline) {
      const auto cfg = base_flags.resolve("fractional");
      if (cfg.learns()) throw ConfigError("algorithm " + to_string(cfg.algorithm) + " is a learner; use `train`");
      report(run_experiment(cfg, verbose_run()), cfg);
    } else if (*cmp) {
      const auto ref = read_bundle(reference);
      std::vector<Comparison> rows;
      for (const auto& c : candidates)
        rows.push_back(compare(read_bundle(c), ref, unpaired ? Pairing::kUnpaired : Pairing::kBySeed, resamples));
      write_comparison_table(std::cout, rows);
      if (!cmp_json.empty()) {
        nlohmann::json doc = nlohmann::json::array();
        for (const auto& r : rows) doc.push_back(to_json(r));
        std::ofstream(cmp_json) << doc.dump(2) << '\n';
      }
    } else if (*plot) {
      const Figure f = parse_figure(figure);
      std::vector<MetricsBundle> loaded;
      for (const auto& b : bundles) loaded.push_back(read_bundle(b));
      for (const auto& p : emit_plotdata(loaded, f, plot_out)) std::cout << "wrote " << p << '\n';
    } else if (*self) {
      SelftestOptions o;
      o.mode = full ? SuiteMode::kFull : SuiteMode::kQuick;
      o.cache_dir = cache;
      o.log = verbose ? &std::cout : nullptr;
      if (only.empty()) only = suite_names();
      bool all = true;
      for (const auto& s : only) {
        const auto r = run_suite(s, o);
        std::cout << format_result(r) << std::endl;
        all = all && r.passed;
      }
      return all ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const marl::NumericFailure& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumericExit;
  } catch (const std::exception& e) {
    // Unreadable bundles and similar I/O problems are input errors.
    std::cerr << "error: " << e.what() << '\n';
    return kConfigExit;
  }
  return 0;
}
