// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cfmimo/harness/compare.hpp"
#include "cfmimo/harness/experiment_config.hpp"
#include "cfmimo/harness/metrics.hpp"
#include "cfmimo/harness/plotdata.hpp"
#include "cfmimo/harness/runner.hpp"
#include "cfmimo/harness/units.hpp"
#include "doctest.h"

using namespace cfmimo;
using namespace cfmimo::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cfmimo_test_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  std::getline(f, line);
  return line;
}

// Bundle whose seed s has every evaluation sample equal to value(s).
template <class F>
MetricsBundle synthetic(Algorithm a, std::size_t seeds, F value, std::size_t converge = 120) {
  ExperimentConfig c = preset(a);
  c.seeds.clear();
  for (std::size_t s = 0; s < seeds; ++s) c.seeds.push_back(s + 1);
  MetricsBundle b;
  b.config = to_json(c);
  for (std::size_t s = 0; s < seeds; ++s) {
    SeedMetrics m;
    m.seed = s + 1;
    m.eval_sum_se.assign(40, value(s));
    m.episode_sum_se.assign(300, value(s));
    m.convergence_episode = converge;
    b.seeds.push_back(m);
  }
  return b;
}

}  // namespace

TEST_CASE("power and length units") {
  CHECK(parse_power("-94dBm") == doctest::Approx(3.98e-13).epsilon(1e-3));
  CHECK(parse_power("-94 dBm") == doctest::Approx(std::pow(10.0, -12.4)).epsilon(1e-12));
  CHECK(parse_power("0dBW") == doctest::Approx(1.0));
  CHECK(parse_power("100mW") == doctest::Approx(0.1));
  CHECK(parse_power("0.5") == doctest::Approx(0.5));
  CHECK(parse_length("1km") == doctest::Approx(1000.0));
  CHECK(watts_to_dbm(dbm_to_watts(-94.0)) == doctest::Approx(-94.0));
  CHECK_THROWS_AS(parse_power("3 furlongs"), std::invalid_argument);
  CHECK_THROWS_AS(parse_power("dBm"), std::invalid_argument);
}

TEST_CASE("config: noise power in dBm is stored in watts") {
  const auto c = parse_experiment(R"({"env": {"noise_power": "-94dBm", "p_ap_max": "30dBm"}})");
  CHECK(c.env.noise_power == doctest::Approx(3.98e-13).epsilon(1e-3));
  CHECK(c.env.p_ap_max == doctest::Approx(1.0));
}

TEST_CASE("config errors name the file line and key") {
  const std::string text = "{\n  \"algorithm\": \"random\",\n  \"env\": {\n    \"M\": 4,\n    \"antennas\": 2\n  }\n}\n";
  try {
    parse_experiment(text, "exp.json");
    FAIL("unknown key accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).starts_with("exp.json:5: env.antennas"));
  }
  CHECK_THROWS_AS(parse_experiment(R"({"algorithm": "ppo"})"), ConfigError);
  CHECK_THROWS_AS(parse_experiment(R"({"env": {"M": -1}})"), ConfigError);
  CHECK_THROWS_AS(parse_experiment(R"({"features": {"permutation": false, "gnn": true}})"), ConfigError);
  try {
    parse_experiment("{\n  \"episodes\": 3,\n  oops\n}", "broken.json");
    FAIL("syntax error accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).starts_with("broken.json:3"));
  }
}

TEST_CASE("overrides: dotted keys, JSON values and strings") {
  nlohmann::json doc = nlohmann::json::object();
  apply_override(doc, "env.M=9");
  apply_override(doc, "env.noise_power=-94dBm");
  apply_override(doc, "features.gnn=true");
  const auto c = parse_experiment(doc, {});
  CHECK(c.env.M == 9);
  CHECK(c.features.gnn);
  CHECK(c.env.noise_power == doctest::Approx(3.98e-13).epsilon(1e-3));
  CHECK_THROWS_AS(apply_override(doc, "nokey"), ConfigError);
}

TEST_CASE("the resolved config reproduces itself exactly") {
  for (auto a : {Algorithm::kSfMaddpg, Algorithm::kMaddpg, Algorithm::kFractional, Algorithm::kRandom}) {
    ExperimentConfig c = preset(a);
    c.env.noise_power = parse_power("-94dBm");
    c.env.covariance.angular_spread_deg = 17.3;
    c.seeds = {4, 8, 15};
    const auto j = to_json(c);
    const auto back = parse_experiment(j.dump(2));
    CHECK(to_json(back) == j);
    CHECK(back.env.noise_power == c.env.noise_power);
  }
}

TEST_CASE("moving average, convergence point and quantiles") {
  const auto ma = moving_average({1, 2, 3, 4}, 2);
  CHECK(ma == std::vector<double>{1, 1.5, 2.5, 3.5});
  // Linear ramp for 200 episodes, then flat: the first full window inside 1%
  // of the final plateau ends well after the ramp.
  std::vector<double> curve;
  for (int e = 0; e < 200; ++e) curve.push_back(e / 200.0);
  curve.resize(600, 1.0);
  const auto c = convergence_point(curve, 100, 0.01);
  REQUIRE(c.has_value());
  CHECK(*c > 200);
  CHECK(*c < 300);
  CHECK_FALSE(convergence_point({1, 2, 3}, 100, 0.01).has_value());
  CHECK(convergence_point(std::vector<double>(150, 2.0), 100, 0.01) == 99u);
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(quantile({0, 10}, 0.25) == doctest::Approx(2.5));
}

TEST_CASE("empirical CDF: sorted, ties collapsed, raw retained") {
  const std::vector<double> raw{3, 1, 2, 2};
  const auto cdf = empirical_cdf(raw);
  REQUIRE(cdf.size() == 3);
  CHECK(cdf[0].value == 1);
  CHECK(cdf[0].probability == doctest::Approx(0.25));
  CHECK(cdf[1].value == 2);
  CHECK(cdf[1].probability == doctest::Approx(0.75));
  CHECK(cdf[2].probability == 1.0);
  CHECK(raw.size() == 4);  // taken by value
}

TEST_CASE("compare: identical bundles, doubling and mismatches") {
  const auto one = synthetic(Algorithm::kFractional, 5, [](std::size_t) { return 1.0; });
  const auto two = synthetic(Algorithm::kSfMaddpg, 5, [](std::size_t) { return 2.0; }, 60);
  const auto same = compare(one, one);
  CHECK(same.improvement.estimate == doctest::Approx(0.0));
  REQUIRE(same.convergence_ratio.has_value());
  CHECK(same.convergence_ratio->estimate == doctest::Approx(1.0));
  const auto up = compare(two, one);
  CHECK(up.improvement.estimate == doctest::Approx(1.0));
  CHECK(up.improvement.lo == doctest::Approx(1.0));
  CHECK(up.convergence_ratio->estimate == doctest::Approx(0.5));

  auto other = one;
  other.config["env"]["M"] = 9;
  try {
    compare(two, other);
    FAIL("mismatched environments accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("env") != std::string::npos);
  }
  auto fewer = synthetic(Algorithm::kFractional, 3, [](std::size_t) { return 1.0; });
  CHECK_THROWS_AS(compare(two, fewer), ConfigError);

  std::ostringstream os;
  write_comparison_table(os, {up});
  CHECK(os.str().find("+100.00") != std::string::npos);
}

TEST_CASE("bootstrap interval narrows with more seeds") {
  auto noisy = [](std::size_t seeds, double base) {
    return synthetic(Algorithm::kFractional, seeds, [base](std::size_t s) {
      numeric::RngStream r(500 + s);
      return base + 0.3 * r.normal();
    });
  };
  auto width = [&](std::size_t n) {
    auto c = noisy(n, 2.0), r = noisy(n, 1.0);
    c.config["algorithm"] = "sf-maddpg";
    const auto cmp = compare(c, r, Pairing::kUnpaired, 1000, 3);
    return cmp.improvement.hi - cmp.improvement.lo;
  };
  CHECK(width(20) < width(5));
}

TEST_CASE("plot data files carry their documented headers") {
  const auto dir = scratch("plot");
  auto b = synthetic(Algorithm::kFractional, 2, [](std::size_t s) { return 1.0 + s; });
  b.config["output_dir"] = "runs/frac";
  b.seeds[0].trajectory_csv = "slot,agent,x,y\n";
  CHECK(first_line(emit_plotdata({b}, Figure::kCdf, dir.string()).at(0)) == "sum_se,cumulative_probability");
  CHECK(first_line(emit_plotdata({b}, Figure::kConvergence, dir.string()).at(0)) == "episode,mean_sum_se,moving_average");
  CHECK(first_line(emit_plotdata({b}, Figure::kScaling, dir.string()).at(0)) == "M,algorithm,median,q25,q75");
  const auto traj = emit_plotdata({b}, Figure::kTrajectory, dir.string()).at(0);
  CHECK(slurp(traj) == b.seeds[0].trajectory_csv);
  CHECK(fs::path(traj).filename() == "trajectory_frac.csv");
  CHECK_THROWS_AS(parse_figure("histogram"), ConfigError);
}

TEST_CASE("fractional run at M=9, K=6, N=8 writes a full CDF and repeats byte for byte") {
  ExperimentConfig c = preset(Algorithm::kFractional);
  c.env.M = 9;
  c.env.K = 6;
  c.env.N = 8;
  c.env.mc_draws_train = 100;
  c.env.mc_draws_eval = 100;
  c.episodes = 2;
  c.eval_episodes = 25;
  const auto a = scratch("run_a"), b = scratch("run_b");
  c.output_dir = a.string();
  const auto bundle = run_experiment(c);
  c.output_dir = b.string();
  run_experiment(c);

  CHECK(bundle.pooled_eval().size() >= 1000);
  const auto cdf_files = emit_plotdata({read_bundle(a.string())}, Figure::kCdf, (a / "plot").string());
  std::ifstream f(cdf_files.at(0));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(f, line)) ++rows;
  CHECK(rows - 1 >= 990);  // ties collapse only a handful of exact repeats
  for (const char* name : {"episodes_seed1.csv", "eval_seed1.csv", "ue_se_seed1.csv", "trajectory_seed1.csv"})
    CHECK(slurp(a / name) == slurp(b / name));

  const auto echo = slurp(a / "resolved_config.json");
  const auto again = parse_experiment(echo, "resolved_config.json");
  CHECK(to_json(again).dump(2) + "\n" == echo);
}
