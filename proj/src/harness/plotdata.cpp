// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/harness/plotdata.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>

#include "cfmimo/harness/experiment_config.hpp"

namespace cfmimo::harness {

namespace fs = std::filesystem;

Figure parse_figure(const std::string& name) {
  if (name == "cdf") return Figure::kCdf;
  if (name == "convergence") return Figure::kConvergence;
  if (name == "trajectory") return Figure::kTrajectory;
  if (name == "scaling") return Figure::kScaling;
  throw ConfigError("unknown figure '" + name + "' (cdf, convergence, trajectory, scaling)");
}

namespace {

std::string label(const MetricsBundle& b) {
  const std::string dir = b.config.value("output_dir", std::string());
  const std::string leaf = fs::path(dir).lexically_normal().filename().string();
  return leaf.empty() ? b.algorithm() : leaf;
}

std::ofstream open(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << std::setprecision(17);
  return f;
}

std::vector<double> seed_mean_curve(const MetricsBundle& b) {
  std::size_t n = 0;
  for (const auto& s : b.seeds) n = std::max(n, s.episode_sum_se.size());
  std::vector<double> sum(n, 0.0), count(n, 0.0);
  for (const auto& s : b.seeds)
    for (std::size_t e = 0; e < s.episode_sum_se.size(); ++e) {
      sum[e] += s.episode_sum_se[e];
      count[e] += 1.0;
    }
  for (std::size_t e = 0; e < n; ++e) sum[e] /= count[e];
  return sum;
}

}  // namespace

std::vector<std::string> emit_plotdata(const std::vector<MetricsBundle>& bundles, Figure figure,
                                       const std::string& dir) {
  fs::create_directories(dir);
  std::vector<std::string> written;
  if (figure == Figure::kScaling) {
    const fs::path p = fs::path(dir) / "scaling.csv";
    auto f = open(p);
    f << "M,algorithm,median,q25,q75\n";
    for (const auto& b : bundles) {
      const auto samples = b.pooled_eval();
      f << b.config.at("env").at("M").get<std::size_t>() << ',' << b.algorithm() << ',' << median(samples) << ','
        << quantile(samples, 0.25) << ',' << quantile(samples, 0.75) << '\n';
    }
    written.push_back(p.string());
    return written;
  }
  for (const auto& b : bundles) {
    const std::string name = label(b);
    if (figure == Figure::kCdf) {
      const fs::path p = fs::path(dir) / ("cdf_" + name + ".csv");
      auto f = open(p);
      f << "sum_se,cumulative_probability\n";
      for (const auto& pt : empirical_cdf(b.pooled_eval())) f << pt.value << ',' << pt.probability << '\n';
      written.push_back(p.string());
    } else if (figure == Figure::kConvergence) {
      const fs::path p = fs::path(dir) / ("convergence_" + name + ".csv");
      auto f = open(p);
      f << "episode,mean_sum_se,moving_average\n";
      const auto curve = seed_mean_curve(b);
      const auto ma = moving_average(curve, 100);
      for (std::size_t e = 0; e < curve.size(); ++e) f << e << ',' << curve[e] << ',' << ma[e] << '\n';
      written.push_back(p.string());
    } else {
      if (b.seeds.empty()) continue;
      const fs::path p = fs::path(dir) / ("trajectory_" + name + ".csv");
      open(p) << b.seeds.front().trajectory_csv;
      written.push_back(p.string());
    }
  }
  return written;
}

}  // namespace cfmimo::harness
