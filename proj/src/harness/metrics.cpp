// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace cfmimo::harness {

namespace fs = std::filesystem;

std::string MetricsBundle::algorithm() const { return config.value("algorithm", std::string("?")); }

std::vector<double> MetricsBundle::pooled_eval() const {
  std::vector<double> out;
  for (const auto& s : seeds) out.insert(out.end(), s.eval_sum_se.begin(), s.eval_sum_se.end());
  return out;
}

std::vector<double> moving_average(const std::vector<double>& curve, std::size_t window) {
  if (window == 0) throw std::invalid_argument("moving_average: window must be positive");
  std::vector<double> out(curve.size());
  double s = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    s += curve[i];
    if (i >= window) s -= curve[i - window];
    out[i] = s / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

std::optional<std::size_t> convergence_point(const std::vector<double>& curve, std::size_t window, double tol) {
  if (window == 0 || curve.size() < window) return std::nullopt;
  // Recomputed per window rather than running sums, so the result does not
  // depend on accumulated rounding over long curves.
  auto window_mean = [&](std::size_t end) {
    double s = 0.0;
    for (std::size_t i = end + 1 - window; i <= end; ++i) s += curve[i];
    return s / static_cast<double>(window);
  };
  const double plateau = window_mean(curve.size() - 1);
  for (std::size_t e = window - 1; e < curve.size(); ++e)
    if (std::abs(window_mean(e) - plateau) <= tol * std::abs(plateau)) return e;
  return curve.size() - 1;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double tail_mean(const std::vector<double>& v, std::size_t n) {
  const std::size_t k = std::min(n, v.size());
  return mean(std::vector<double>(v.end() - static_cast<std::ptrdiff_t>(k), v.end()));
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(const std::vector<double>& v) { return quantile(v, 0.5); }

std::vector<CdfPoint> empirical_cdf(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  std::vector<CdfPoint> out;
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double p = static_cast<double>(i + 1) / n;
    if (!out.empty() && out.back().value == samples[i])
      out.back().probability = p;
    else
      out.push_back({samples[i], p});
  }
  return out;
}

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << std::setprecision(17);
  return f;
}

std::string read_text(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Last column of every data row.
std::vector<double> read_last_column(const fs::path& p) {
  std::istringstream in(read_text(p));
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(std::stod(line.substr(line.find_last_of(',') + 1)));
  }
  return out;
}

std::string suffix(std::uint64_t seed) { return "_seed" + std::to_string(seed) + ".csv"; }

}  // namespace

void write_bundle(const MetricsBundle& b, const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root);
  open_out(root / "resolved_config.json") << b.config.dump(2) << '\n';
  const std::size_t L = b.config.at("env").at("episode_length").get<std::size_t>();
  const std::size_t K = b.config.at("env").at("K").get<std::size_t>();

  nlohmann::json summary = {{"algorithm", b.algorithm()}, {"seeds", nlohmann::json::array()}};
  for (const auto& s : b.seeds) {
    {
      auto f = open_out(root / ("episodes" + suffix(s.seed)));
      f << "episode,sum_se\n";
      for (std::size_t e = 0; e < s.episode_sum_se.size(); ++e) f << e << ',' << s.episode_sum_se[e] << '\n';
    }
    {
      auto f = open_out(root / ("eval" + suffix(s.seed)));
      f << "episode,slot,sum_se\n";
      for (std::size_t i = 0; i < s.eval_sum_se.size(); ++i) f << i / L << ',' << i % L + 1 << ',' << s.eval_sum_se[i] << '\n';
    }
    {
      auto f = open_out(root / ("ue_se" + suffix(s.seed)));
      f << "episode,slot,ue,se\n";
      for (std::size_t i = 0; i < s.eval_ue_se.size(); ++i) {
        const std::size_t slot = i / K;
        f << slot / L << ',' << slot % L + 1 << ',' << i % K << ',' << s.eval_ue_se[i] << '\n';
      }
    }
    open_out(root / ("trajectory" + suffix(s.seed))) << s.trajectory_csv;
    nlohmann::json js = {{"seed", s.seed},
                         {"episodes", s.episode_sum_se.size()},
                         {"final50_sum_se", tail_mean(s.episode_sum_se, 50)},
                         {"eval_samples", s.eval_sum_se.size()},
                         {"eval_median_sum_se", median(s.eval_sum_se)}};
    js["convergence_episode"] = s.convergence_episode ? nlohmann::json(*s.convergence_episode) : nlohmann::json();
    summary["seeds"].push_back(std::move(js));
  }
  open_out(root / "summary.json") << summary.dump(2) << '\n';
}

MetricsBundle read_bundle(const std::string& dir) {
  const fs::path root(dir);
  MetricsBundle b;
  b.config = nlohmann::json::parse(read_text(root / "resolved_config.json"));
  const auto summary = nlohmann::json::parse(read_text(root / "summary.json"));
  for (const auto& js : summary.at("seeds")) {
    SeedMetrics s;
    s.seed = js.at("seed").get<std::uint64_t>();
    s.episode_sum_se = read_last_column(root / ("episodes" + suffix(s.seed)));
    s.eval_sum_se = read_last_column(root / ("eval" + suffix(s.seed)));
    s.eval_ue_se = read_last_column(root / ("ue_se" + suffix(s.seed)));
    s.trajectory_csv = read_text(root / ("trajectory" + suffix(s.seed)));
    if (!js.at("convergence_episode").is_null()) s.convergence_episode = js.at("convergence_episode").get<std::size_t>();
    b.seeds.push_back(std::move(s));
  }
  return b;
}

}  // namespace cfmimo::harness
