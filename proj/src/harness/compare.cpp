// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/harness/compare.hpp"

#include <cstdio>
#include <ostream>

#include "cfmimo/harness/experiment_config.hpp"
#include "cfmimo/numeric/rng.hpp"

namespace cfmimo::harness {

namespace {

// Keys that must agree for two bundles to be comparable.
constexpr const char* kShared[] = {"env", "seeds", "episodes", "eval_episodes", "eval_full_draws"};

void require_comparable(const MetricsBundle& a, const MetricsBundle& b, Pairing pairing) {
  for (const char* key : kShared) {
    if (pairing == Pairing::kUnpaired && std::string(key) == "seeds") continue;
    const auto& x = a.config.at(key);
    const auto& y = b.config.at(key);
    if (x == y) continue;
    const auto patch = nlohmann::json::diff(x, y);
    const std::string where = patch.empty() ? "" : patch[0].value("path", "");
    throw ConfigError("compare: " + a.algorithm() + " and " + b.algorithm() + " differ in " + key + where);
  }
}

std::vector<double> seed_medians(const MetricsBundle& b) {
  std::vector<double> out;
  for (const auto& s : b.seeds) out.push_back(median(s.eval_sum_se));
  return out;
}

std::optional<std::vector<double>> seed_convergence(const MetricsBundle& b) {
  std::vector<double> out;
  for (const auto& s : b.seeds) {
    if (!s.convergence_episode) return std::nullopt;
    out.push_back(static_cast<double>(*s.convergence_episode));
  }
  return out;
}

// Percentile bootstrap of f(mean_c) / f(mean_r) style ratios over seed resamples.
Interval bootstrap_ratio(const std::vector<double>& c, const std::vector<double>& r, Pairing pairing,
                         std::size_t resamples, std::uint64_t seed, double offset) {
  Interval out;
  out.estimate = mean(c) / mean(r) - offset;
  numeric::RngStream rng(seed, 0x5eedULL);
  std::vector<double> stats;
  stats.reserve(resamples);
  for (std::size_t b = 0; b < resamples; ++b) {
    double sc = 0.0, sr = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const std::size_t j = rng.index(c.size());
      sc += c[j];
      if (pairing == Pairing::kBySeed) sr += r[j];
    }
    if (pairing == Pairing::kUnpaired)
      for (std::size_t i = 0; i < r.size(); ++i) sr += r[rng.index(r.size())];
    stats.push_back((sc / static_cast<double>(c.size())) / (sr / static_cast<double>(r.size())) - offset);
  }
  out.lo = quantile(stats, 0.025);
  out.hi = quantile(stats, 0.975);
  return out;
}

}  // namespace

Comparison compare(const MetricsBundle& candidate, const MetricsBundle& reference, Pairing pairing,
                   std::size_t resamples, std::uint64_t seed) {
  if (candidate.seeds.empty() || reference.seeds.empty()) throw ConfigError("compare: empty bundle");
  require_comparable(candidate, reference, pairing);
  if (pairing == Pairing::kBySeed && candidate.seeds.size() != reference.seeds.size())
    throw ConfigError("compare: paired comparison needs the same seeds");
  Comparison c;
  c.candidate = candidate.algorithm();
  c.reference = reference.algorithm();
  c.candidate_seeds = candidate.seeds.size();
  c.reference_seeds = reference.seeds.size();
  c.candidate_median = median(candidate.pooled_eval());
  c.reference_median = median(reference.pooled_eval());
  c.improvement = bootstrap_ratio(seed_medians(candidate), seed_medians(reference), pairing, resamples, seed, 1.0);
  const auto cc = seed_convergence(candidate);
  const auto rc = seed_convergence(reference);
  if (cc && rc) c.convergence_ratio = bootstrap_ratio(*cc, *rc, pairing, resamples, seed + 1, 0.0);
  return c;
}

void write_comparison_table(std::ostream& os, const std::vector<Comparison>& rows) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %-12s %10s %10s %22s %22s\n", "candidate", "reference", "median_c", "median_r",
                "improvement % [95%]", "convergence ratio");
  os << buf;
  for (const auto& c : rows) {
    char conv[64] = "n/a";
    if (c.convergence_ratio)
      std::snprintf(conv, sizeof conv, "%.3f [%.3f, %.3f]", c.convergence_ratio->estimate, c.convergence_ratio->lo,
                    c.convergence_ratio->hi);
    char imp[64];
    std::snprintf(imp, sizeof imp, "%+.2f [%+.2f, %+.2f]", 100.0 * c.improvement.estimate, 100.0 * c.improvement.lo,
                  100.0 * c.improvement.hi);
    std::snprintf(buf, sizeof buf, "%-12s %-12s %10.4f %10.4f %22s %22s\n", c.candidate.c_str(), c.reference.c_str(),
                  c.candidate_median, c.reference_median, imp, conv);
    os << buf;
  }
}

nlohmann::json to_json(const Comparison& c) {
  auto iv = [](const Interval& i) { return nlohmann::json{{"estimate", i.estimate}, {"lo", i.lo}, {"hi", i.hi}}; };
  nlohmann::json j = {{"candidate", c.candidate},
                      {"reference", c.reference},
                      {"candidate_seeds", c.candidate_seeds},
                      {"reference_seeds", c.reference_seeds},
                      {"candidate_median", c.candidate_median},
                      {"reference_median", c.reference_median},
                      {"improvement", iv(c.improvement)}};
  j["convergence_ratio"] = c.convergence_ratio ? iv(*c.convergence_ratio) : nlohmann::json();
  return j;
}

}  // namespace cfmimo::harness
