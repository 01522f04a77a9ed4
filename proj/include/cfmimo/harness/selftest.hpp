// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cfmimo::harness {

/// Quick runs the same checks at reduced sample counts; Monte-Carlo tolerances
/// widen with 1/sqrt(draws) and the learning suites become smoke runs.
enum class SuiteMode { kQuick, kFull };

struct SelftestOptions {
  SuiteMode mode = SuiteMode::kFull;
  /// Finished learning runs are stored here, keyed by the resolved config and
  /// the identity of the running executable. Empty disables the cache.
  std::string cache_dir;
  std::ostream* log = nullptr;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  /// Budget the runtime is held to (full mode only; 0 means none).
  double budget_seconds = 0.0;
  /// Hash of every number the suite computed, for the determinism suite.
  std::uint64_t digest = 0;
};

/// gradient, pi_pe, estimation, se_oracle, constraints, learning, joint_vs_pi,
/// compression, determinism.
const std::vector<std::string>& suite_names();

/// Throws std::invalid_argument for an unknown name.
CheckResult run_suite(const std::string& name, const SelftestOptions& opts = {});

/// "PASS gradient (12.3 s): ..." or "FAIL ...".
std::string format_result(const CheckResult& r);

}  // namespace cfmimo::harness
