// SPDX-License-Identifier: Apache-2.0
// One PASS/FAIL line per acceptance criterion. Tolerances and budgets live in
// the suites themselves (src/harness/selftest.cpp).
#include <iostream>

#include "CLI11.hpp"
#include "cfmimo/harness/selftest.hpp"

int main(int argc, char** argv) {
  using namespace cfmimo::harness;
  CLI::App app{"Acceptance checks"};
  std::vector<std::string> only;
  std::string cache;
  bool verbose = false;
  app.add_option("--only", only, "Run just these suites")->check(CLI::IsMember(suite_names()));
  app.add_option("--cache", cache, "Directory for cached learning runs");
  app.add_flag("-v,--verbose", verbose, "Per-module progress");
  CLI11_PARSE(app, argc, argv);
  if (only.empty()) only = suite_names();

  SelftestOptions opts;
  opts.mode = SuiteMode::kFull;
  opts.cache_dir = cache;
  opts.log = verbose ? &std::cout : nullptr;
  bool all = true;
  for (const auto& name : only) {
    const auto r = run_suite(name, opts);
    std::cout << format_result(r) << std::endl;
    all = all && r.passed;
  }
  return all ? 0 : 1;
}
