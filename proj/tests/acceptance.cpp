// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "larnet/check/suites.hpp"

#ifndef LARNET_CLI_PATH
#error "LARNET_CLI_PATH must point at the larnet executable"
#endif

using larnet::check::SuiteResult;

namespace {

SuiteResult selftest_cli() {
  SuiteResult r{13, "`larnet selftest` end to end", false, {}, 0.0};
  const std::string cmd = std::string("\"") + LARNET_CLI_PATH + "\" selftest > selftest_output.txt 2>&1";
  const auto t0 = std::chrono::steady_clock::now();
  const int status = std::system(cmd.c_str());
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.passed = status == 0 && r.seconds <= 120.0;
  r.detail = "exit status " + std::to_string(status) + ", " + larnet::check::sci(r.seconds) +
             " s (limit 120 s); log in selftest_output.txt";
  return r;
}

}  // namespace

int main() {
  using namespace larnet::check;
  std::vector<SuiteResult> results = run_property_suites();
  const SweepTable sweep = run_default_sweep(10);
  results.push_back(gate_ordering_suite(sweep));
  results.push_back(architecture_ordering_suite(sweep));
  results.push_back(selftest_cli());
  std::sort(results.begin(), results.end(), [](const SuiteResult& a, const SuiteResult& b) { return a.id < b.id; });

  int failed = 0;
  for (const SuiteResult& r : results) {
    print_result(r);
    failed += r.passed ? 0 : 1;
  }
  std::printf("%zu criteria, %d failed\n", results.size(), failed);
  return failed == 0 ? 0 : 1;
}
