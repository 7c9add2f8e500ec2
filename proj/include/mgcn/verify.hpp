#pragma once
// Property suites, one per acceptance criterion, with machine-readable reports.
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mgcn {

/// One measured quantity compared against a limit.
struct Check {
  std::string name;
  double value = 0.0;
  /// "<", "<=", ">", ">=" or "=="
  std::string relation;
  double limit = 0.0;
  /// Diagnostic checks are reported but do not decide the suite.
  bool gating = true;
  bool passed = false;
};

struct SuiteResult {
  int criterion = 0;
  std::string suite;
  bool passed = false;
  double seconds = 0.0;
  std::vector<Check> checks;
  /// Free-form key/value findings (breakdowns, per-seed scores, ...).
  std::vector<std::pair<std::string, std::string>> info;
  /// Set when the suite aborted with an exception.
  std::string error;
};

struct VerifyOptions {
  std::uint64_t seed = 7;
  /// Learning suite size; the criterion itself asks for 5 seeds x 60 epochs.
  int learning_seeds = 5;
  int learning_epochs = 60;
  /// Progress messages; may be empty.
  std::function<void(const std::string&)> log;
};

/// Suite names in criterion order (criterion k is entry k - 1).
const std::vector<std::string>& suite_names();
/// Criterion number of a suite name; throws ContractViolation if unknown.
int suite_criterion(std::string_view name);

SuiteResult run_suite(int criterion, const VerifyOptions& options);
SuiteResult run_suite(std::string_view name, const VerifyOptions& options);

std::string report_json(const std::vector<SuiteResult>& results, std::uint64_t seed);
/// "[PASS] 3 invariance (12.3 s)" or "[FAIL] ..." followed by the failed checks.
std::string summary_line(const SuiteResult& r);

}  // namespace mgcn
