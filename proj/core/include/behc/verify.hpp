#pragma once

#include <string>
#include <vector>

namespace behc {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;  // short evidence string, filled on pass and fail alike
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
};

// Fast self-checks of the library invariants, grouped by module. Suites:
// "qgraph", "model", "program", "solver", "noisy", or "all".
VerifyReport run_verify(const std::string& suite);

std::vector<std::string> verify_suites();

}  // namespace behc
