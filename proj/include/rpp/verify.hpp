#pragma once

#include <string>
#include <vector>

namespace rpp {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Property suites behind the `verify` CLI subcommand. Suites: "equivalence",
/// "lyapunov", "chebyshev", "gradients", or "all". Throws
/// std::invalid_argument for an unknown suite name; check failures are
/// report entries, not errors.
std::vector<CheckResult> run_verify_suite(const std::string& suite);

}  // namespace rpp
