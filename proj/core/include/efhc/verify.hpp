#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace efhc {

/// Test hook: lets the suite prove it catches broken inputs.
enum class FaultInjection { None, AsymmetricWeight };

struct VerificationOptions {
  int random_matrix_cases = 1000;
  int max_devices = 20;
  int gradient_checks = 100;
  std::uint64_t seed = 12345;
  FaultInjection fault = FaultInjection::None;
};

struct CheckResult {
  std::string name;
  bool ok = false;
  std::string detail;
};

struct VerificationSuite {
  std::vector<CheckResult> checks;
  bool ok() const {
    for (const CheckResult& c : checks)
      if (!c.ok) return false;
    return !checks.empty();
  }
};

/// Runs the standing-assumption checks: transition-weight properties over
/// random snapshot/flag pairs, gradient agreement with central differences
/// for every task kind, convexity of the losses, step-size criteria, and
/// windowed connectivity of generated topologies.
VerificationSuite run_verification_suite(const VerificationOptions& opts);

void print_verification(std::ostream& out, const VerificationSuite& suite);

}  // namespace efhc
