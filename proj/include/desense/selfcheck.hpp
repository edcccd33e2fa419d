#pragma once

#include <string>
#include <vector>

namespace desense {

struct CheckResult {
  std::string name;
  bool pass = false;
  double margin = 0.0;     // worst observed value of the checked quantity
  double threshold = 0.0;  // limit the margin is held against
  std::string detail;
};

/// Built-in verification suite: gain reduction identities, gain stationarity
/// under finite-difference probing, the implicit-gain residual, the
/// single-parameter equivalence of the two desensitized gains, one-step cost
/// optimality, and agreement of propagated sensitivities with the
/// frozen-gain finite-difference oracle.
///
/// gain_perturbation deliberately corrupts the gains under test (negative
/// control for the harness itself); 0 checks the real implementation.
std::vector<CheckResult> run_self_checks(double gain_perturbation = 0.0);

}  // namespace desense
