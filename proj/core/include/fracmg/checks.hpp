#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fracmg {

struct CheckOptions {
  std::uint64_t seed = 20240521;
  /// Random vectors per randomized property.
  int samples = 5;
};

struct CheckResult {
  std::string name;
  std::string detail;  ///< which case: level, s, beta
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
};

/// Seed-pinned property suite over small 1D and 2D levels: Gram symmetry of
/// K, H and G, coercivity of H, G G^{-1} = I, pi E = id, the eigenvalue
/// sandwich of (H, G) and MGCG against a dense direct solve.
std::vector<CheckResult> run_property_checks(const CheckOptions& options = {});

}  // namespace fracmg
