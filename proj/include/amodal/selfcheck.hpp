#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace amodal {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Randomised invariant battery over every module (mask algebra, raster
/// formats, alignment, compositing, metrics, objectives). Deterministic for a
/// given seed.
std::vector<CheckResult> run_selfcheck(std::uint64_t seed);

}  // namespace amodal
