#pragma once

#include <optional>
#include <string>
#include <vector>

#include "backreact/config.hpp"

namespace backreact {

struct SelfCheck {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// Quick versions of the module examples with closed-form or trivially known
// answers. With a configuration, a final check samples its scenario,
// evolves it for 1e4 steps and compares single- and multi-threaded runs
// bitwise.
std::vector<SelfCheck> run_selftest(const std::optional<RunConfig>& config, unsigned threads);

}  // namespace backreact
