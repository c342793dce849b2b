#pragma once

#include <string>
#include <vector>

namespace optgrowth {

struct SelftestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Fast oracle and property checks over every module, on small meshes.
std::vector<SelftestResult> run_selftest();

}  // namespace optgrowth
