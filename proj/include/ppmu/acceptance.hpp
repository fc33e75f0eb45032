// Seeded desk-scale verification suite: convergence runs on zoo sources plus
// exact property checks. Used by the acceptance test binary and by the CLI
// selftest subcommand.
#pragma once

#include <string>
#include <vector>

#include "ppmu/sources.hpp"

namespace ppmu {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

struct AcceptanceOptions {
  std::string zoo_path;
};

/// Runs every acceptance criterion; one result per criterion, in order.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options);

}  // namespace ppmu
