#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tether {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// Run the full acceptance suite, printing one PASS/FAIL line per criterion
/// to `out` plus a closing summary. With `list_only` the criteria are listed
/// without running and the returned vector is empty. All tolerances are
/// multiplied by the TETHER_TOL_SCALE environment variable.
std::vector<CriterionResult> run_acceptance(std::ostream& out, bool list_only);

/// True iff every result passed (false for an empty vector).
bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace tether
