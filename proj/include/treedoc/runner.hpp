#pragma once

// Scenario and fuzz drivers producing JSON-lines reports.

#include <string>
#include <string_view>
#include <vector>

#include "treedoc/fuzz.hpp"

namespace treedoc {

struct RunOptions {
  bool metrics = false;
};

struct RunOutcome {
  int exit_code = 0;                // 0 pass, 1 check failure, 2 parse/usage error
  std::vector<std::string> report;  // JSON lines
  std::vector<std::string> trace;   // replayable event lines (fuzz only)
};

RunOutcome run_scenario(std::string_view text, const RunOptions& opt = {});
RunOutcome run_fuzz(const FuzzOptions& fuzz_opt, const RunOptions& opt = {});

/// Trace file text: a header comment line, then one event per line.
std::string trace_text(const RunOutcome& fuzz_outcome);

}  // namespace treedoc
