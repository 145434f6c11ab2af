#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace tws {

// Run metadata folded into every JSON artifact. Output is deterministic for
// identical config bytes and flags, except for the wall-clock timings.
struct RunReport {
  std::string model_hash;
  std::string command;                                  // echoed invocation
  std::vector<std::string> outputs;                     // files written
  std::vector<std::pair<std::string, double>> timings;  // phase -> seconds
  std::vector<std::string> warnings;
};

// Dispatches one subcommand (validate | bounds | certify | solve | speed |
// profile | reg-sweep) and returns the process exit code: 0 success, 1 usage,
// 2 model validation failure, 3 numerical failure, 4 refused operation.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace tws
