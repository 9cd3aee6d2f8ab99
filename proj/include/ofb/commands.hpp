#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ofb {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the ofbsim tool. args excludes the program name.
//   simulate        --config PATH --out DIR [--mode reduced|output] [--no-saturation]
//   sweep           --config PATH [--out DIR] [--epsilons 0.01,0.005,0.001]
//   validate        --config PATH
//   reproduce-fig1  --config PATH --out DIR [--epsilons ...]
// Returns 0 on success, 1 on simulation/validation failure, 2 on usage errors.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ofb
