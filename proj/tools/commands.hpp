#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "domlab/config.hpp"

namespace domlab::cli {

inline const std::vector<std::string> kCommands{"coeffs",     "hypotheses", "eigen",     "opdist", "evolve",
                                                "cone",       "equilibria", "attractor", "all"};

struct RunContext {
  RunConfig config;
  std::filesystem::path out;
  /// Stage name -> wall seconds. Kept out of the CSVs so those stay bit-identical.
  nlohmann::json timings = nlohmann::json::object();
  std::vector<std::string> artifacts;
};

/// Runs one subcommand, writing CSVs into ctx.out. Gate failures surface as
/// domlab::GateFailure (or UnderResolved / ConvergenceFailure / BlowUp) after
/// the rows computed so far have been written.
void run_command(const std::string& command, RunContext& ctx);

}  // namespace domlab::cli
