// domlab command-line driver: one subcommand per pipeline stage, every run
// configured from a JSON file and recorded in out/manifest.json.

#include <CLI11.hpp>
#include <Eigen/Core>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "commands.hpp"
#include "domlab/errors.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kGate = 3 };

std::string compiler_id() {
#if defined(__clang__)
  return "clang " __clang_version__;
#elif defined(__GNUC__)
  return "gcc " __VERSION__;
#else
  return "unknown";
#endif
}

const char* describe(const std::string& command) {
  if (command == "coeffs") return "pull-back coefficients and boundary ratio on a lattice";
  if (command == "hypotheses") return "C1 distance and grad Jh sup along the eps sweep";
  if (command == "eigen") return "first eigenpairs of the dissipativity problem (gate: mu1 > 0)";
  if (command == "opdist") return "operator distance and dense semigroup distance";
  if (command == "evolve") return "one IMEX trajectory";
  if (command == "cone") return "comparison-cone invariance and contraction";
  if (command == "equilibria") return "equilibria, spectra, branches and the unstable patch";
  if (command == "attractor") return "attractor clouds and the semidistance sweep";
  return "every stage in sequence";
}

void write_manifest(const domlab::cli::RunContext& ctx, const std::string& command, const std::string& status,
                    const std::string& error) {
  nlohmann::json m;
  m["tool"] = "domlab";
  m["version"] = kVersion;
  m["command"] = command;
  m["config"] = domlab::to_json(ctx.config);
  m["seed"] = ctx.config.seed;
  m["threads"] = ctx.config.threads;
  m["versions"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"compiler", compiler_id()}};
  m["timings"] = ctx.timings;
  m["artifacts"] = ctx.artifacts;
  m["status"] = status;
  if (!error.empty()) m["error"] = error;
  std::ofstream(ctx.out / "manifest.json") << m.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain-perturbation laboratory for semilinear parabolic problems"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "domlab-out";
  int threads = 0;
  std::int64_t seed = -1;
  for (const auto& name : domlab::cli::kCommands) {
    auto* sub = app.add_subcommand(name, describe(name));
    sub->add_option("-c,--config", config_path, "JSON config or a previous manifest.json")->required();
    sub->add_option("-o,--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("-j,--threads", threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_option("-s,--seed", seed, "random seed (overrides the config)")->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  domlab::cli::RunContext ctx;
  try {
    ctx.config = domlab::load_config(config_path);
    if (threads > 0) ctx.config.threads = threads;
    if (seed >= 0) ctx.config.seed = static_cast<std::uint64_t>(seed);
    domlab::validate(ctx.config);
  } catch (const std::exception& e) {
    std::cerr << "domlab: config error: " << e.what() << '\n';
    return kConfig;
  }

  ctx.out = out_dir;
  try {
    std::filesystem::create_directories(ctx.out);
    std::filesystem::remove(ctx.out / "FAILED");
  } catch (const std::exception& e) {
    std::cerr << "domlab: " << e.what() << '\n';
    return kOther;
  }

  int code = kOk;
  std::string error;
  try {
    domlab::cli::run_command(command, ctx);
  } catch (const domlab::ConfigError& e) {
    error = e.what();
    code = kConfig;
  } catch (const domlab::Error& e) {
    error = e.what();
    code = kGate;
  } catch (const std::exception& e) {
    error = e.what();
    code = kOther;
  }

  write_manifest(ctx, command, code == kOk ? "ok" : "failed", error);
  if (code != kOk) {
    std::ofstream(ctx.out / "FAILED") << error << '\n';
    std::cerr << "domlab " << command << ": " << error << '\n';
  }
  return code;
}
