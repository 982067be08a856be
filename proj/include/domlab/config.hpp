#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "domlab/assembly.hpp"
#include "domlab/geometry.hpp"
#include "domlab/problem.hpp"

namespace domlab {

struct MeshConfig {
  /// Subdivisions per axis of the production square mesh.
  int n = 64;
  /// Finer mesh for the operator-distance stability check; 0 skips it.
  int refine = 128;
  /// Mesh for the dense semigroup computation (resolution check disabled).
  int coarse_n = 17;
  /// Refinement level of the disk mesh (normal-field family).
  int disk_level = 5;
  /// Edge length must not exceed eps^alpha / resolution_ratio; <= 0 disables.
  double resolution_ratio = 4.0;
};

struct EvolveConfig {
  double eps = 0.0;
  /// "constant", "cosine" (value + amplitude cos(pi x) cos(pi y)) or "cone-sample".
  std::string initial = "constant";
  double value = 0.1;
  double amplitude = 0.5;
  int stride = 100;
};

struct AttractorConfig {
  double delta = 0.1;
  int grid = 8;
  int polyline_points = 32;
  double t_max = 200.0;
  double cap_ratio = 0.5;
};

struct RunConfig {
  std::string scenario = "A";
  /// Resolved problem: the named scenario with any "problem" overrides applied.
  SemilinearProblem problem = scenario_a();
  DiffeoFamily family;
  /// Descending, nonnegative, containing 0.
  std::vector<double> eps{0.1, 0.05, 0.025, 0.0125, 0.0};
  MeshConfig mesh;
  double dt = 0.01;
  double T = 20.0;
  /// 0 selects the automatic cone size 2 xi / m.
  double theta = 0.0;
  int triangle_degree = 4;
  int edge_points = 4;
  DriftConvention drift = DriftConvention::Published;
  int threads = 1;
  std::uint64_t seed = 1;
  bool export_mesh = false;
  bool export_matrices = false;
  int eigen_count = 6;
  int cone_samples = 20;
  MassMode cone_mode = MassMode::Lumped;
  std::vector<double> semigroup_times{0.25, 0.5, 1.0, 2.0, 4.0};
  EvolveConfig evolve;
  AttractorConfig attractor;

  AssemblyOptions assembly_options() const;
  /// Positive sweep values in the given (descending) order.
  std::vector<double> positive_eps() const;
};

/// Parses and validates; throws ConfigError naming the offending key. Unknown
/// keys are rejected. A run manifest (an object with a "config" member) is
/// accepted and its embedded config is used.
RunConfig parse_config(const nlohmann::json& document);
RunConfig load_config(const std::string& path);

/// Fully resolved config; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& config);

/// Throws ConfigError when an invariant fails (eps ordering, mesh resolution, ranges).
void validate(const RunConfig& config);

}  // namespace domlab
