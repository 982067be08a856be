#pragma once

#include <vector>

#include "domlab/assembly.hpp"
#include "domlab/dynamics.hpp"
#include "domlab/linalg.hpp"

namespace domlab {

struct NewtonOptions {
  /// Converged when ||M_L^{-1} R(u)||_inf <= tolerance * (1 + ||u||_inf).
  double tolerance = 1e-10;
  int max_iterations = 50;
  MassMode mode = MassMode::Consistent;
};

struct Equilibrium {
  Vector state;
  double eps = 0.0;
  double residual_norm = 0.0;
  int newton_iters = 0;
  /// ||M_L^{-1} R||_inf before each iteration and at the end.
  std::vector<double> residual_history;
};

/// Nodal strong-form residual ||M_L^{-1} R(u)||_inf.
double residual_norm(const DiscreteOperator& op, const Vector& u, const SemilinearProblem& problem,
                     MassMode mode = MassMode::Consistent);

/// Damped Newton with half-step backtracking on the residual norm. Throws
/// ConvergenceFailure after the iteration cap or on a singular Newton system.
Equilibrium newton_equilibrium(const DiscreteOperator& op, const SemilinearProblem& problem, const Vector& guess,
                               const NewtonOptions& options = {});

struct SeedOptions {
  /// Constant seeds spread uniformly over [-range, range].
  int constant_seeds = 21;
  double range = 1.0;
  /// Also seed from e +- 0.1 v for the bottom eigenvectors v of every equilibrium found.
  bool eigenvector_perturbations = false;
  int perturbation_modes = 3;
  /// Equilibria closer than this in the discrete H1 norm are merged.
  double dedup = 1e-6;
  int threads = 1;
};

struct EquilibriumSearch {
  /// Sorted by M-weighted mean value.
  std::vector<Equilibrium> equilibria;
  std::vector<double> failed_seeds;
};

EquilibriumSearch find_all_equilibria(const DiscreteOperator& op, const SemilinearProblem& problem,
                                      const SeedOptions& seeds, const NewtonOptions& newton = {});

struct LinearizationSpectrum {
  std::vector<EigenPair> eigenpairs;
  bool hyperbolic = false;
  double gap = 0.0;
  int unstable_count = 0;
};

/// k generalised eigenpairs (S - dF - dG) v = lambda M v with the smallest real
/// parts. The shift sits below a Rayleigh-quotient lower estimate so the
/// shift-invert iteration targets the bottom of the spectrum.
LinearizationSpectrum linearization_spectrum(const DiscreteOperator& op, const SemilinearProblem& problem,
                                             const Equilibrium& eq, int k = 6, double gap_threshold = 1e-4,
                                             MassMode mode = MassMode::Consistent);

struct PatchOptions {
  /// Patch radius; samples at s = delta * j / grid, j = 1..grid.
  double delta = 0.1;
  int grid = 8;
  double dt = 0.01;
  /// A flowed sample has settled once ||du/dt||_sup < settle_rate.
  double settle_rate = 1e-6;
  double t_max = 200.0;
  MassMode mode = MassMode::Consistent;
  int threads = 1;
};

struct PatchSample {
  int direction = 0;
  int sign = 1;
  double s = 0.0;
  Vector point;
  Vector endpoint;
  bool settled = false;
  double settle_time = 0.0;
  /// Index into the equilibria passed to unstable_patch, -1 when none matched.
  int limit = -1;
};

struct UnstableManifoldPatch {
  Equilibrium base;
  std::vector<Vector> directions;
  std::vector<PatchSample> samples;
  int unsettled = 0;
};

/// Samples e +- s v_i over the unstable directions and flows each until it
/// settles. Endpoints are matched to `known` equilibria (H1 distance below
/// match_tolerance). Throws std::invalid_argument for a stable equilibrium.
UnstableManifoldPatch unstable_patch(const DiscreteOperator& op, const SemilinearProblem& problem,
                                     const Equilibrium& eq, const LinearizationSpectrum& spectrum,
                                     const PatchOptions& options = {}, const std::vector<Equilibrium>& known = {},
                                     double match_tolerance = 1e-3);

struct BranchPoint {
  double eps = 0.0;
  Equilibrium eq;
  /// ||e(eps) - e(0)||_H1
  double distance_to_root = 0.0;
  LinearizationSpectrum spectrum;
};

struct EquilibriumBranch {
  int id = 0;
  std::vector<BranchPoint> points;
  bool jump_detected = false;
  bool failed = false;
  std::string failure;
};

struct ContinuationOptions {
  NewtonOptions newton;
  /// Consecutive states farther apart than this (discrete H1) flag a branch switch.
  double jump_threshold = 0.5;
  int spectrum_k = 6;
  double gap_threshold = 1e-4;
};

/// Continues every root found at eps = 0 through `ops` (ordered by increasing
/// eps, ops.front() at eps = 0) with the previous solution as predictor.
std::vector<EquilibriumBranch> continue_branches(const std::vector<const DiscreteOperator*>& ops,
                                                 const SemilinearProblem& problem,
                                                 const std::vector<Equilibrium>& roots,
                                                 const ContinuationOptions& options = {});

/// M-weighted mean of a field, used for ordering equilibria.
double field_mean(const DiscreteOperator& op, const Vector& u);

}  // namespace domlab
