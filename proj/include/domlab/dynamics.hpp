#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "domlab/assembly.hpp"
#include "domlab/linalg.hpp"
#include "domlab/problem.hpp"

namespace domlab {

/// First-order IMEX step (M + dt S) u+ = M u + dt (F(u) + G(u)). The
/// factorisation is computed once per (operator, dt, mass mode) and shared
/// read-only, so one stepper can drive many trajectories concurrently.
class ImexStepper {
 public:
  /// Throws std::invalid_argument unless dt > 0 (backward evolution is refused).
  ImexStepper(const DiscreteOperator& op, SemilinearProblem problem, double dt, MassMode mode = MassMode::Consistent);

  /// Throws BlowUp (time NaN) on a non-finite state.
  Vector step(const Vector& u) const;

  const DiscreteOperator& op() const noexcept { return *op_; }
  const SemilinearProblem& problem() const noexcept { return problem_; }
  double dt() const noexcept { return dt_; }
  MassMode mode() const noexcept { return mode_; }
  const SparseMatrix& mass() const noexcept { return mass_; }

 private:
  struct Factor;
  const DiscreteOperator* op_;
  SemilinearProblem problem_;
  double dt_;
  MassMode mode_;
  SparseMatrix mass_;
  std::shared_ptr<const Factor> factor_;
};

/// One step with a fresh factorisation.
Vector step_imex(const DiscreteOperator& op, const SemilinearProblem& problem, const Vector& u, double dt,
                 MassMode mode = MassMode::Consistent);

/// Comparison cone { |u| <= theta phi } built from the positive first
/// eigenfunction of the dissipativity eigenproblem.
struct ComparisonCone {
  double theta = 0.0;
  /// Sup-normalised, strictly positive.
  Vector phi;
  double m = 0.0;
  double mu1 = 0.0;
  double xi = 0.0;
  MassMode mode = MassMode::Lumped;

  bool admissible() const noexcept { return theta * m >= xi; }
  /// max_i |u_i| - theta phi_i
  double margin(const Vector& u) const;
  double margin(const Vector& u, double theta_other) const;
};

struct ConeOptions {
  /// User override; the effective theta is max(2 xi / m, theta).
  double theta = 0.0;
  MassMode mode = MassMode::Lumped;
  EigenSolverOptions solver;
};

/// Throws GateFailure if mu1 <= 0 (dissipativity not verified) or the
/// eigenfunction changes sign (Perron property lost, usually under-resolution).
ComparisonCone build_cone(const DiscreteOperator& op, const SemilinearProblem& problem, const ConeOptions& options = {});

struct Trajectory {
  std::vector<double> times;
  std::vector<double> sup_norms;
  /// Empty unless a cone is monitored.
  std::vector<double> cone_margins;
  /// ||u_{k+1} - u_k||_{L2} / dt, recorded from the first step on (entry 0 is NaN).
  std::vector<double> rates;
  std::vector<double> snapshot_times;
  std::vector<Vector> snapshots;
  Vector final_state;
  bool settled = false;
};

struct EvolveOptions {
  double T = 1.0;
  /// Snapshot every `stride` steps (first and last state always kept); 0 disables snapshots.
  int stride = 10;
  const ComparisonCone* cone = nullptr;
  /// When positive, stop once ||u_{k+1} - u_k||_sup / dt drops below this value.
  double settle_rate = 0.0;
};

/// Repeated IMEX steps; the step count is round(T / dt) with T = 0 giving
/// only the initial state. Throws BlowUp carrying the failure time.
Trajectory evolve(const ImexStepper& stepper, const Vector& u0, const EvolveOptions& options);

struct InvarianceOptions {
  int samples = 20;
  double T = 20.0;
  double dt = 0.01;
  std::uint64_t seed = 1;
  /// Contraction target theta_bar = factor * theta.
  double contraction_factor = 0.5;
  int threads = 1;
};

struct InvarianceReport {
  double theta = 0.0;
  double theta_bar = 0.0;
  bool theta_bar_admissible = false;
  /// max over samples and time of max_i |u_i| - theta phi_i
  double max_margin = 0.0;
  double max_sup_norm = 0.0;
  /// First time after which every trajectory stays in the theta_bar cone; +inf if never.
  double contraction_time = 0.0;
  std::vector<double> entry_times;
  int samples = 0;
};

/// Node-wise uniform samples in [-theta phi, theta phi], smoothed by one
/// damped Jacobi pass on the ratio u / (theta phi) with the reference
/// stiffness weights (a convex combination, so samples stay in the cone).
std::vector<Vector> cone_samples(const DiscreteOperator& op, const ComparisonCone& cone, int count,
                                 std::uint64_t seed);

InvarianceReport check_invariance(const DiscreteOperator& op, const SemilinearProblem& problem,
                                  const ComparisonCone& cone, const InvarianceOptions& options = {});

/// Runs body(i) for i in [0, count) on up to `threads` workers. Results must be
/// written to slot i so the outcome does not depend on scheduling.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

}  // namespace domlab
