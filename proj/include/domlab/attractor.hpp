#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "domlab/assembly.hpp"
#include "domlab/steady.hpp"

namespace domlab {

enum class Provenance { Equilibrium, ManifoldSample, Flowed };

std::string to_string(Provenance p);

struct CloudPoint {
  Vector state;
  Provenance tag = Provenance::Equilibrium;
  /// Equilibrium the point belongs to or emanates from.
  int source = -1;
  /// Flow time since the trajectory start (0 for equilibria).
  double time = 0.0;
};

/// Discrete trajectory from near an unstable equilibrium to its limit. The
/// stored states are consecutive IMEX states, thinned to a minimum L2 spacing.
struct Connection {
  int from = -1;
  int to = -1;
  int direction = 0;
  int sign = 1;
  std::vector<Vector> states;
  std::vector<double> times;
};

struct AttractorCloud {
  double eps = 0.0;
  std::string scenario;
  int nodes = 0;
  double mu1 = 0.0;
  std::vector<Equilibrium> equilibria;
  std::vector<LinearizationSpectrum> spectra;
  std::vector<Connection> connections;
  std::vector<CloudPoint> points;
  /// Every equilibrium passed the hyperbolicity gap threshold.
  bool hyperbolic = true;

  int count(Provenance tag) const;
  std::vector<Vector> states() const;
};

struct AttractorOptions {
  SeedOptions seeds;
  NewtonOptions newton;
  int spectrum_k = 6;
  double gap_threshold = 1e-4;
  /// Manifold samples at L2 distance delta * j / grid from the equilibrium, j = 1..grid.
  double delta = 0.1;
  int grid = 8;
  /// Trajectories start at distance start_fraction * delta / grid along the unstable direction.
  double start_fraction = 1e-3;
  double dt = 0.01;
  double t_max = 200.0;
  /// Settled once ||u_{k+1} - u_k||_sup / dt < settle_rate.
  double settle_rate = 1e-6;
  /// Minimum L2 spacing between stored trajectory states.
  double record_spacing = 0.005;
  /// Arc-length resampling of each connection.
  int polyline_points = 32;
  /// Endpoint-to-equilibrium matching radius (discrete H1).
  double match_tolerance = 1e-3;
  MassMode mode = MassMode::Consistent;
  int threads = 1;
};

/// Equilibria, unstable-manifold samples and resampled connecting orbits of a
/// gradient system. Throws GateFailure when mu1 <= 0 and ConvergenceFailure
/// when a connecting trajectory does not settle within t_max.
AttractorCloud approximate_attractor(const DiscreteOperator& op, const SemilinearProblem& problem,
                                     const AttractorOptions& options = {});

/// sup_{a in A} inf_{b in B} |a - b|. Zero for empty A, +inf for empty B.
/// Throws std::invalid_argument on a size mismatch with the norms' mesh.
double semidistance(const std::vector<Vector>& a, const std::vector<Vector>& b, const FieldNorms& norms, NormKind kind,
                    int threads = 1);

struct SemidistanceResult {
  /// delta(A_eps, A_0)
  double forward = 0.0;
  /// delta(A_0, A_eps)
  double backward = 0.0;
  NormKind norm = NormKind::L2;
};

SemidistanceResult semidistances(const AttractorCloud& cloud, const AttractorCloud& reference, const FieldNorms& norms,
                                 NormKind kind, int threads = 1);

/// Distance from u to the polygonal curve through `vertices`.
double polyline_distance(const Vector& u, const std::vector<Vector>& vertices, const FieldNorms& norms,
                         NormKind kind);

/// Flows every cloud point for time T and returns the largest distance from a
/// flowed point to the cloud (points and connection polylines).
double invariance_defect(const DiscreteOperator& op, const SemilinearProblem& problem, const AttractorCloud& cloud,
                         double T, const AttractorOptions& options, NormKind kind = NormKind::L2);

enum class Verdict { Pass, Fail, Inconclusive };

std::string to_string(Verdict v);

struct SweepOptions {
  AttractorOptions attractor;
  std::vector<NormKind> norms{NormKind::L2, NormKind::H1, NormKind::Sup};
  /// Norm that decides the verdict.
  NormKind primary = NormKind::L2;
  /// Smallest-eps value must be below cap_ratio times the largest-eps value...
  double cap_ratio = 0.5;
  /// ...and below this absolute cap.
  double absolute_cap = INFINITY;
  /// Values at or below floor count as zero in the trend checks.
  double floor = 1e-10;
  /// Independent per-eps pipelines run concurrently.
  int threads = 1;
};

struct SweepRow {
  double eps = 0.0;
  NormKind norm = NormKind::L2;
  double forward = NAN;
  double backward = NAN;
  /// delta(E_eps, E_0) between equilibrium sets; bounded by `forward`.
  double equilibria_forward = NAN;
  bool ok = true;
  std::string failure;
};

struct SweepReport {
  std::vector<double> eps;
  std::vector<SweepRow> rows;
  std::vector<AttractorCloud> clouds;
  Verdict verdict = Verdict::Fail;
  std::vector<std::string> notes;

  std::vector<const SweepRow*> column(NormKind kind) const;
};

/// Builds a cloud for every operator (one of them at eps = 0) and checks that
/// both semidistances to the eps = 0 cloud decrease as eps decreases. Pipeline
/// failures are recorded per eps; lost hyperbolicity yields INCONCLUSIVE.
SweepReport continuity_sweep(const std::vector<const DiscreteOperator*>& ops, const SemilinearProblem& problem,
                             const SweepOptions& options = {});

/// The trend rule used by continuity_sweep: values ordered by decreasing eps
/// must strictly decrease unless both sit at or below `floor`.
bool decreasing_with_floor(const std::vector<double>& values, double floor);

}  // namespace domlab
