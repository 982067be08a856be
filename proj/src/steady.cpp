#include "domlab/steady.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include <Eigen/SparseLU>

#include "domlab/errors.hpp"

namespace domlab {

double field_mean(const DiscreteOperator& op, const Vector& u) {
  return op.lumped_mass.dot(u) / op.lumped_mass.sum();
}

double residual_norm(const DiscreteOperator& op, const Vector& u, const SemilinearProblem& problem, MassMode mode) {
  const Vector r = stationary_residual(op, u, problem, mode);
  return r.cwiseQuotient(op.lumped_mass).cwiseAbs().maxCoeff();
}

Equilibrium newton_equilibrium(const DiscreteOperator& op, const SemilinearProblem& problem, const Vector& guess,
                               const NewtonOptions& options) {
  if (guess.size() != op.size() || !guess.allFinite()) {
    throw std::invalid_argument("newton_equilibrium: guess must be a finite field on the operator's mesh");
  }
  Equilibrium eq;
  eq.eps = op.eps;
  Vector u = guess;
  double norm = residual_norm(op, u, problem, options.mode);
  for (int iter = 0;; ++iter) {
    eq.residual_history.push_back(norm);
    if (norm <= options.tolerance * (1.0 + u.cwiseAbs().maxCoeff())) {
      eq.state = u;
      eq.residual_norm = norm;
      eq.newton_iters = iter;
      return eq;
    }
    if (iter == options.max_iterations) break;

    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(stationary_jacobian(op, u, problem, options.mode));
    if (lu.info() != Eigen::Success) throw ConvergenceFailure("singular Newton system (near a bifurcation?)");
    const Vector step = lu.solve(Vector(-stationary_residual(op, u, problem, options.mode)));
    if (lu.info() != Eigen::Success || !step.allFinite()) {
      throw ConvergenceFailure("singular Newton system (near a bifurcation?)");
    }

    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 30; ++halving, lambda *= 0.5) {
      const Vector trial = u + lambda * step;
      double trial_norm = INFINITY;
      try {
        trial_norm = residual_norm(op, trial, problem, options.mode);
      } catch (const BlowUp&) {
        continue;
      }
      if (trial_norm < norm) {
        u = trial;
        norm = trial_norm;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << "Newton line search stalled at residual " << norm;
      throw ConvergenceFailure(msg.str());
    }
  }
  std::ostringstream msg;
  msg << "Newton did not converge in " << options.max_iterations << " iterations (residual " << norm << ")";
  throw ConvergenceFailure(msg.str());
}

namespace {

// Appends eq unless an equilibrium within `dedup` (discrete H1) is already present.
bool insert_unique(std::vector<Equilibrium>& list, Equilibrium eq, const FieldNorms& norms, double dedup) {
  for (const auto& existing : list) {
    if (norms.distance(existing.state, eq.state, NormKind::H1) <= dedup) return false;
  }
  list.push_back(std::move(eq));
  return true;
}

}  // namespace

EquilibriumSearch find_all_equilibria(const DiscreteOperator& op, const SemilinearProblem& problem,
                                      const SeedOptions& seeds, const NewtonOptions& newton) {
  const FieldNorms norms(*op.mesh);
  EquilibriumSearch search;

  std::vector<Vector> guesses;
  std::vector<double> labels;
  const int count = std::max(1, seeds.constant_seeds);
  for (int i = 0; i < count; ++i) {
    const double c = count == 1 ? 0.0 : -seeds.range + 2.0 * seeds.range * i / (count - 1);
    guesses.push_back(Vector::Constant(op.size(), c));
    labels.push_back(c);
  }

  auto solve_all = [&](const std::vector<Vector>& starts, const std::vector<double>& tags) {
    std::vector<std::optional<Equilibrium>> results(starts.size());
    parallel_for(static_cast<int>(starts.size()), seeds.threads, [&](int i) {
      try {
        results[i] = newton_equilibrium(op, problem, starts[i], newton);
      } catch (const ConvergenceFailure&) {
      }
    });
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (results[i]) {
        insert_unique(search.equilibria, std::move(*results[i]), norms, seeds.dedup);
      } else {
        search.failed_seeds.push_back(tags[i]);
      }
    }
  };
  solve_all(guesses, labels);

  if (seeds.eigenvector_perturbations) {
    std::vector<Vector> extra;
    std::vector<double> tags;
    for (const auto& eq : search.equilibria) {
      const auto spectrum = linearization_spectrum(op, problem, eq, seeds.perturbation_modes, 1e-4, newton.mode);
      for (const auto& pair : spectrum.eigenpairs) {
        const Vector v = pair.vector / pair.vector.cwiseAbs().maxCoeff();
        for (double sign : {-1.0, 1.0}) {
          extra.push_back(eq.state + sign * 0.1 * v);
          tags.push_back(field_mean(op, eq.state));
        }
      }
    }
    solve_all(extra, tags);
  }

  std::stable_sort(search.equilibria.begin(), search.equilibria.end(), [&](const Equilibrium& l, const Equilibrium& r) {
    return field_mean(op, l.state) < field_mean(op, r.state);
  });
  return search;
}

LinearizationSpectrum linearization_spectrum(const DiscreteOperator& op, const SemilinearProblem& problem,
                                             const Equilibrium& eq, int k, double gap_threshold, MassMode mode) {
  const SparseMatrix jac = stationary_jacobian(op, eq.state, problem, mode);
  // Rayleigh quotient of constants: a - f' - (|boundary| / |domain|) mu g'. Shift below the worst nodal value.
  double worst_f = 0.0, worst_g = 0.0;
  for (int i = 0; i < op.size(); ++i) {
    worst_f = std::max(worst_f, problem.f.derivative(eq.state[i]));
    if (op.lumped_boundary[i] != 0.0) worst_g = std::max(worst_g, problem.g.derivative(eq.state[i]));
  }
  const double ratio = op.lumped_boundary.sum() / op.lumped_mass.sum();
  const double mu_max = op.edge_mu.empty() ? 1.0 : *std::max_element(op.edge_mu.begin(), op.edge_mu.end());
  EigenSolverOptions solver;
  solver.shift = std::min(0.0, op.a - worst_f - ratio * mu_max * worst_g) - 1.0;

  LinearizationSpectrum spectrum;
  spectrum.eigenpairs = smallest_eigenpairs(jac, op.mass_matrix(mode), std::min(k, op.size()), solver);
  spectrum.gap = INFINITY;
  for (const auto& pair : spectrum.eigenpairs) {
    spectrum.gap = std::min(spectrum.gap, std::abs(pair.value));
    if (pair.value < 0.0) ++spectrum.unstable_count;
  }
  spectrum.hyperbolic = spectrum.gap > gap_threshold;
  return spectrum;
}

UnstableManifoldPatch unstable_patch(const DiscreteOperator& op, const SemilinearProblem& problem,
                                     const Equilibrium& eq, const LinearizationSpectrum& spectrum,
                                     const PatchOptions& options, const std::vector<Equilibrium>& known,
                                     double match_tolerance) {
  if (spectrum.unstable_count < 1) throw std::invalid_argument("unstable_patch: equilibrium is stable");
  if (options.grid < 1 || !(options.delta > 0.0)) throw std::invalid_argument("unstable_patch: bad patch size");
  UnstableManifoldPatch patch;
  patch.base = eq;
  for (const auto& pair : spectrum.eigenpairs) {
    if (pair.value < 0.0) patch.directions.push_back(pair.vector);
  }
  for (int d = 0; d < static_cast<int>(patch.directions.size()); ++d) {
    for (int sign : {1, -1}) {
      for (int j = 1; j <= options.grid; ++j) {
        PatchSample sample;
        sample.direction = d;
        sample.sign = sign;
        sample.s = options.delta * j / options.grid;
        sample.point = eq.state + sign * sample.s * patch.directions[d];
        patch.samples.push_back(std::move(sample));
      }
    }
  }

  const ImexStepper stepper(op, problem, options.dt, options.mode);
  const FieldNorms norms(*op.mesh);
  EvolveOptions evolve_options;
  evolve_options.T = options.t_max;
  evolve_options.stride = 0;
  evolve_options.settle_rate = options.settle_rate;
  parallel_for(static_cast<int>(patch.samples.size()), options.threads, [&](int i) {
    PatchSample& sample = patch.samples[i];
    const Trajectory traj = evolve(stepper, sample.point, evolve_options);
    sample.endpoint = traj.final_state;
    sample.settled = traj.settled;
    sample.settle_time = traj.times.back();
    double best = match_tolerance;
    for (int e = 0; e < static_cast<int>(known.size()); ++e) {
      const double dist = norms.distance(known[e].state, sample.endpoint, NormKind::H1);
      if (dist <= best) {
        best = dist;
        sample.limit = e;
      }
    }
  });
  for (const auto& sample : patch.samples) patch.unsettled += sample.settled ? 0 : 1;
  return patch;
}

std::vector<EquilibriumBranch> continue_branches(const std::vector<const DiscreteOperator*>& ops,
                                                 const SemilinearProblem& problem,
                                                 const std::vector<Equilibrium>& roots,
                                                 const ContinuationOptions& options) {
  if (ops.empty() || ops.front()->eps != 0.0) {
    throw std::invalid_argument("continue_branches: the first operator must sit at eps = 0");
  }
  const FieldNorms norms(*ops.front()->mesh);
  std::vector<EquilibriumBranch> branches;
  for (std::size_t b = 0; b < roots.size(); ++b) {
    EquilibriumBranch branch;
    branch.id = static_cast<int>(b);
    Vector previous = roots[b].state;
    for (const DiscreteOperator* op : ops) {
      BranchPoint point;
      point.eps = op->eps;
      try {
        point.eq = newton_equilibrium(*op, problem, previous, options.newton);
        point.spectrum =
            linearization_spectrum(*op, problem, point.eq, options.spectrum_k, options.gap_threshold,
                                   options.newton.mode);
      } catch (const Error& e) {
        branch.failed = true;
        branch.failure = e.what();
        break;
      }
      if (!branch.points.empty()) {
        if (norms.distance(previous, point.eq.state, NormKind::H1) > options.jump_threshold) {
          branch.jump_detected = true;
        }
        point.distance_to_root = norms.distance(point.eq.state, branch.points.front().eq.state, NormKind::H1);
      }
      branch.points.push_back(std::move(point));
      previous = branch.points.back().eq.state;
    }
    branches.push_back(std::move(branch));
  }
  return branches;
}

}  // namespace domlab
