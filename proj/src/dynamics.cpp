#include "domlab/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <Eigen/SparseLU>

#include "domlab/errors.hpp"
#include "domlab/spectral.hpp"

namespace domlab {

struct ImexStepper::Factor {
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
};

ImexStepper::ImexStepper(const DiscreteOperator& op, SemilinearProblem problem, double dt, MassMode mode)
    : op_(&op), problem_(std::move(problem)), dt_(dt), mode_(mode) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("time step must be positive (the problem is parabolic; backward evolution is refused)");
  }
  mass_ = op.mass_matrix(mode);
  SparseMatrix lhs = mass_ + dt * op.system(mode);
  lhs.makeCompressed();
  auto factor = std::make_shared<Factor>();
  factor->lu.compute(lhs);
  if (factor->lu.info() != Eigen::Success) throw ConvergenceFailure("IMEX iteration matrix is singular");
  factor_ = std::move(factor);
}

Vector ImexStepper::step(const Vector& u) const {
  const LoadVectors loads = nonlinear_loads(*op_, u, problem_, mode_);
  const Vector rhs = mass_ * u + dt_ * (loads.f + loads.g);
  Vector next = factor_->lu.solve(rhs);
  if (!next.allFinite()) throw BlowUp("non-finite state", std::numeric_limits<double>::quiet_NaN());
  return next;
}

Vector step_imex(const DiscreteOperator& op, const SemilinearProblem& problem, const Vector& u, double dt,
                 MassMode mode) {
  return ImexStepper(op, problem, dt, mode).step(u);
}

double ComparisonCone::margin(const Vector& u) const { return margin(u, theta); }

double ComparisonCone::margin(const Vector& u, double theta_other) const {
  return (u.cwiseAbs() - theta_other * phi).maxCoeff();
}

ComparisonCone build_cone(const DiscreteOperator& op, const SemilinearProblem& problem, const ConeOptions& options) {
  SpectralOptions spectral;
  spectral.mass_mode = options.mode;
  spectral.solver = options.solver;
  const EigenPair first = first_eigenpairs(op, problem.c0, problem.d0, 1, spectral).front();
  if (!(first.value > 0.0)) {
    std::ostringstream msg;
    msg << "dissipativity not verified: mu1 = " << first.value << " at eps = " << op.eps;
    throw GateFailure(msg.str());
  }
  Vector phi = first.vector;
  if (phi.sum() < 0.0) phi = -phi;
  if (!(phi.minCoeff() > 0.0)) {
    std::ostringstream msg;
    msg << "first eigenfunction changes sign (min " << phi.minCoeff() / phi.maxCoeff() << " after normalisation) at eps = "
        << op.eps << "; mesh probably under-resolved";
    throw GateFailure(msg.str());
  }
  ComparisonCone cone;
  cone.phi = phi / phi.maxCoeff();
  cone.m = cone.phi.minCoeff();
  cone.mu1 = first.value;
  cone.xi = problem.xi;
  cone.mode = options.mode;
  cone.theta = std::max(2.0 * problem.xi / cone.m, options.theta);
  return cone;
}

Trajectory evolve(const ImexStepper& stepper, const Vector& u0, const EvolveOptions& options) {
  if (!(options.T >= 0.0)) throw std::invalid_argument("evolve: T must be nonnegative");
  if (!u0.allFinite()) throw BlowUp("non-finite initial state", 0.0);
  const double dt = stepper.dt();
  const long steps = std::lround(options.T / dt);
  const SparseMatrix& l2 = stepper.op().mass;

  Trajectory traj;
  auto record = [&](double t, const Vector& u, double rate) {
    traj.times.push_back(t);
    traj.sup_norms.push_back(u.cwiseAbs().maxCoeff());
    if (options.cone) traj.cone_margins.push_back(options.cone->margin(u));
    traj.rates.push_back(rate);
  };
  Vector u = u0;
  record(0.0, u, std::numeric_limits<double>::quiet_NaN());
  if (options.stride > 0) {
    traj.snapshot_times.push_back(0.0);
    traj.snapshots.push_back(u);
  }
  long k = 0;
  for (k = 1; k <= steps; ++k) {
    const double t = k * dt;
    Vector next;
    try {
      next = stepper.step(u);
    } catch (const BlowUp& e) {
      throw BlowUp(e.what(), t);
    }
    const Vector delta = next - u;
    const double rate = std::sqrt(std::max(0.0, delta.dot(l2 * delta))) / dt;
    u = std::move(next);
    record(t, u, rate);
    const bool settled = options.settle_rate > 0.0 && delta.cwiseAbs().maxCoeff() / dt < options.settle_rate;
    if (options.stride > 0 && (k % options.stride == 0 || k == steps || settled)) {
      traj.snapshot_times.push_back(t);
      traj.snapshots.push_back(u);
    }
    if (settled) {
      traj.settled = true;
      break;
    }
  }
  traj.final_state = u;
  return traj;
}

namespace {

// Reference (eps = 0) P1 stiffness, off-diagonals clipped at zero so the
// Jacobi weights are convex on any mesh.
std::vector<std::vector<std::pair<int, double>>> smoothing_weights(const Mesh& mesh) {
  const FieldNorms norms(mesh);
  const SparseMatrix k = norms.h1_gram() - norms.mass();
  std::vector<std::vector<std::pair<int, double>>> weights(mesh.node_count());
  for (int col = 0; col < k.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(k, col); it; ++it) {
      if (it.row() != it.col() && it.value() < 0.0) weights[it.row()].emplace_back(it.col(), -it.value());
    }
  }
  for (auto& row : weights) {
    double total = 0.0;
    for (const auto& w : row) total += w.second;
    for (auto& w : row) w.second /= total;
  }
  return weights;
}

}  // namespace

std::vector<Vector> cone_samples(const DiscreteOperator& op, const ComparisonCone& cone, int count,
                                 std::uint64_t seed) {
  const auto weights = smoothing_weights(*op.mesh);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  constexpr double kDamping = 0.5;
  std::vector<Vector> samples;
  samples.reserve(count);
  const int n = op.size();
  for (int s = 0; s < count; ++s) {
    Vector ratio(n);
    for (int i = 0; i < n; ++i) ratio[i] = unit(rng);
    Vector smooth(n);
    for (int i = 0; i < n; ++i) {
      double avg = 0.0;
      for (const auto& [j, w] : weights[i]) avg += w * ratio[j];
      smooth[i] = weights[i].empty() ? ratio[i] : (1.0 - kDamping) * ratio[i] + kDamping * avg;
    }
    samples.push_back(cone.theta * cone.phi.cwiseProduct(smooth));
  }
  return samples;
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  const int workers = std::max(1, std::min(threads, count));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

InvarianceReport check_invariance(const DiscreteOperator& op, const SemilinearProblem& problem,
                                  const ComparisonCone& cone, const InvarianceOptions& options) {
  if (options.samples < 1) throw std::invalid_argument("check_invariance: need at least one sample");
  const ImexStepper stepper(op, problem, options.dt, cone.mode);
  const auto samples = cone_samples(op, cone, options.samples, options.seed);
  const long steps = std::lround(options.T / options.dt);

  InvarianceReport report;
  report.theta = cone.theta;
  report.theta_bar = options.contraction_factor * cone.theta;
  report.theta_bar_admissible = report.theta_bar * cone.m >= cone.xi;
  report.samples = options.samples;
  report.entry_times.assign(samples.size(), 0.0);
  std::vector<double> margins(samples.size(), -INFINITY), sups(samples.size(), 0.0);

  parallel_for(static_cast<int>(samples.size()), options.threads, [&](int s) {
    Vector u = samples[s];
    double margin = cone.margin(u), sup = u.cwiseAbs().maxCoeff();
    double entry = cone.margin(u, report.theta_bar) <= 0.0 ? 0.0 : INFINITY;
    for (long k = 1; k <= steps; ++k) {
      try {
        u = stepper.step(u);
      } catch (const BlowUp& e) {
        throw BlowUp(e.what(), k * options.dt);
      }
      margin = std::max(margin, cone.margin(u));
      sup = std::max(sup, u.cwiseAbs().maxCoeff());
      if (cone.margin(u, report.theta_bar) > 0.0) {
        entry = INFINITY;
      } else if (!std::isfinite(entry)) {
        entry = k * options.dt;
      }
    }
    margins[s] = margin;
    sups[s] = sup;
    report.entry_times[s] = entry;
  });
  report.max_margin = *std::max_element(margins.begin(), margins.end());
  report.max_sup_norm = *std::max_element(sups.begin(), sups.end());
  report.contraction_time = *std::max_element(report.entry_times.begin(), report.entry_times.end());
  return report;
}

}  // namespace domlab
