#include "domlab/spectral.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SparseCholesky>

#include "domlab/errors.hpp"
#include "domlab/expm.hpp"

namespace domlab {

namespace {

void require_compatible(const DiscreteOperator& op_eps, const DiscreteOperator& op_0) {
  if (op_eps.mesh != op_0.mesh && op_eps.size() != op_0.size()) {
    throw std::invalid_argument("operators live on different meshes");
  }
  if (op_eps.a != op_0.a) throw std::invalid_argument("operators use different reaction coefficients");
}

}  // namespace

SparseMatrix dissipativity_matrix(const DiscreteOperator& op, double c0, double d0, const SpectralOptions& options) {
  SparseMatrix m = op.system(options.mass_mode, options.include_drift) - c0 * op.mass_matrix(options.mass_mode) -
                   d0 * op.boundary_matrix(options.mass_mode);
  m.makeCompressed();
  return m;
}

std::vector<EigenPair> first_eigenpairs(const DiscreteOperator& op, double c0, double d0, int k,
                                        const SpectralOptions& options) {
  return smallest_eigenpairs(dissipativity_matrix(op, c0, d0, options), op.mass_matrix(options.mass_mode), k,
                             options.solver);
}

OperatorDistanceReport operator_distance(const DiscreteOperator& op_eps, const DiscreteOperator& op_0,
                                         const LanczosOptions& options) {
  require_compatible(op_eps, op_0);
  OperatorDistanceReport report;
  report.eps = op_eps.eps;
  const SparseMatrix s0 = op_0.system();
  SparseMatrix d = op_eps.system() - s0;
  d.prune(0.0);
  if (d.nonZeros() == 0) return report;

  Eigen::SimplicialLDLT<SparseMatrix> chol(s0);
  if (chol.info() != Eigen::Success) throw ConvergenceFailure("reference operator is not positive definite");
  const SparseMatrix dt = d.transpose();
  const int n = op_0.size();

  // T = S0^{-1} D^T S0^{-1} D is self-adjoint and semidefinite in the S0 inner product.
  auto apply_t = [&](const Vector& x) -> Vector { return chol.solve(Vector(dt * chol.solve(Vector(d * x)))); };
  auto inner_s0 = [&](const Vector& x) -> Vector { return s0 * x; };
  report.tau = std::sqrt(std::max(0.0, largest_eigenvalue(apply_t, inner_s0, n, options).value));

  auto apply_dtd = [&](const Vector& x) -> Vector { return dt * (d * x); };
  auto identity = [](const Vector& x) -> Vector { return x; };
  report.k_abs = std::sqrt(std::max(0.0, largest_eigenvalue(apply_dtd, identity, n, options).value));
  return report;
}

double m_operator_norm(const DenseMatrix& x, const DenseMatrix& m) {
  Eigen::LLT<DenseMatrix> llt(m);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("mass matrix is not positive definite");
  const auto lower = llt.matrixL();
  // L^T X L^{-T} = (L^{-1} (L^T X)^T)^T
  const DenseMatrix ltx = lower.transpose() * x;
  const DenseMatrix y = lower.solve(ltx.transpose()).transpose();
  Eigen::JacobiSVD<DenseMatrix> svd(y);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

SemigroupDistanceReport semigroup_distance(const DiscreteOperator& op_eps, const DiscreteOperator& op_0,
                                           const std::vector<double>& times) {
  require_compatible(op_eps, op_0);
  const int n = op_0.size();
  if (n > kDenseNodeCap) {
    throw std::invalid_argument("semigroup_distance: " + std::to_string(n) + " nodes exceed the dense cap of " +
                                std::to_string(kDenseNodeCap));
  }
  SemigroupDistanceReport report;
  report.eps = op_eps.eps;
  const DenseMatrix m = DenseMatrix(op_0.mass);
  const auto lu = m.partialPivLu();
  const DenseMatrix gen_eps = lu.solve(DenseMatrix(op_eps.system()));
  const DenseMatrix gen_0 = lu.solve(DenseMatrix(op_0.system()));
  for (double t : times) {
    if (!(t >= 0.0)) throw std::invalid_argument("semigroup_distance: times must be nonnegative");
    SemigroupSample sample;
    sample.t = t;
    if (op_eps.eps != 0.0) sample.distance = m_operator_norm(expm(-t * gen_eps) - expm(-t * gen_0), m);
    report.samples.push_back(sample);
  }
  return report;
}

}  // namespace domlab
