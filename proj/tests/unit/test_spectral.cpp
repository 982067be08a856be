#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include <unsupported/Eigen/MatrixFunctions>

#include "domlab/assembly.hpp"
#include "domlab/errors.hpp"
#include "domlab/spectral.hpp"

using namespace domlab;

namespace {

DiffeoFamily oscillatory() {
  DiffeoFamily f;
  f.kind = FamilyKind::OscillatorySquare;
  f.alpha = 0.5;
  return f;
}

std::shared_ptr<const Mesh> square(int n) { return std::make_shared<const Mesh>(build_square_mesh(n)); }

// Dense generalised eigenvalues of (A, M) through the Cholesky-reduced
// symmetric problem when A is symmetric.
Vector dense_symmetric_eigenvalues(const DenseMatrix& a, const DenseMatrix& m) {
  Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> es(a, m);
  return es.eigenvalues();
}

}  // namespace

TEST(FirstEigenpairs, NeumannAnchorsAtZero) {
  const auto op = assemble_operator(square(64), oscillatory(), 0.0, 1.0);
  const auto pairs = first_eigenpairs(op, 0.0, 0.0, 5);
  ASSERT_EQ(pairs.size(), 5u);
  EXPECT_NEAR(pairs[0].value, 1.0, 1e-8);
  const Vector& v = pairs[0].vector;
  EXPECT_LT(v.maxCoeff() - v.minCoeff(), 1e-9);
  EXPECT_GT(v.mean(), 0.0);
  EXPECT_NEAR(v.dot(op.mass * v), 1.0, 1e-12);
  const double pi2 = M_PI * M_PI;
  const double expected[] = {1.0, 1.0 + pi2, 1.0 + pi2, 1.0 + 2 * pi2, 1.0 + 4 * pi2};
  for (int k = 0; k < 5; ++k) {
    EXPECT_NEAR(pairs[k].value / expected[k], 1.0, 0.02) << k;
    EXPECT_LT(pairs[k].residual, 1e-8 * inf_norm(op.system()));
  }
}

TEST(FirstEigenpairs, DenseOracleWithBoundaryTerm) {
  const auto op = assemble_operator(square(8), oscillatory(), 0.0, 1.0);
  const double d0 = 0.5;
  const DenseMatrix a = DenseMatrix(op.system()) - d0 * DenseMatrix(op.boundary_mass);
  const Vector oracle = dense_symmetric_eigenvalues(a, DenseMatrix(op.mass));
  const auto pairs = first_eigenpairs(op, 0.0, d0, 4);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(pairs[k].value, oracle[k], 1e-8) << k;
  EXPECT_LT(oracle[0], 0.0);  // d0 = 1/2 on the unit square: 1 - 0.5 * 4 < 0 for constants
}

TEST(FirstEigenpairs, NonsymmetricMatchesDenseOracle) {
  AssemblyOptions opts;
  opts.resolution_ratio = 0.0;
  const auto op = assemble_operator(square(12), oscillatory(), 0.1, 1.0, opts);
  const DenseMatrix a = DenseMatrix(op.system()) - 0.1 * DenseMatrix(op.boundary_mass);
  Eigen::GeneralizedEigenSolver<DenseMatrix> es(a, DenseMatrix(op.mass));
  Eigen::VectorXcd values = es.eigenvalues();
  std::vector<double> real_parts;
  for (int i = 0; i < values.size(); ++i) real_parts.push_back(values[i].real());
  std::sort(real_parts.begin(), real_parts.end());
  const auto pairs = first_eigenpairs(op, 0.0, 0.1, 3);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(pairs[k].value, real_parts[k], 1e-8);
  for (int k = 0; k < 3; ++k) {
    const Vector r = (a - pairs[k].value * DenseMatrix(op.mass)) * pairs[k].vector;
    EXPECT_LT(r.norm(), 1e-8);
  }
}

TEST(FirstEigenpairs, SymmetricOnlyMode) {
  const auto op = assemble_operator(square(32), oscillatory(), 0.1, 1.0);
  SpectralOptions sym;
  sym.include_drift = false;
  const auto full = first_eigenpairs(op, 0.0, 0.0, 2);
  const auto part = first_eigenpairs(op, 0.0, 0.0, 2, sym);
  // constants stay in the kernel of both parts, so mu1 = a either way
  EXPECT_NEAR(full[0].value, 1.0, 1e-8);
  EXPECT_NEAR(part[0].value, 1.0, 1e-8);
  EXPECT_NE(full[1].value, part[1].value);
}

TEST(FirstEigenpairs, ContinuousAlongSweep) {
  // With d0 > 0 the shift of mu1 is driven by the mu-weighted boundary mass,
  // whose incomplete last oscillation period makes the step 0.1 -> 0.05
  // non-monotone (mesh-converged); the tail of the sweep is monotone.
  const auto mesh = square(64);
  const double mu0 = first_eigenpairs(assemble_operator(mesh, oscillatory(), 0.0, 1.0), 0.0, 0.1, 1)[0].value;
  std::vector<double> gaps;
  for (double eps : {0.1, 0.05, 0.025, 0.0125}) {
    const double mu = first_eigenpairs(assemble_operator(mesh, oscillatory(), eps, 1.0), 0.0, 0.1, 1)[0].value;
    EXPECT_GT(mu, 0.0);
    gaps.push_back(std::abs(mu - mu0));
  }
  EXPECT_LT(gaps[2], gaps[1]);
  EXPECT_LT(gaps[3], gaps[2]);
  EXPECT_LT(gaps[3], 0.5 * gaps[0]);
}

TEST(FirstEigenpairs, ScenarioAFirstEigenvalueIsExact) {
  const auto mesh = square(64);
  for (double eps : {0.1, 0.05, 0.025, 0.0125}) {
    const auto pairs = first_eigenpairs(assemble_operator(mesh, oscillatory(), eps, 1.0), 0.0, 0.0, 1);
    EXPECT_NEAR(pairs[0].value, 1.0, 1e-8);
  }
}

TEST(FirstEigenpairs, LumpedMode) {
  const auto op = assemble_operator(square(16), oscillatory(), 0.0, 1.0);
  SpectralOptions lumped;
  lumped.mass_mode = MassMode::Lumped;
  const auto pairs = first_eigenpairs(op, 0.0, 0.0, 1, lumped);
  EXPECT_NEAR(pairs[0].value, 1.0, 1e-10);
}

TEST(FirstEigenpairs, RejectsBadCount) {
  const auto op = assemble_operator(square(4), oscillatory(), 0.0, 1.0);
  EXPECT_THROW(first_eigenpairs(op, 0.0, 0.0, 0), std::invalid_argument);
  EXPECT_THROW(first_eigenpairs(op, 0.0, 0.0, 26), std::invalid_argument);
}

TEST(Lanczos, DiagonalOperator) {
  Vector d = Vector::LinSpaced(50, 0.0, 7.0);
  auto apply = [&](const Vector& x) -> Vector { return d.cwiseProduct(x); };
  auto identity = [](const Vector& x) -> Vector { return x; };
  EXPECT_NEAR(largest_eigenvalue(apply, identity, 50).value, 7.0, 1e-9);
}

TEST(OperatorDistance, ZeroAtZero) {
  const auto mesh = square(16);
  const auto op0 = assemble_operator(mesh, oscillatory(), 0.0, 1.0);
  const auto report = operator_distance(op0, op0);
  EXPECT_EQ(report.tau, 0.0);
  EXPECT_EQ(report.k_abs, 0.0);
}

TEST(OperatorDistance, MatchesDenseOracle) {
  AssemblyOptions opts;
  opts.resolution_ratio = 0.0;
  const auto mesh = square(10);
  const auto op0 = assemble_operator(mesh, oscillatory(), 0.0, 1.0, opts);
  const auto op = assemble_operator(mesh, oscillatory(), 0.1, 1.0, opts);
  const DenseMatrix s0 = DenseMatrix(op0.system());
  const DenseMatrix d = DenseMatrix(op.system()) - s0;
  // tau^2 = lambda_max(D^T S0^{-1} D, S0)
  const DenseMatrix inner = d.transpose() * s0.llt().solve(d);
  const double tau = std::sqrt(dense_symmetric_eigenvalues(0.5 * (inner + inner.transpose()), s0).maxCoeff());
  const double k_abs = Eigen::JacobiSVD<DenseMatrix>(d).singularValues()(0);
  const auto report = operator_distance(op, op0);
  EXPECT_NEAR(report.tau, tau, 1e-8 * tau);
  EXPECT_NEAR(report.k_abs, k_abs, 1e-8 * k_abs);
}

TEST(SemigroupDistance, ZeroAtZeroAndCap) {
  AssemblyOptions opts;
  opts.resolution_ratio = 0.0;
  const auto mesh = square(8);
  const auto op0 = assemble_operator(mesh, oscillatory(), 0.0, 1.0, opts);
  const auto report = semigroup_distance(op0, op0, {0.5, 1.0});
  for (const auto& s : report.samples) EXPECT_EQ(s.distance, 0.0);
  const auto big = square(40);
  const auto op_big = assemble_operator(big, oscillatory(), 0.0, 1.0);
  EXPECT_THROW(semigroup_distance(op_big, op_big, {1.0}), std::invalid_argument);
}

TEST(SemigroupDistance, MatchesReferenceExponential) {
  AssemblyOptions opts;
  opts.resolution_ratio = 0.0;
  const auto mesh = square(6);
  const auto op0 = assemble_operator(mesh, oscillatory(), 0.0, 1.0, opts);
  const auto op = assemble_operator(mesh, oscillatory(), 0.1, 1.0, opts);
  const DenseMatrix m = DenseMatrix(op0.mass);
  const DenseMatrix minv = m.inverse();
  const DenseMatrix a0 = -(minv * DenseMatrix(op0.system()));
  const DenseMatrix a1 = -(minv * DenseMatrix(op.system()));
  const DenseMatrix diff = a1.exp() - a0.exp();
  // M-norm through the symmetric square root of M
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m);
  const DenseMatrix root = es.operatorSqrt(), inv_root = es.operatorInverseSqrt();
  const double oracle = Eigen::JacobiSVD<DenseMatrix>(root * diff * inv_root).singularValues()(0);
  const auto report = semigroup_distance(op, op0, {1.0});
  EXPECT_NEAR(report.samples[0].distance, oracle, 1e-10 + 1e-8 * oracle);
  EXPECT_GT(oracle, 0.0);
}

TEST(SemigroupDistance, DecaysLikeTheFirstEigenvalue) {
  AssemblyOptions opts;
  opts.resolution_ratio = 0.0;
  const auto mesh = square(17);
  const auto op0 = assemble_operator(mesh, oscillatory(), 0.0, 1.0, opts);
  const auto op = assemble_operator(mesh, oscillatory(), 0.1, 1.0, opts);
  const double b = 0.5 * std::min(first_eigenpairs(op, 0, 0, 1)[0].value, first_eigenpairs(op0, 0, 0, 1)[0].value);
  const auto report = semigroup_distance(op, op0, {0.25, 0.5, 1.0, 2.0, 4.0});
  double bound = 0.0;
  for (const auto& s : report.samples) bound = std::max(bound, s.distance * std::exp(b * s.t));
  for (const auto& s : report.samples) {
    EXPECT_GT(s.distance, 0.0);
    EXPECT_LE(s.distance * std::exp(b * s.t), bound);
  }
  // decays: the long-time product does not grow past the early-time value
  EXPECT_LT(report.samples.back().distance * std::exp(b * 4.0), 2.0 * report.samples.front().distance *
                                                                   std::exp(b * 0.25));
}
