#pragma once

// P1 finite-element discretisation of the pulled-back operator on the fixed
// reference mesh.
//
//   K_C[i,j]    = int C grad phi_j . grad phi_i
//   N_grad[i,j] = s * int (C grad phi_j) . (grad Jh / Jh) phi_i
//   M[i,j]      = int phi_i phi_j
//   B_mu[i,j]   = int_{boundary} phi_i phi_j mu dsigma
//
// with s = +1 for the published weak form and s = -1 for the sign obtained by
// integrating by parts (see DriftConvention). The operator acts as
// S u = K_C u + N_grad u + a M u; the nonlinear boundary flux only enters
// through load vectors.

#include <memory>

#include "domlab/geometry.hpp"
#include "domlab/mesh.hpp"
#include "domlab/problem.hpp"
#include "domlab/quadrature.hpp"
#include "domlab/types.hpp"

namespace domlab {

enum class DriftConvention { Published, PullbackConsistent };

struct AssemblyOptions {
  int triangle_degree = 4;
  int edge_points = 4;
  /// Oscillatory family: require h_max <= eps^alpha / resolution_ratio.
  /// A non-positive value disables the check (coarse diagnostic meshes).
  double resolution_ratio = 4.0;
  DriftConvention drift = DriftConvention::Published;
};

struct DiscreteOperator {
  std::shared_ptr<const Mesh> mesh;
  DiffeoFamily family;
  double eps = 0.0;
  double a = 1.0;
  AssemblyOptions options;

  SparseMatrix mass;
  SparseMatrix stiffness;
  SparseMatrix drift;
  SparseMatrix boundary_mass;
  Vector lumped_mass;
  Vector lumped_boundary;

  TriangleRule triangle_quadrature;
  LineRule edge_quadrature;
  /// mu_eps at edge quadrature points, index edge * edge_points + k.
  std::vector<double> edge_mu;

  int size() const noexcept { return static_cast<int>(mass.rows()); }
  /// S = K_C + N_grad + a M (lumped M in lumped mode).
  SparseMatrix system(MassMode mode = MassMode::Consistent, bool include_drift = true) const;
  SparseMatrix mass_matrix(MassMode mode) const;
  SparseMatrix boundary_matrix(MassMode mode) const;
};

/// Throws UnderResolved (mesh too coarse for the oscillation), SingularJacobian,
/// or std::invalid_argument when the family's reference domain differs from the mesh's.
DiscreteOperator assemble_operator(std::shared_ptr<const Mesh> mesh, const DiffeoFamily& family, double eps, double a,
                                   const AssemblyOptions& options = {});

/// Row-sum lumping.
Vector lump_mass(const SparseMatrix& matrix);
SparseMatrix diagonal_matrix(const Vector& diagonal);

struct LoadVectors {
  Vector f;  // int f(u_h) phi_i
  Vector g;  // int_{boundary} g(u_h) phi_i mu dsigma
};

/// Throws BlowUp (time NaN) on a non-finite evaluation.
LoadVectors nonlinear_loads(const DiscreteOperator& op, const Vector& u, const SemilinearProblem& problem,
                            MassMode mode = MassMode::Consistent);

/// Gateaux derivative of F + G at u: int f'(u_h) phi_i phi_j + int_{boundary} g'(u_h) phi_i phi_j mu.
SparseMatrix nonlinear_jacobian(const DiscreteOperator& op, const Vector& u, const SemilinearProblem& problem,
                                MassMode mode = MassMode::Consistent);

/// Residual of the stationary problem, R(u) = S u - F(u) - G(u).
Vector stationary_residual(const DiscreteOperator& op, const Vector& u, const SemilinearProblem& problem,
                           MassMode mode = MassMode::Consistent);

/// Jacobian of stationary_residual: S - dF - dG.
SparseMatrix stationary_jacobian(const DiscreteOperator& op, const Vector& u, const SemilinearProblem& problem,
                                 MassMode mode = MassMode::Consistent);

enum class NormKind { L2, H1, Sup };
std::string to_string(NormKind kind);

/// Discrete norms on the reference mesh: L2 through the P1 mass matrix, H1
/// through mass + reference stiffness, Sup over nodal values.
class FieldNorms {
 public:
  explicit FieldNorms(const Mesh& mesh);

  double norm(const Vector& u, NormKind kind) const;
  double distance(const Vector& u, const Vector& v, NormKind kind) const { return norm(u - v, kind); }
  const SparseMatrix& mass() const noexcept { return mass_; }
  const SparseMatrix& h1_gram() const noexcept { return h1_; }
  int size() const noexcept { return static_cast<int>(mass_.rows()); }

 private:
  SparseMatrix mass_;
  SparseMatrix h1_;
};

}  // namespace domlab
