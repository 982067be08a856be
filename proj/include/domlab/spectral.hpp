#pragma once

#include <string>
#include <vector>

#include "domlab/assembly.hpp"
#include "domlab/linalg.hpp"

namespace domlab {

struct SpectralOptions {
  MassMode mass_mode = MassMode::Consistent;
  /// false gives the symmetric-only diagnostic mode (N_grad dropped).
  bool include_drift = true;
  EigenSolverOptions solver;
};

/// Generalised matrix of the dissipativity eigenproblem,
/// K_C + N_grad + (a - c0) M - d0 B_mu.
SparseMatrix dissipativity_matrix(const DiscreteOperator& op, double c0, double d0, const SpectralOptions& options = {});

/// k eigenpairs of (K_C + N_grad + (a - c0) M - d0 B_mu) v = mu M v with the
/// smallest real parts. Throws ConvergenceFailure.
std::vector<EigenPair> first_eigenpairs(const DiscreteOperator& op, double c0, double d0, int k,
                                        const SpectralOptions& options = {});

struct OperatorDistanceReport {
  double eps = 0.0;
  /// sup_u ||(S_eps - S_0) u||_{S_0^{-1}} / ||u||_{S_0}: the discrete H^1 -> (H^1)' norm.
  double tau = 0.0;
  /// Euclidean ||S_eps - S_0||_2.
  double k_abs = 0.0;
  std::string norm_kind = "H1->H1'";
};

/// Both operators must live on the same mesh with the same a; op_0 is the eps = 0 operator.
OperatorDistanceReport operator_distance(const DiscreteOperator& op_eps, const DiscreteOperator& op_0,
                                         const LanczosOptions& options = {});

inline constexpr int kDenseNodeCap = 1200;

struct SemigroupSample {
  double t = 0.0;
  double distance = 0.0;
};

struct SemigroupDistanceReport {
  double eps = 0.0;
  std::vector<SemigroupSample> samples;
};

/// Dense exp(-t M^{-1} S) for both operators, distance in the M-induced
/// operator 2-norm. Refuses meshes with more than kDenseNodeCap nodes.
SemigroupDistanceReport semigroup_distance(const DiscreteOperator& op_eps, const DiscreteOperator& op_0,
                                           const std::vector<double>& times);

/// ||L^T X L^{-T}||_2 with M = L L^T, the operator norm of X in the M inner product.
double m_operator_norm(const DenseMatrix& x, const DenseMatrix& m);

}  // namespace domlab
