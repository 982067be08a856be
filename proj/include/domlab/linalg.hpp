#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "domlab/types.hpp"

namespace domlab {

struct EigenSolverOptions {
  double shift = 0.0;
  /// Block size is k + extra_vectors.
  int extra_vectors = 6;
  int max_iterations = 2000;
  /// Stop when every requested residual ||(A - lambda M) v||_2 <= tolerance * ||A||_inf.
  double tolerance = 1e-11;
  /// Leading eigenvalue must have |Im| below this.
  double imag_guard = 1e-8;
  std::uint64_t seed = 0x5eedULL;
};

struct EigenPair {
  double value = 0.0;
  /// Imaginary part of the Ritz value (zero for the real spectra exercised here).
  double imag = 0.0;
  /// M-normalised, v^T M v = 1, with nonnegative M-weighted mean.
  Vector vector;
  double residual = 0.0;
};

/// k eigenpairs of A v = lambda M v closest to the shift (sorted by real part)
/// by shift-invert subspace iteration with Rayleigh-Ritz extraction. The
/// first start vector is the M-normalised all-ones vector; the others come
/// from a fixed-seed generator, so runs are deterministic.
/// M must be symmetric positive definite. Throws ConvergenceFailure.
std::vector<EigenPair> smallest_eigenpairs(const SparseMatrix& a, const SparseMatrix& m, int k,
                                           const EigenSolverOptions& options = {});

struct LanczosOptions {
  int max_steps = 250;
  double tolerance = 1e-10;
  std::uint64_t seed = 0x1a2c05ULL;
};

struct LanczosResult {
  double value = 0.0;
  int steps = 0;
  double residual_estimate = 0.0;
};

/// Largest eigenvalue of an operator T that is self-adjoint and positive
/// semidefinite in the inner product <x, y>_B = x^T B y. `apply` evaluates T x,
/// `inner` evaluates B x. Lanczos with full reorthogonalisation.
LanczosResult largest_eigenvalue(const std::function<Vector(const Vector&)>& apply,
                                 const std::function<Vector(const Vector&)>& inner, int n,
                                 const LanczosOptions& options = {});

/// max absolute row sum
double inf_norm(const SparseMatrix& a);

}  // namespace domlab
