#include "domlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/SparseLU>

#include "domlab/errors.hpp"

namespace domlab {

namespace {

// Modified Gram-Schmidt in the M inner product, two passes. Columns that
// collapse are refilled from the generator.
void m_orthonormalize(DenseMatrix& v, const SparseMatrix& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Eigen::Index p = v.cols();
  DenseMatrix mv(v.rows(), p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (int attempt = 0; attempt < 3; ++attempt) {
      const double original = std::sqrt(std::max(0.0, v.col(j).dot(m * v.col(j))));
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index i = 0; i < j; ++i) v.col(j) -= v.col(j).dot(mv.col(i)) * v.col(i);
      }
      Vector mj = m * v.col(j);
      const double norm = std::sqrt(std::max(0.0, v.col(j).dot(mj)));
      if (norm > 1e-10 * original && norm > 0.0) {
        v.col(j) /= norm;
        mv.col(j) = mj / norm;
        break;
      }
      for (Eigen::Index r = 0; r < v.rows(); ++r) v(r, j) = unit(rng);
    }
  }
}

}  // namespace

double inf_norm(const SparseMatrix& a) {
  Vector rows = Vector::Zero(a.rows());
  for (int col = 0; col < a.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(a, col); it; ++it) rows[it.row()] += std::abs(it.value());
  }
  return rows.size() ? rows.maxCoeff() : 0.0;
}

std::vector<EigenPair> smallest_eigenpairs(const SparseMatrix& a, const SparseMatrix& m, int k,
                                           const EigenSolverOptions& options) {
  const int n = static_cast<int>(a.rows());
  if (k < 1) throw std::invalid_argument("smallest_eigenpairs: k must be >= 1");
  if (k > n) throw std::invalid_argument("smallest_eigenpairs: k exceeds the problem size");
  const int p = std::min(n, k + options.extra_vectors);

  SparseMatrix shifted = a - options.shift * m;
  shifted.makeCompressed();
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(shifted);
  if (lu.info() != Eigen::Success) {
    throw ConvergenceFailure("shift-invert factorisation failed (shift is an eigenvalue?)");
  }

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  DenseMatrix v(n, p);
  v.col(0).setOnes();
  for (int j = 1; j < p; ++j)
    for (int r = 0; r < n; ++r) v(r, j) = unit(rng);
  m_orthonormalize(v, m, rng);

  const double scale = std::max(inf_norm(a), 1e-300);
  using Complex = std::complex<double>;

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    DenseMatrix w = lu.solve(DenseMatrix(m * v));
    if (lu.info() != Eigen::Success || !w.allFinite()) throw ConvergenceFailure("shift-invert solve failed");
    m_orthonormalize(w, m, rng);
    v = w;

    const DenseMatrix av = a * v;
    const DenseMatrix h = v.transpose() * av;
    Eigen::EigenSolver<DenseMatrix> es(h);
    if (es.info() != Eigen::Success) throw ConvergenceFailure("Rayleigh-Ritz eigensolve failed");
    const Eigen::VectorXcd values = es.eigenvalues();
    const Eigen::MatrixXcd vectors = es.eigenvectors();

    std::vector<int> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int l, int r) {
      return std::abs(values[l] - options.shift) < std::abs(values[r] - options.shift);
    });
    order.resize(k);
    std::stable_sort(order.begin(), order.end(), [&](int l, int r) {
      if (values[l].real() != values[r].real()) return values[l].real() < values[r].real();
      return values[l].imag() < values[r].imag();
    });

    std::vector<EigenPair> pairs;
    pairs.reserve(k);
    bool converged = true;
    for (int idx : order) {
      const Complex lambda = values[idx];
      Eigen::VectorXcd y = vectors.col(idx);
      // rotate so the dominant component is real
      Eigen::Index dominant = 0;
      y.cwiseAbs().maxCoeff(&dominant);
      y *= std::conj(y[dominant]) / std::abs(y[dominant]);
      const Vector yr = y.real(), yi = y.imag();
      const Vector vr = v * yr, vi = v * yi;
      const Vector mvr = m * vr, mvi = m * vi;
      const Vector avr = av * yr, avi = av * yi;
      const double norm2 = vr.dot(mvr) + vi.dot(mvi);
      const Vector rr = avr - lambda.real() * mvr + lambda.imag() * mvi;
      const Vector ri = avi - lambda.real() * mvi - lambda.imag() * mvr;
      const double residual = std::sqrt((rr.squaredNorm() + ri.squaredNorm()) / norm2);
      if (!(residual <= options.tolerance * scale)) converged = false;

      EigenPair pair;
      pair.value = lambda.real();
      pair.imag = lambda.imag();
      pair.vector = vr / std::sqrt(vr.dot(mvr));
      pair.residual = residual;
      pairs.push_back(std::move(pair));
    }
    if (!converged) continue;

    for (auto& pair : pairs) {
      const double mean = (m * pair.vector).sum();
      if (mean < 0.0) pair.vector = -pair.vector;
      if (std::abs(mean) <= 1e-12) {
        Eigen::Index dominant = 0;
        pair.vector.cwiseAbs().maxCoeff(&dominant);
        if (pair.vector[dominant] < 0.0) pair.vector = -pair.vector;
      }
    }
    if (std::abs(pairs.front().imag) > options.imag_guard) {
      std::ostringstream msg;
      msg << "leading eigenvalue is complex: " << pairs.front().value << " + " << pairs.front().imag << "i";
      throw ConvergenceFailure(msg.str());
    }
    return pairs;
  }
  throw ConvergenceFailure("subspace iteration did not converge in " + std::to_string(options.max_iterations) +
                           " iterations");
}

LanczosResult largest_eigenvalue(const std::function<Vector(const Vector&)>& apply,
                                 const std::function<Vector(const Vector&)>& inner, int n,
                                 const LanczosOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vector q(n);
  for (int i = 0; i < n; ++i) q[i] = unit(rng);

  const int max_steps = std::min(n, options.max_steps);
  DenseMatrix basis(n, max_steps), inner_basis(n, max_steps);
  std::vector<double> alpha, beta;
  Vector bq = inner(q);
  double norm = std::sqrt(std::max(0.0, q.dot(bq)));
  basis.col(0) = q / norm;
  inner_basis.col(0) = bq / norm;

  LanczosResult result;
  for (int j = 0; j < max_steps; ++j) {
    Vector w = apply(basis.col(j));
    alpha.push_back(w.dot(inner_basis.col(j)));
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i <= j; ++i) w -= w.dot(inner_basis.col(i)) * basis.col(i);
    }
    const Vector bw = inner(w);
    const double b = std::sqrt(std::max(0.0, w.dot(bw)));

    const int size = j + 1;
    Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), size);
    Eigen::VectorXd sub = size > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), size - 1))
                                   : Eigen::VectorXd();
    Eigen::SelfAdjointEigenSolver<DenseMatrix> tri;
    tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const double theta = tri.eigenvalues()(size - 1);
    const double estimate = b * std::abs(tri.eigenvectors()(size - 1, size - 1));
    result.value = theta;
    result.steps = size;
    result.residual_estimate = estimate;

    const double reference = std::max(std::abs(theta), 1e-300);
    if (estimate <= options.tolerance * reference || b <= 1e-14 * std::max(reference, 1.0) || size == max_steps) {
      if (!(estimate <= options.tolerance * reference) && b > 1e-14 * std::max(reference, 1.0) && size < n) {
        throw ConvergenceFailure("Lanczos did not converge in " + std::to_string(size) + " steps (estimate " +
                                 std::to_string(estimate / reference) + ")");
      }
      return result;
    }
    beta.push_back(b);
    basis.col(j + 1) = w / b;
    inner_basis.col(j + 1) = bw / b;
  }
  return result;
}

}  // namespace domlab
