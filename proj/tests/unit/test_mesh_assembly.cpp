#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>

#include "domlab/assembly.hpp"
#include "domlab/errors.hpp"
#include "domlab/mesh.hpp"
#include "domlab/problem.hpp"

using namespace domlab;

namespace {

DiffeoFamily oscillatory() {
  DiffeoFamily f;
  f.kind = FamilyKind::OscillatorySquare;
  f.alpha = 0.5;
  return f;
}

std::shared_ptr<const Mesh> square(int n) { return std::make_shared<const Mesh>(build_square_mesh(n)); }

// Neumann 5-point Laplacian and P1 mass for the structured SW-NE mesh, built
// node by node from the stencil rather than element by element.
struct StencilOracle {
  DenseMatrix k, m, b;
  explicit StencilOracle(int n) {
    const int nn = (n + 1) * (n + 1);
    const double h = 1.0 / n, area = 0.5 * h * h;
    k = DenseMatrix::Zero(nn, nn);
    m = DenseMatrix::Zero(nn, nn);
    b = DenseMatrix::Zero(nn, nn);
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    auto on_boundary_edge = [n](int i0, int j0, int i1, int j1) {
      return (j0 == j1 && (j0 == 0 || j0 == n)) || (i0 == i1 && (i0 == 0 || i0 == n));
    };
    auto incident_triangles = [n](int i, int j) {
      // each cell contributes 2 triangles to its SW and NE corners, 1 to SE and NW
      int count = 0;
      if (i < n && j < n) count += 2;  // node is SW corner of cell (i, j)
      if (i > 0 && j > 0) count += 2;  // NE corner of cell (i-1, j-1)
      if (i > 0 && j < n) count += 1;  // SE corner of cell (i-1, j)
      if (i < n && j > 0) count += 1;  // NW corner of cell (i, j-1)
      return count;
    };
    for (int j = 0; j <= n; ++j) {
      for (int i = 0; i <= n; ++i) {
        const int p = id(i, j);
        m(p, p) = incident_triangles(i, j) * area / 6.0;
        const int di[] = {1, -1, 0, 0}, dj[] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
          const int i1 = i + di[d], j1 = j + dj[d];
          if (i1 < 0 || i1 > n || j1 < 0 || j1 > n) continue;
          const int q = id(i1, j1);
          const bool boundary = on_boundary_edge(i, j, i1, j1);
          k(p, q) = boundary ? -0.5 : -1.0;
          m(p, q) = (boundary ? 1 : 2) * area / 12.0;
          if (boundary) {
            b(p, q) = h / 6.0;
            b(p, p) += h / 3.0;
          }
        }
        for (int d : {-1, 1}) {
          const int i1 = i + d, j1 = j + d;
          if (i1 < 0 || i1 > n || j1 < 0 || j1 > n) continue;
          m(p, id(i1, j1)) = 2 * area / 12.0;
        }
        k(p, p) = -k.row(p).sum();
      }
    }
  }
};

double max_abs_diff(const SparseMatrix& a, const DenseMatrix& b) { return (DenseMatrix(a) - b).cwiseAbs().maxCoeff(); }

// Midpoint rule on a fine lattice of the unit square.
template <class F>
double integrate(F&& f, int cells) {
  double acc = 0.0;
  const double h = 1.0 / cells;
  for (int j = 0; j < cells; ++j)
    for (int i = 0; i < cells; ++i) acc += f((i + 0.5) * h, (j + 0.5) * h);
  return acc * h * h;
}

}  // namespace

TEST(Mesh, SingleCell) {
  const Mesh mesh = build_square_mesh(1, MeshPolicy::Testing);
  EXPECT_EQ(mesh.node_count(), 4);
  EXPECT_EQ(mesh.triangles.size(), 2u);
  EXPECT_EQ(mesh.boundary_edges.size(), 4u);
  EXPECT_THROW(build_square_mesh(1), std::invalid_argument);
}

TEST(Mesh, CountsAreaAndLoop) {
  const Mesh mesh = build_square_mesh(32);
  EXPECT_EQ(mesh.node_count(), 33 * 33);
  double total = 0.0;
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    EXPECT_GT(mesh.signed_area(t), 0.0);
    total += mesh.signed_area(t);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(mesh.h_max, std::sqrt(2.0) / 32, 1e-15);
  const auto& edges = mesh.boundary_edges;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    EXPECT_EQ(edges[e].nodes[1], edges[(e + 1) % edges.size()].nodes[0]);
  }
  std::set<int> visited;
  for (const auto& e : edges) visited.insert(e.nodes[0]);
  EXPECT_EQ(visited.size(), edges.size());
  EXPECT_EQ(mesh.nodes[5].x(), 5.0 / 32);
  EXPECT_EQ(mesh.nodes[33].y(), 1.0 / 32);
}

TEST(Mesh, EdgeTagsMatchSides) {
  const Mesh mesh = build_square_mesh(8);
  for (const auto& e : mesh.boundary_edges) {
    const Vec2 mid = 0.5 * (mesh.nodes[e.nodes[0]] + mesh.nodes[e.nodes[1]]);
    switch (e.tag) {
      case EdgeTag::Top:
        EXPECT_EQ(mid.y(), 1.0);
        break;
      case EdgeTag::Bottom:
        EXPECT_EQ(mid.y(), 0.0);
        break;
      case EdgeTag::Left:
        EXPECT_EQ(mid.x(), 0.0);
        break;
      case EdgeTag::Right:
        EXPECT_EQ(mid.x(), 1.0);
        break;
      default:
        ADD_FAILURE();
    }
    const Vec2 normal = mesh.outward_normal(e);
    EXPECT_GT(normal.dot(mid - Vec2(0.5, 0.5)), 0.0);
  }
}

TEST(Mesh, DiskMesh) {
  const Mesh mesh = build_disk_mesh(16);
  double total = 0.0;
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    EXPECT_GT(mesh.signed_area(t), 0.0);
    total += mesh.signed_area(t);
  }
  // area of the regular 96-gon inscribed in the unit circle
  const double polygon = 0.5 * 96 * std::sin(2 * M_PI / 96);
  EXPECT_NEAR(total, polygon, 1e-12);
  const auto& edges = mesh.boundary_edges;
  EXPECT_EQ(edges.size(), 96u);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    EXPECT_EQ(edges[e].nodes[1], edges[(e + 1) % edges.size()].nodes[0]);
    EXPECT_EQ(edges[e].tag, EdgeTag::Arc);
  }
}

TEST(Mesh, TextExports) {
  const Mesh mesh = build_square_mesh(1, MeshPolicy::Testing);
  std::ostringstream out;
  write_mesh(out, mesh);
  const std::string text = out.str();
  EXPECT_NE(text.find("nodes 4"), std::string::npos);
  EXPECT_NE(text.find("triangles 2"), std::string::npos);
  EXPECT_NE(text.find("boundary_edges 4"), std::string::npos);
  SparseMatrix m(2, 2);
  m.insert(1, 0) = 2.5;
  std::ostringstream mat;
  write_matrix(mat, m);
  EXPECT_EQ(mat.str(), "1 0 2.5\n");
}

TEST(Assembly, IdentityMatchesStencil) {
  for (int n : {4, 9, 32}) {
    const auto op = assemble_operator(square(n), oscillatory(), 0.0, 1.0);
    const StencilOracle oracle(n);
    EXPECT_LT(max_abs_diff(op.stiffness, oracle.k), 1e-12) << n;
    EXPECT_LT(max_abs_diff(op.mass, oracle.m), 1e-12) << n;
    EXPECT_LT(max_abs_diff(op.boundary_mass, oracle.b), 1e-12) << n;
    EXPECT_EQ(op.drift.nonZeros(), 0);
    const Vector ones = Vector::Ones(op.size());
    EXPECT_LT((op.system() * ones - op.mass * ones).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Assembly, ConstantsInKernelAtEveryEps) {
  const auto mesh = square(64);
  for (double eps : {0.1, 0.05, 0.025, 0.0125}) {
    const auto op = assemble_operator(mesh, oscillatory(), eps, 1.0);
    const Vector ones = Vector::Ones(op.size());
    EXPECT_LT((op.stiffness * ones).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((op.drift * ones).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((DenseMatrix(op.stiffness) - DenseMatrix(op.stiffness).transpose()).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Assembly, StructuralProperties) {
  const auto mesh = square(16);
  DiffeoFamily fam = oscillatory();
  AssemblyOptions opts;
  opts.resolution_ratio = 0.0;
  const auto op = assemble_operator(mesh, fam, 0.1, 1.0, opts);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> mass(DenseMatrix(op.mass));
  EXPECT_GT(mass.eigenvalues().minCoeff(), 0.0);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> stiff(DenseMatrix(op.stiffness));
  EXPECT_GT(stiff.eigenvalues().minCoeff(), -1e-12);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> bnd(DenseMatrix(op.boundary_mass));
  EXPECT_GT(bnd.eigenvalues().minCoeff(), -1e-14);
  std::set<int> boundary_nodes;
  for (const auto& e : mesh->boundary_edges) boundary_nodes.insert(e.nodes[0]);
  for (int col = 0; col < op.boundary_mass.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(op.boundary_mass, col); it; ++it) {
      EXPECT_TRUE(boundary_nodes.count(static_cast<int>(it.row())));
    }
  }
}

TEST(Assembly, BilinearFormsAgainstFineIntegration) {
  const double eps = 0.1;
  const auto mesh = square(64);
  const auto op = assemble_operator(mesh, oscillatory(), eps, 1.0);
  Vector x1(op.size()), x2(op.size());
  for (int i = 0; i < op.size(); ++i) {
    x1[i] = mesh->nodes[i].x();
    x2[i] = mesh->nodes[i].y();
  }
  auto p = [&](double x, double y) { return y * std::sqrt(eps) * std::cos(x / std::sqrt(eps)); };
  auto q = [&](double x, double) { return 1 + eps * std::sin(x / std::sqrt(eps)); };
  // x2^T K x2 = int C22, C22 = (p^2 + 1) / q^2
  const double c22 = integrate([&](double x, double y) { return (p(x, y) * p(x, y) + 1) / (q(x, y) * q(x, y)); }, 800);
  EXPECT_NEAR(x2.dot(op.stiffness * x2), c22, 1e-6);
  // 1^T N x1 = int (C e1) . grad Jh / Jh with C e1 = (1, -p/q), grad Jh = (sqrt(eps) cos, 0)
  const double drift = integrate(
      [&](double x, double y) { return std::sqrt(eps) * std::cos(x / std::sqrt(eps)) / q(x, y); }, 800);
  EXPECT_NEAR(Vector::Ones(op.size()).dot(op.drift * x1), drift, 1e-6);
  EXPECT_NEAR(Vector::Ones(op.size()).dot(op.drift * x2),
              integrate([&](double x, double y) { return -std::sqrt(eps) * std::cos(x / std::sqrt(eps)) * p(x, y) /
                                                          (q(x, y) * q(x, y)); },
                        800),
              1e-6);
}

TEST(Assembly, DriftConventionFlipsSign) {
  const auto mesh = square(32);
  AssemblyOptions other;
  other.drift = DriftConvention::PullbackConsistent;
  const auto a = assemble_operator(mesh, oscillatory(), 0.05, 1.0);
  const auto b = assemble_operator(mesh, oscillatory(), 0.05, 1.0, other);
  EXPECT_GT(DenseMatrix(a.drift).norm(), 0.0);
  EXPECT_LT((DenseMatrix(a.drift) + DenseMatrix(b.drift)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Assembly, BoundaryMassIsMuWeighted) {
  const auto mesh = square(32);
  const auto op = assemble_operator(mesh, oscillatory(), 0.05, 1.0);
  const auto& line = op.edge_quadrature;
  for (std::size_t e = 0; e < mesh->boundary_edges.size(); e += 7) {
    const auto& edge = mesh->boundary_edges[e];
    const double len = (mesh->nodes[edge.nodes[1]] - mesh->nodes[edge.nodes[0]]).norm();
    double off = 0.0;
    for (std::size_t k = 0; k < line.weights.size(); ++k) {
      const double s = line.nodes[k];
      const Vec2 x = (1 - s) * mesh->nodes[edge.nodes[0]] + s * mesh->nodes[edge.nodes[1]];
      const double mu = boundary_ratio(op.family, op.eps, {x, mesh->unit_tangent(edge)});
      EXPECT_EQ(mu, op.edge_mu[e * line.weights.size() + k]);
      off += line.weights[k] * len * mu * s * (1 - s);
    }
    EXPECT_NEAR(op.boundary_mass.coeff(edge.nodes[0], edge.nodes[1]), off, 1e-15);
  }
}

TEST(Assembly, SweepShrinksStiffnessDefect) {
  const auto mesh = square(64);
  const auto op0 = assemble_operator(mesh, oscillatory(), 0.0, 1.0);
  double previous = INFINITY;
  for (double eps : {0.1, 0.05, 0.025, 0.0125}) {
    const auto op = assemble_operator(mesh, oscillatory(), eps, 1.0);
    const double defect = SparseMatrix(op.stiffness - op0.stiffness).norm();
    EXPECT_GT(defect, 0.0);
    EXPECT_LT(defect, previous);
    previous = defect;
  }
}

TEST(Assembly, QuadratureConverged) {
  const auto mesh = square(64);
  AssemblyOptions high;
  high.triangle_degree = 8;
  high.edge_points = 8;
  const auto lo = assemble_operator(mesh, oscillatory(), 0.1, 1.0);
  const auto hi = assemble_operator(mesh, oscillatory(), 0.1, 1.0, high);
  EXPECT_LT(SparseMatrix(lo.stiffness - hi.stiffness).coeffs().cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(SparseMatrix(lo.drift - hi.drift).coeffs().cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(SparseMatrix(lo.boundary_mass - hi.boundary_mass).coeffs().cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(SparseMatrix(lo.mass - hi.mass).coeffs().cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Assembly, RejectsUnderResolvedMesh) {
  EXPECT_THROW(assemble_operator(square(16), oscillatory(), 0.0125, 1.0), UnderResolved);
  EXPECT_NO_THROW(assemble_operator(square(64), oscillatory(), 0.0125, 1.0));
  DiffeoFamily disk;
  disk.kind = FamilyKind::NormalField;
  EXPECT_THROW(assemble_operator(square(8), disk, 0.1, 1.0), std::invalid_argument);
}

TEST(Assembly, NormalFieldOnDisk) {
  DiffeoFamily fam;
  fam.kind = FamilyKind::NormalField;
  fam.jacobian_mode = JacobianMode::FiniteDifference;
  const auto mesh = std::make_shared<const Mesh>(build_disk_mesh(12));
  const auto op0 = assemble_operator(mesh, fam, 0.0, 1.0);
  const auto op = assemble_operator(mesh, fam, 0.05, 1.0);
  const Vector ones = Vector::Ones(op.size());
  EXPECT_LT((op.stiffness * ones).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_GT(SparseMatrix(op.stiffness - op0.stiffness).norm(), 0.0);
  EXPECT_NEAR(ones.dot(op0.boundary_mass * ones), 72 * 2 * std::sin(M_PI / 72), 1e-12);
}

TEST(Loads, Examples) {
  const auto mesh = square(32);
  const auto op = assemble_operator(mesh, oscillatory(), 0.0, 1.0);
  SemilinearProblem zero;
  const Vector u = Vector::LinSpaced(op.size(), -1.0, 1.0);
  const LoadVectors none = nonlinear_loads(op, u, zero);
  EXPECT_EQ(none.f.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(none.g.cwiseAbs().maxCoeff(), 0.0);

  SemilinearProblem constant_f;
  constant_f.f.coefficients = {1.0};
  EXPECT_NEAR(nonlinear_loads(op, u, constant_f).f.sum(), 1.0, 1e-12);

  SemilinearProblem constant_g;
  constant_g.g.coefficients = {1.0};
  const LoadVectors g = nonlinear_loads(op, u, constant_g);
  EXPECT_NEAR(g.g.sum(), 4.0, 1e-10);
  std::set<int> boundary_nodes;
  for (const auto& e : mesh->boundary_edges) boundary_nodes.insert(e.nodes[0]);
  for (int i = 0; i < op.size(); ++i) {
    if (!boundary_nodes.count(i)) EXPECT_EQ(g.g[i], 0.0);
  }
  const LoadVectors lumped = nonlinear_loads(op, u, constant_g, MassMode::Lumped);
  EXPECT_NEAR(lumped.g.sum(), 4.0, 1e-12);
}

TEST(Loads, QuadraticFieldExact) {
  // f(u) = u^2 on the linear field u = x: int x^2 phi_i summed = 1/3
  const auto mesh = square(16);
  const auto op = assemble_operator(mesh, oscillatory(), 0.0, 1.0);
  SemilinearProblem p;
  p.f.coefficients = {0.0, 0.0, 1.0};
  Vector u(op.size());
  for (int i = 0; i < op.size(); ++i) u[i] = mesh->nodes[i].x();
  EXPECT_NEAR(nonlinear_loads(op, u, p).f.sum(), 1.0 / 3.0, 1e-14);
}

TEST(Loads, NonFiniteSignalsBlowUp) {
  const auto op = assemble_operator(square(8), oscillatory(), 0.0, 1.0);
  SemilinearProblem p = scenario_a();
  Vector u = Vector::Zero(op.size());
  u[3] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(nonlinear_loads(op, u, p), BlowUp);
}

TEST(Lumping, MassPreserved) {
  const auto op = assemble_operator(square(32), oscillatory(), 0.0, 1.0);
  EXPECT_NEAR(op.lumped_mass.sum(), DenseMatrix(op.mass).sum(), 1e-14);
  EXPECT_NEAR(op.lumped_mass.sum(), 1.0, 1e-12);
  EXPECT_GT(op.lumped_mass.minCoeff(), 0.0);
}

TEST(Jacobian, GateauxMatchesFiniteDifferences) {
  const auto mesh = square(32);
  const auto op = assemble_operator(mesh, oscillatory(), 0.05, 1.0);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (const auto& problem : {scenario_a(), scenario_b()}) {
    for (MassMode mode : {MassMode::Consistent, MassMode::Lumped}) {
      for (int trial = 0; trial < 5; ++trial) {
        Vector u(op.size()), w(op.size());
        for (int i = 0; i < op.size(); ++i) {
          u[i] = 1.5 * unit(rng);
          w[i] = unit(rng);
        }
        const double h = 1e-6;
        const Vector fd = (stationary_residual(op, u + h * w, problem, mode) - stationary_residual(op, u, problem, mode)) / h;
        const Vector exact = stationary_jacobian(op, u, problem, mode) * w;
        EXPECT_LT((fd - exact).norm() / exact.norm(), 1e-5);
      }
    }
  }
}

TEST(Norms, ReferenceValues) {
  const auto mesh = square(32);
  const FieldNorms norms(*mesh);
  Vector ones = Vector::Ones(norms.size()), x(norms.size());
  for (int i = 0; i < norms.size(); ++i) x[i] = mesh->nodes[i].x();
  EXPECT_NEAR(norms.norm(ones, NormKind::L2), 1.0, 1e-12);
  EXPECT_NEAR(norms.norm(ones, NormKind::H1), 1.0, 1e-12);
  EXPECT_NEAR(norms.norm(x, NormKind::L2), std::sqrt(1.0 / 3.0), 1e-12);
  EXPECT_NEAR(norms.norm(x, NormKind::H1), std::sqrt(1.0 / 3.0 + 1.0), 1e-12);
  EXPECT_EQ(norms.norm(-2.0 * x, NormKind::Sup), 2.0);
}
