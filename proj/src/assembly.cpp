#include "domlab/assembly.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "domlab/errors.hpp"

namespace domlab {

namespace {

struct ElementGeometry {
  double area;
  Eigen::Matrix<double, 3, 2> grads;  // gradients of the barycentric functions
};

ElementGeometry element_geometry(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  const Vec2& p0 = mesh.nodes[tri[0]];
  const Vec2& p1 = mesh.nodes[tri[1]];
  const Vec2& p2 = mesh.nodes[tri[2]];
  const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
  ElementGeometry geo;
  geo.area = 0.5 * det;
  geo.grads << p1.y() - p2.y(), p2.x() - p1.x(),  //
      p2.y() - p0.y(), p0.x() - p2.x(),            //
      p0.y() - p1.y(), p1.x() - p0.x();
  geo.grads /= det;
  return geo;
}

Vec2 quadrature_point(const Mesh& mesh, int t, const std::array<double, 3>& bary) {
  const auto& tri = mesh.triangles[t];
  return bary[0] * mesh.nodes[tri[0]] + bary[1] * mesh.nodes[tri[1]] + bary[2] * mesh.nodes[tri[2]];
}

double edge_length(const Mesh& mesh, const BoundaryEdge& e) {
  return (mesh.nodes[e.nodes[1]] - mesh.nodes[e.nodes[0]]).norm();
}

void require_finite(double value) {
  if (!std::isfinite(value)) {
    throw BlowUp("non-finite nonlinearity evaluation", std::numeric_limits<double>::quiet_NaN());
  }
}

SparseMatrix from_triplets(int n, const std::vector<Triplet>& triplets) {
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

}  // namespace

SparseMatrix diagonal_matrix(const Vector& diagonal) {
  SparseMatrix d(diagonal.size(), diagonal.size());
  std::vector<Triplet> triplets;
  triplets.reserve(diagonal.size());
  for (Eigen::Index i = 0; i < diagonal.size(); ++i) triplets.emplace_back(i, i, diagonal[i]);
  d.setFromTriplets(triplets.begin(), triplets.end());
  return d;
}

Vector lump_mass(const SparseMatrix& matrix) {
  Vector rows = Vector::Zero(matrix.rows());
  for (int col = 0; col < matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(matrix, col); it; ++it) rows[it.row()] += it.value();
  }
  return rows;
}

SparseMatrix DiscreteOperator::mass_matrix(MassMode mode) const {
  return mode == MassMode::Consistent ? mass : diagonal_matrix(lumped_mass);
}

SparseMatrix DiscreteOperator::boundary_matrix(MassMode mode) const {
  return mode == MassMode::Consistent ? boundary_mass : diagonal_matrix(lumped_boundary);
}

SparseMatrix DiscreteOperator::system(MassMode mode, bool include_drift) const {
  SparseMatrix s = stiffness + a * mass_matrix(mode);
  if (include_drift) s += drift;
  s.makeCompressed();
  return s;
}

DiscreteOperator assemble_operator(std::shared_ptr<const Mesh> mesh, const DiffeoFamily& family, double eps, double a,
                                   const AssemblyOptions& options) {
  if (!mesh) throw std::invalid_argument("assemble_operator: null mesh");
  if (mesh->domain != family.domain()) {
    throw std::invalid_argument("family " + to_string(family.kind) + " does not live on this mesh's domain");
  }
  if (family.kind == FamilyKind::OscillatorySquare && eps > 0.0 && options.resolution_ratio > 0.0) {
    const double limit = std::pow(eps, family.alpha) / options.resolution_ratio;
    if (mesh->h_max > limit) {
      std::ostringstream msg;
      msg << "mesh under-resolves the coefficient oscillation: h_max = " << mesh->h_max << " > eps^alpha/"
          << options.resolution_ratio << " = " << limit << " at eps = " << eps;
      throw UnderResolved(msg.str());
    }
  }

  DiscreteOperator op;
  op.mesh = mesh;
  op.family = family;
  op.eps = eps;
  op.a = a;
  op.options = options;
  op.triangle_quadrature = triangle_rule(options.triangle_degree);
  op.edge_quadrature = gauss_legendre(options.edge_points);
  const double drift_sign = options.drift == DriftConvention::Published ? 1.0 : -1.0;

  const int n = mesh->node_count();
  const auto& rule = op.triangle_quadrature;
  std::vector<Triplet> k_triplets, n_triplets, m_triplets, b_triplets;
  k_triplets.reserve(9 * mesh->triangles.size());
  m_triplets.reserve(9 * mesh->triangles.size());
  if (eps > 0.0) n_triplets.reserve(9 * mesh->triangles.size());

  for (int t = 0; t < static_cast<int>(mesh->triangles.size()); ++t) {
    const ElementGeometry geo = element_geometry(*mesh, t);
    Eigen::Matrix3d ke = Eigen::Matrix3d::Zero(), ne = Eigen::Matrix3d::Zero(), me = Eigen::Matrix3d::Zero();
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto& bary = rule.points[q];
      const double w = rule.weights[q] * geo.area;
      const Vec2 x = quadrature_point(*mesh, t, bary);
      const JacobianData jac = jacobian(family, eps, x);
      const Mat2 c = jac.b.transpose() * jac.b;
      const Eigen::Matrix<double, 3, 2> flux = geo.grads * c;  // row j: (C grad phi_j)^T
      ke.noalias() += w * flux * geo.grads.transpose();
      const Eigen::Vector3d phi(bary[0], bary[1], bary[2]);
      me.noalias() += w * phi * phi.transpose();
      if (eps > 0.0) {
        const Vec2 log_grad = jac.grad_jh / jac.jh;
        // ne(i, j) = phi_i (C grad phi_j) . grad Jh / Jh
        ne.noalias() += drift_sign * w * phi * (flux * log_grad).transpose();
      }
    }
    const auto& tri = mesh->triangles[t];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        k_triplets.emplace_back(tri[i], tri[j], ke(i, j));
        m_triplets.emplace_back(tri[i], tri[j], me(i, j));
        if (eps > 0.0) n_triplets.emplace_back(tri[i], tri[j], ne(i, j));
      }
    }
  }

  const auto& line = op.edge_quadrature;
  op.edge_mu.resize(mesh->boundary_edges.size() * line.weights.size());
  for (std::size_t e = 0; e < mesh->boundary_edges.size(); ++e) {
    const BoundaryEdge& edge = mesh->boundary_edges[e];
    const Vec2& p0 = mesh->nodes[edge.nodes[0]];
    const Vec2& p1 = mesh->nodes[edge.nodes[1]];
    const Vec2 tangent = mesh->unit_tangent(edge);
    const double len = edge_length(*mesh, edge);
    Eigen::Matrix2d be = Eigen::Matrix2d::Zero();
    for (std::size_t q = 0; q < line.weights.size(); ++q) {
      const double s = line.nodes[q];
      const double mu = boundary_ratio(family, eps, {(1.0 - s) * p0 + s * p1, tangent});
      op.edge_mu[e * line.weights.size() + q] = mu;
      const Eigen::Vector2d psi(1.0 - s, s);
      be.noalias() += line.weights[q] * len * mu * psi * psi.transpose();
    }
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) b_triplets.emplace_back(edge.nodes[i], edge.nodes[j], be(i, j));
    }
  }

  op.stiffness = from_triplets(n, k_triplets);
  op.mass = from_triplets(n, m_triplets);
  op.drift = from_triplets(n, n_triplets);
  op.boundary_mass = from_triplets(n, b_triplets);
  op.lumped_mass = lump_mass(op.mass);
  op.lumped_boundary = lump_mass(op.boundary_mass);
  return op;
}

LoadVectors nonlinear_loads(const DiscreteOperator& op, const Vector& u, const SemilinearProblem& problem,
                            MassMode mode) {
  const Mesh& mesh = *op.mesh;
  const int n = mesh.node_count();
  if (u.size() != n) throw std::invalid_argument("nonlinear_loads: field size does not match mesh");
  LoadVectors loads{Vector::Zero(n), Vector::Zero(n)};

  if (mode == MassMode::Lumped) {
    for (int i = 0; i < n; ++i) {
      if (!problem.f.is_zero()) loads.f[i] = op.lumped_mass[i] * problem.f.value(u[i]);
      if (!problem.g.is_zero() && op.lumped_boundary[i] != 0.0) loads.g[i] = op.lumped_boundary[i] * problem.g.value(u[i]);
    }
    for (int i = 0; i < n; ++i) {
      require_finite(loads.f[i]);
      require_finite(loads.g[i]);
    }
    return loads;
  }

  if (!problem.f.is_zero()) {
    const auto& rule = op.triangle_quadrature;
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
      const auto& tri = mesh.triangles[t];
      const double area = mesh.signed_area(t);
      for (std::size_t q = 0; q < rule.weights.size(); ++q) {
        const auto& bary = rule.points[q];
        const double uh = bary[0] * u[tri[0]] + bary[1] * u[tri[1]] + bary[2] * u[tri[2]];
        const double fw = rule.weights[q] * area * problem.f.value(uh);
        require_finite(fw);
        for (int i = 0; i < 3; ++i) loads.f[tri[i]] += fw * bary[i];
      }
    }
  }
  if (!problem.g.is_zero()) {
    const auto& line = op.edge_quadrature;
    for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
      const BoundaryEdge& edge = mesh.boundary_edges[e];
      const double len = edge_length(mesh, edge);
      for (std::size_t q = 0; q < line.weights.size(); ++q) {
        const double s = line.nodes[q];
        const double uh = (1.0 - s) * u[edge.nodes[0]] + s * u[edge.nodes[1]];
        const double gw = line.weights[q] * len * op.edge_mu[e * line.weights.size() + q] * problem.g.value(uh);
        require_finite(gw);
        loads.g[edge.nodes[0]] += gw * (1.0 - s);
        loads.g[edge.nodes[1]] += gw * s;
      }
    }
  }
  return loads;
}

SparseMatrix nonlinear_jacobian(const DiscreteOperator& op, const Vector& u, const SemilinearProblem& problem,
                                MassMode mode) {
  const Mesh& mesh = *op.mesh;
  const int n = mesh.node_count();
  if (mode == MassMode::Lumped) {
    Vector diag = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
      diag[i] = op.lumped_mass[i] * problem.f.derivative(u[i]) + op.lumped_boundary[i] * problem.g.derivative(u[i]);
    }
    return diagonal_matrix(diag);
  }
  std::vector<Triplet> triplets;
  if (!problem.f.is_zero()) {
    const auto& rule = op.triangle_quadrature;
    triplets.reserve(9 * mesh.triangles.size());
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
      const auto& tri = mesh.triangles[t];
      const double area = mesh.signed_area(t);
      Eigen::Matrix3d je = Eigen::Matrix3d::Zero();
      for (std::size_t q = 0; q < rule.weights.size(); ++q) {
        const auto& bary = rule.points[q];
        const double uh = bary[0] * u[tri[0]] + bary[1] * u[tri[1]] + bary[2] * u[tri[2]];
        const Eigen::Vector3d phi(bary[0], bary[1], bary[2]);
        je.noalias() += rule.weights[q] * area * problem.f.derivative(uh) * phi * phi.transpose();
      }
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) triplets.emplace_back(tri[i], tri[j], je(i, j));
    }
  }
  if (!problem.g.is_zero()) {
    const auto& line = op.edge_quadrature;
    for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
      const BoundaryEdge& edge = mesh.boundary_edges[e];
      const double len = edge_length(mesh, edge);
      Eigen::Matrix2d je = Eigen::Matrix2d::Zero();
      for (std::size_t q = 0; q < line.weights.size(); ++q) {
        const double s = line.nodes[q];
        const double uh = (1.0 - s) * u[edge.nodes[0]] + s * u[edge.nodes[1]];
        const Eigen::Vector2d psi(1.0 - s, s);
        je.noalias() += line.weights[q] * len * op.edge_mu[e * line.weights.size() + q] * problem.g.derivative(uh) *
                        psi * psi.transpose();
      }
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) triplets.emplace_back(edge.nodes[i], edge.nodes[j], je(i, j));
    }
  }
  return from_triplets(n, triplets);
}

Vector stationary_residual(const DiscreteOperator& op, const Vector& u, const SemilinearProblem& problem,
                           MassMode mode) {
  const LoadVectors loads = nonlinear_loads(op, u, problem, mode);
  return op.system(mode) * u - loads.f - loads.g;
}

SparseMatrix stationary_jacobian(const DiscreteOperator& op, const Vector& u, const SemilinearProblem& problem,
                                 MassMode mode) {
  SparseMatrix j = op.system(mode) - nonlinear_jacobian(op, u, problem, mode);
  j.makeCompressed();
  return j;
}

std::string to_string(NormKind kind) {
  switch (kind) {
    case NormKind::L2:
      return "L2";
    case NormKind::H1:
      return "H1";
    case NormKind::Sup:
      return "sup";
  }
  return "?";
}

FieldNorms::FieldNorms(const Mesh& mesh) {
  const int n = mesh.node_count();
  std::vector<Triplet> m_triplets, k_triplets;
  m_triplets.reserve(9 * mesh.triangles.size());
  k_triplets.reserve(9 * mesh.triangles.size());
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const ElementGeometry geo = element_geometry(mesh, t);
    const auto& tri = mesh.triangles[t];
    const Eigen::Matrix3d ke = geo.area * geo.grads * geo.grads.transpose();
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        m_triplets.emplace_back(tri[i], tri[j], geo.area * (i == j ? 2.0 : 1.0) / 12.0);
        k_triplets.emplace_back(tri[i], tri[j], ke(i, j));
      }
    }
  }
  mass_ = from_triplets(n, m_triplets);
  h1_ = from_triplets(n, k_triplets) + mass_;
  h1_.makeCompressed();
}

double FieldNorms::norm(const Vector& u, NormKind kind) const {
  switch (kind) {
    case NormKind::L2:
      return std::sqrt(std::max(0.0, u.dot(mass_ * u)));
    case NormKind::H1:
      return std::sqrt(std::max(0.0, u.dot(h1_ * u)));
    case NormKind::Sup:
      return u.size() == 0 ? 0.0 : u.cwiseAbs().maxCoeff();
  }
  return 0.0;
}

}  // namespace domlab
