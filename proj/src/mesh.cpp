#include "domlab/mesh.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace domlab {

std::string to_string(EdgeTag tag) {
  switch (tag) {
    case EdgeTag::Arc:
      return "arc";
    case EdgeTag::Top:
      return "I1";
    case EdgeTag::Right:
      return "I2";
    case EdgeTag::Bottom:
      return "I3";
    case EdgeTag::Left:
      return "I4";
  }
  return "?";
}

double Mesh::signed_area(int triangle) const {
  const auto& t = triangles[triangle];
  const Vec2 e1 = nodes[t[1]] - nodes[t[0]];
  const Vec2 e2 = nodes[t[2]] - nodes[t[0]];
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

Vec2 Mesh::unit_tangent(const BoundaryEdge& edge) const {
  return (nodes[edge.nodes[1]] - nodes[edge.nodes[0]]).normalized();
}

Vec2 Mesh::outward_normal(const BoundaryEdge& edge) const {
  const Vec2 t = unit_tangent(edge);
  return {t.y(), -t.x()};
}

namespace {

double longest_edge(const Mesh& mesh) {
  double h = 0.0;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      h = std::max(h, (mesh.nodes[t[k]] - mesh.nodes[t[(k + 1) % 3]]).norm());
    }
  }
  return h;
}

}  // namespace

Mesh build_square_mesh(int n, MeshPolicy policy) {
  const int minimum = policy == MeshPolicy::Production ? 4 : 1;
  if (n < minimum) {
    throw std::invalid_argument("square mesh needs n >= " + std::to_string(minimum) + ", got " + std::to_string(n));
  }
  Mesh mesh;
  mesh.domain = ReferenceDomain::UnitSquare;
  const int stride = n + 1;
  mesh.nodes.reserve(static_cast<std::size_t>(stride) * stride);
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      // exact endpoints so that boundary nodes sit on x = 1 / y = 1
      mesh.nodes.emplace_back(i == n ? 1.0 : static_cast<double>(i) / n, j == n ? 1.0 : static_cast<double>(j) / n);
    }
  }
  auto id = [stride](int i, int j) { return j * stride + i; };
  mesh.triangles.reserve(2 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = id(i, j), v10 = id(i + 1, j), v11 = id(i + 1, j + 1), v01 = id(i, j + 1);
      mesh.triangles.push_back({v00, v10, v11});
      mesh.triangles.push_back({v00, v11, v01});
    }
  }
  for (int i = 0; i < n; ++i) mesh.boundary_edges.push_back({{id(i, 0), id(i + 1, 0)}, EdgeTag::Bottom});
  for (int j = 0; j < n; ++j) mesh.boundary_edges.push_back({{id(n, j), id(n, j + 1)}, EdgeTag::Right});
  for (int i = n; i > 0; --i) mesh.boundary_edges.push_back({{id(i, n), id(i - 1, n)}, EdgeTag::Top});
  for (int j = n; j > 0; --j) mesh.boundary_edges.push_back({{id(0, j), id(0, j - 1)}, EdgeTag::Left});
  mesh.h_max = longest_edge(mesh);
  return mesh;
}

Mesh build_disk_mesh(int level) {
  if (level < 2) throw std::invalid_argument("disk mesh needs level >= 2");
  Mesh mesh;
  mesh.domain = ReferenceDomain::UnitDisk;
  std::vector<int> ring_start{0};
  mesh.nodes.emplace_back(0.0, 0.0);
  for (int k = 1; k <= level; ++k) {
    ring_start.push_back(mesh.node_count());
    const int count = 6 * k;
    const double radius = static_cast<double>(k) / level;
    for (int m = 0; m < count; ++m) {
      const double angle = 2.0 * std::numbers::pi * m / count;
      mesh.nodes.emplace_back(radius * std::cos(angle), radius * std::sin(angle));
    }
  }
  auto add_ccw = [&mesh](int a, int b, int c) {
    mesh.triangles.push_back({a, b, c});
    if (mesh.signed_area(static_cast<int>(mesh.triangles.size()) - 1) < 0.0) {
      std::swap(mesh.triangles.back()[1], mesh.triangles.back()[2]);
    }
  };
  // first ring: fan around the centre
  for (int m = 0; m < 6; ++m) add_ccw(0, ring_start[1] + m, ring_start[1] + (m + 1) % 6);
  // zip consecutive rings by advancing along increasing angle
  for (int k = 2; k <= level; ++k) {
    const int inner = 6 * (k - 1), outer = 6 * k;
    const int in0 = ring_start[k - 1], out0 = ring_start[k];
    int a = 0, b = 0;
    while (a < inner || b < outer) {
      const double next_inner = 2.0 * std::numbers::pi * (a + 1) / inner;
      const double next_outer = 2.0 * std::numbers::pi * (b + 1) / outer;
      const bool advance_outer = a == inner || (b < outer && next_outer <= next_inner + 1e-14);
      if (advance_outer) {
        add_ccw(in0 + a % inner, out0 + b % outer, out0 + (b + 1) % outer);
        ++b;
      } else {
        add_ccw(in0 + a % inner, out0 + b % outer, in0 + (a + 1) % inner);
        ++a;
      }
    }
  }
  const int outer = 6 * level, out0 = ring_start[level];
  for (int m = 0; m < outer; ++m) mesh.boundary_edges.push_back({{out0 + m, out0 + (m + 1) % outer}, EdgeTag::Arc});
  mesh.h_max = longest_edge(mesh);
  return mesh;
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << std::setprecision(17);
  out << "nodes " << mesh.nodes.size() << '\n';
  for (const auto& p : mesh.nodes) out << p.x() << ' ' << p.y() << '\n';
  out << "triangles " << mesh.triangles.size() << '\n';
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "boundary_edges " << mesh.boundary_edges.size() << '\n';
  for (const auto& e : mesh.boundary_edges) out << e.nodes[0] << ' ' << e.nodes[1] << ' ' << to_string(e.tag) << '\n';
}

void write_matrix(std::ostream& out, const SparseMatrix& matrix) {
  out << std::setprecision(17);
  for (int col = 0; col < matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(matrix, col); it; ++it) {
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
}

}  // namespace domlab
