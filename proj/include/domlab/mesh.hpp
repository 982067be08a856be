#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "domlab/geometry.hpp"
#include "domlab/types.hpp"

namespace domlab {

/// Boundary piece of the reference domain. Square sides follow the usual
/// labelling: I1 top, I2 right, I3 bottom, I4 left. The disk has one arc.
enum class EdgeTag : int { Arc = 0, Top = 1, Right = 2, Bottom = 3, Left = 4 };

std::string to_string(EdgeTag tag);

struct BoundaryEdge {
  std::array<int, 2> nodes;
  EdgeTag tag;
};

struct Mesh {
  ReferenceDomain domain = ReferenceDomain::UnitSquare;
  std::vector<Vec2> nodes;
  /// Counterclockwise node triples.
  std::vector<std::array<int, 3>> triangles;
  /// Single closed counterclockwise loop.
  std::vector<BoundaryEdge> boundary_edges;
  double h_max = 0.0;

  int node_count() const noexcept { return static_cast<int>(nodes.size()); }
  double signed_area(int triangle) const;
  /// Outward unit normal of a boundary edge.
  Vec2 outward_normal(const BoundaryEdge& edge) const;
  Vec2 unit_tangent(const BoundaryEdge& edge) const;
};

enum class MeshPolicy { Production, Testing };

/// Structured mesh of the unit square, n subdivisions per axis, every cell
/// split along its SW-NE diagonal. Nodes are ordered lexicographically,
/// index = j*(n+1) + i for the node (i/n, j/n). The diagonal pattern makes the
/// eps = 0 stiffness matrix the 5-point Laplacian (an M-matrix).
/// Production policy requires n >= 4.
Mesh build_square_mesh(int n, MeshPolicy policy = MeshPolicy::Production);

/// Concentric-ring mesh of the unit disk: `level` rings, ring k carries 6k
/// nodes at radius k/level. The boundary is the polygon through the outer ring.
Mesh build_disk_mesh(int level);

/// Plain-text export: "nodes <count>" then "x y" lines, "triangles <count>"
/// then "i j k" lines, "boundary_edges <count>" then "i j tag" lines.
void write_mesh(std::ostream& out, const Mesh& mesh);

/// Coordinate text format, one "row col value" record per line.
void write_matrix(std::ostream& out, const SparseMatrix& matrix);

}  // namespace domlab
