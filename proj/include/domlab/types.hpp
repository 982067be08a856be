#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace domlab {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Mass treatment shared by eigenproblems, loads and time stepping.
enum class MassMode { Consistent, Lumped };

}  // namespace domlab
