#pragma once

// Perturbation families h_eps of a fixed reference domain and the pointwise
// data needed to pull the Laplacian back onto it.
//
// Conventions: Dh is the Jacobian matrix of h_eps, Jh = det Dh, and
// b = Dh^{-T}. The pulled-back Laplacian reads div(C grad u) - A . grad u with
// C = b^T b and A_j = sum_{i,k} d_k(b_ik) b_ij. On the boundary the flux
// weight is mu = J_boundary h / Jh, where J_boundary h is the tangential
// stretch of h restricted to the boundary.

#include <string>

#include "domlab/types.hpp"

namespace domlab {

enum class FamilyKind { Identity, OscillatorySquare, NormalField };
enum class JacobianMode { ClosedForm, FiniteDifference };
enum class ReferenceDomain { UnitSquare, UnitDisk };

struct DiffeoFamily {
  FamilyKind kind = FamilyKind::OscillatorySquare;
  /// Oscillation exponent, 0 < alpha < 1. Wavelength of the square family is eps^alpha.
  double alpha = 0.5;
  /// Largest admissible eps.
  double eps_max = 0.5;
  /// Normal-field family: theta_eps(phi) = eps * amplitude * cos(angular_mode * phi).
  double amplitude = 1.0;
  int angular_mode = 3;
  /// Normal-field family: collar half-width r; the cutoff vanishes for |t| >= r/2.
  double collar = 0.4;
  JacobianMode jacobian_mode = JacobianMode::ClosedForm;
  double fd_step = 1e-5;

  ReferenceDomain domain() const noexcept {
    return kind == FamilyKind::NormalField ? ReferenceDomain::UnitDisk : ReferenceDomain::UnitSquare;
  }
  bool has_closed_form() const noexcept { return kind != FamilyKind::NormalField; }
};

std::string to_string(FamilyKind kind);
FamilyKind family_kind_from_string(const std::string& name);
std::string to_string(JacobianMode mode);
JacobianMode jacobian_mode_from_string(const std::string& name);

struct JacobianData {
  Mat2 dh = Mat2::Identity();
  double jh = 1.0;
  Vec2 grad_jh = Vec2::Zero();
  Mat2 b = Mat2::Identity();
};

/// Pull-back coefficients at one point. mu is only meaningful on the boundary
/// and is produced by boundary_ratio().
struct PointCoefficients {
  Mat2 c = Mat2::Identity();
  Vec2 drift = Vec2::Zero();
  double jh = 1.0;
  Vec2 grad_jh = Vec2::Zero();
};

/// A point on the reference boundary with the unit tangent of the boundary
/// piece it lies on (counterclockwise orientation).
struct BoundaryPoint {
  Vec2 x;
  Vec2 tangent;
};

struct HypothesisReport {
  double eps = 0.0;
  /// sup |h_eps(x) - x|
  double map_distance = 0.0;
  /// sup ||Dh_eps(x) - I||_2
  double jacobian_distance = 0.0;
  /// max of the two pieces above
  double c1_distance = 0.0;
  /// sup |grad Jh_eps(x)|
  double grad_j_sup = 0.0;
  int sample_count = 0;
};

/// Cutoff used by the normal-field family: eta(0) = 1, eta(t) = 0 for
/// |t| >= collar/2, quintic smoothstep in between (C^2).
double collar_cutoff(double t, double collar);
double collar_cutoff_derivative(double t, double collar);

/// h_eps(x). Returns x bitwise for eps = 0.
Vec2 eval_map(const DiffeoFamily& family, double eps, const Vec2& x);

/// Throws SingularJacobian when |Jh| < 1e-12.
JacobianData jacobian(const DiffeoFamily& family, double eps, const Vec2& x);

PointCoefficients pullback_coefficients(const DiffeoFamily& family, double eps, const Vec2& x);

/// mu_eps = |Dh tangent| / Jh.
double boundary_ratio(const DiffeoFamily& family, double eps, const BoundaryPoint& s);

/// Sup-norm surrogates of the two geometric hypotheses over a (grid+1)^2
/// sample lattice of the reference domain's bounding box (disk: points
/// inside only).
HypothesisReport check_hypotheses(const DiffeoFamily& family, double eps, int grid);

namespace detail {
// Unchecked evaluation, also used by the finite-difference stencils that may
// step slightly outside the domain.
Vec2 map_unchecked(const DiffeoFamily& family, double eps, const Vec2& x);
JacobianData jacobian_closed_form(const DiffeoFamily& family, double eps, const Vec2& x);
JacobianData jacobian_finite_difference(const DiffeoFamily& family, double eps, const Vec2& x, double step);
}  // namespace detail

}  // namespace domlab
