#include "domlab/geometry.hpp"

#include <cmath>
#include <sstream>

#include "domlab/errors.hpp"

namespace domlab {

namespace {

constexpr double kSingularJacobian = 1e-12;
constexpr double kDomainSlack = 1e-12;

void require_eps(const DiffeoFamily& family, double eps) {
  if (!std::isfinite(eps) || eps < 0.0 || eps > family.eps_max) {
    std::ostringstream msg;
    msg << "eps = " << eps << " outside [0, " << family.eps_max << "]";
    throw DomainError(msg.str());
  }
}

void require_inside(const DiffeoFamily& family, const Vec2& x) {
  bool inside = false;
  if (family.domain() == ReferenceDomain::UnitSquare) {
    inside = x.x() >= -kDomainSlack && x.x() <= 1.0 + kDomainSlack && x.y() >= -kDomainSlack &&
             x.y() <= 1.0 + kDomainSlack;
  } else {
    inside = x.norm() <= 1.0 + kDomainSlack;
  }
  if (!inside) {
    std::ostringstream msg;
    msg << "point (" << x.x() << ", " << x.y() << ") outside the reference domain";
    throw DomainError(msg.str());
  }
}

void require_nonsingular(const JacobianData& jac, const Vec2& x) {
  if (!(std::abs(jac.jh) >= kSingularJacobian)) {
    std::ostringstream msg;
    msg << "singular Jacobian (Jh = " << jac.jh << ") at (" << x.x() << ", " << x.y() << ")";
    throw SingularJacobian(msg.str());
  }
}

Mat2 inverse_transpose(const Mat2& dh) {
  const double det = dh.determinant();
  Mat2 b;
  // (Dh^{-1})^T = cofactor(Dh) / det
  b << dh(1, 1) / det, -dh(1, 0) / det, -dh(0, 1) / det, dh(0, 0) / det;
  return b;
}

Mat2 map_derivative_fd(const DiffeoFamily& family, double eps, const Vec2& x, double step) {
  Mat2 dh;
  for (int j = 0; j < 2; ++j) {
    Vec2 e = Vec2::Zero();
    e[j] = step;
    dh.col(j) = (detail::map_unchecked(family, eps, x + e) - detail::map_unchecked(family, eps, x - e)) /
                (2.0 * step);
  }
  return dh;
}

// Step for derivatives of first-derivative quantities (grad Jh, grad b).
double second_step(const DiffeoFamily& family) { return 10.0 * family.fd_step; }

bool is_identity_case(const DiffeoFamily& family, double eps) {
  return eps == 0.0 || family.kind == FamilyKind::Identity;
}

}  // namespace

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::Identity:
      return "identity";
    case FamilyKind::OscillatorySquare:
      return "oscillatory-square";
    case FamilyKind::NormalField:
      return "normal-field";
  }
  return "unknown";
}

FamilyKind family_kind_from_string(const std::string& name) {
  if (name == "identity") return FamilyKind::Identity;
  if (name == "oscillatory-square" || name == "oscillatory") return FamilyKind::OscillatorySquare;
  if (name == "normal-field") return FamilyKind::NormalField;
  throw std::invalid_argument("unknown family kind '" + name + "'");
}

std::string to_string(JacobianMode mode) {
  return mode == JacobianMode::ClosedForm ? "closed-form" : "finite-difference";
}

JacobianMode jacobian_mode_from_string(const std::string& name) {
  if (name == "closed-form") return JacobianMode::ClosedForm;
  if (name == "finite-difference") return JacobianMode::FiniteDifference;
  throw std::invalid_argument("unknown jacobian mode '" + name + "'");
}

double collar_cutoff(double t, double collar) {
  const double s = std::abs(t) / (0.5 * collar);
  if (s >= 1.0) return 0.0;
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

double collar_cutoff_derivative(double t, double collar) {
  const double half = 0.5 * collar;
  const double s = std::abs(t) / half;
  if (s >= 1.0) return 0.0;
  const double ds = -30.0 * s * s * (1.0 - s) * (1.0 - s);
  return (t < 0.0 ? -ds : ds) / half;
}

namespace detail {

Vec2 map_unchecked(const DiffeoFamily& family, double eps, const Vec2& x) {
  if (is_identity_case(family, eps)) return x;
  switch (family.kind) {
    case FamilyKind::OscillatorySquare: {
      const double arg = x.x() / std::pow(eps, family.alpha);
      return {x.x(), x.y() + x.y() * eps * std::sin(arg)};
    }
    case FamilyKind::NormalField: {
      const double r = x.norm();
      const double t = r - 1.0;
      const double eta = collar_cutoff(t, family.collar);
      if (eta == 0.0 || r == 0.0) return x;
      const Vec2 normal = x / r;
      const double phi = std::atan2(x.y(), x.x());
      const double theta = eps * family.amplitude * std::cos(family.angular_mode * phi);
      return x + eta * theta * normal;
    }
    case FamilyKind::Identity:
      break;
  }
  return x;
}

JacobianData jacobian_closed_form(const DiffeoFamily& family, double eps, const Vec2& x) {
  JacobianData jac;
  if (is_identity_case(family, eps)) return jac;
  if (family.kind != FamilyKind::OscillatorySquare) {
    throw std::invalid_argument("closed-form Jacobian not available for " + to_string(family.kind));
  }
  const double wave = std::pow(eps, family.alpha);
  const double s = std::sin(x.x() / wave);
  const double c = std::cos(x.x() / wave);
  const double slope = std::pow(eps, 1.0 - family.alpha);  // eps / eps^alpha
  jac.dh << 1.0, 0.0, x.y() * slope * c, 1.0 + eps * s;
  jac.jh = 1.0 + eps * s;
  jac.grad_jh = Vec2(slope * c, 0.0);
  require_nonsingular(jac, x);
  jac.b = inverse_transpose(jac.dh);
  return jac;
}

JacobianData jacobian_finite_difference(const DiffeoFamily& family, double eps, const Vec2& x, double step) {
  JacobianData jac;
  if (is_identity_case(family, eps)) return jac;
  if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  jac.dh = map_derivative_fd(family, eps, x, step);
  jac.jh = jac.dh.determinant();
  require_nonsingular(jac, x);
  const double h2 = 10.0 * step;
  for (int k = 0; k < 2; ++k) {
    Vec2 e = Vec2::Zero();
    e[k] = h2;
    const double jp = map_derivative_fd(family, eps, x + e, step).determinant();
    const double jm = map_derivative_fd(family, eps, x - e, step).determinant();
    jac.grad_jh[k] = (jp - jm) / (2.0 * h2);
  }
  jac.b = inverse_transpose(jac.dh);
  return jac;
}

}  // namespace detail

Vec2 eval_map(const DiffeoFamily& family, double eps, const Vec2& x) {
  require_eps(family, eps);
  require_inside(family, x);
  return detail::map_unchecked(family, eps, x);
}

namespace {

JacobianData jacobian_unchecked(const DiffeoFamily& family, double eps, const Vec2& x) {
  if (family.jacobian_mode == JacobianMode::ClosedForm && family.has_closed_form()) {
    return detail::jacobian_closed_form(family, eps, x);
  }
  if (family.jacobian_mode == JacobianMode::ClosedForm) {
    throw std::invalid_argument("closed-form Jacobian not available for " + to_string(family.kind) +
                                "; use finite-difference mode");
  }
  return detail::jacobian_finite_difference(family, eps, x, family.fd_step);
}

}  // namespace

JacobianData jacobian(const DiffeoFamily& family, double eps, const Vec2& x) {
  require_eps(family, eps);
  require_inside(family, x);
  return jacobian_unchecked(family, eps, x);
}

PointCoefficients pullback_coefficients(const DiffeoFamily& family, double eps, const Vec2& x) {
  require_eps(family, eps);
  require_inside(family, x);
  PointCoefficients out;
  if (is_identity_case(family, eps)) return out;

  const JacobianData jac = jacobian_unchecked(family, eps, x);
  out.jh = jac.jh;
  out.grad_jh = jac.grad_jh;
  out.c = jac.b.transpose() * jac.b;
  out.c(1, 0) = out.c(0, 1);

  if (family.jacobian_mode == JacobianMode::ClosedForm && family.kind == FamilyKind::OscillatorySquare) {
    // b = [[1, -p/q], [0, 1/q]] with p = x2 eps^{1-alpha} cos, q = 1 + eps sin.
    // Only d_2 b_12 = -eps^{1-alpha} cos / q survives in sum_k d_k b_ik.
    const double wave = std::pow(eps, family.alpha);
    const double slope = std::pow(eps, 1.0 - family.alpha);
    const double c = std::cos(x.x() / wave);
    const double q = 1.0 + eps * std::sin(x.x() / wave);
    const double divergence_row1 = -slope * c / q;
    out.drift = divergence_row1 * jac.b.row(0).transpose();
  } else {
    // A_j = sum_i (sum_k d_k b_ik) b_ij, divergence of the rows of b by central differences.
    const double h2 = second_step(family);
    Vec2 row_divergence = Vec2::Zero();
    for (int k = 0; k < 2; ++k) {
      Vec2 e = Vec2::Zero();
      e[k] = h2;
      const Mat2 bp = jacobian_unchecked(family, eps, x + e).b;
      const Mat2 bm = jacobian_unchecked(family, eps, x - e).b;
      for (int i = 0; i < 2; ++i) row_divergence[i] += (bp(i, k) - bm(i, k)) / (2.0 * h2);
    }
    out.drift = jac.b.transpose() * row_divergence;
  }
  return out;
}

double boundary_ratio(const DiffeoFamily& family, double eps, const BoundaryPoint& s) {
  require_eps(family, eps);
  require_inside(family, s.x);
  if (is_identity_case(family, eps)) return 1.0;
  const JacobianData jac = jacobian_unchecked(family, eps, s.x);
  const Vec2 tangent = s.tangent.normalized();
  return (jac.dh * tangent).norm() / jac.jh;
}

HypothesisReport check_hypotheses(const DiffeoFamily& family, double eps, int grid) {
  require_eps(family, eps);
  if (grid < 64) {
    throw UnderResolved("hypothesis sampling needs at least 64 samples per axis, got " + std::to_string(grid));
  }
  const bool square = family.domain() == ReferenceDomain::UnitSquare;
  const double lo = square ? 0.0 : -1.0;
  const double spacing = (square ? 1.0 : 2.0) / grid;
  if (family.kind == FamilyKind::OscillatorySquare && eps > 0.0) {
    const double wavelength = std::pow(eps, family.alpha);
    if (spacing > wavelength / 8.0) {
      std::ostringstream msg;
      msg << "sampling spacing " << spacing << " exceeds eps^alpha/8 = " << wavelength / 8.0;
      throw UnderResolved(msg.str());
    }
  }

  HypothesisReport report;
  report.eps = eps;
  for (int j = 0; j <= grid; ++j) {
    for (int i = 0; i <= grid; ++i) {
      const Vec2 x(lo + i * spacing, lo + j * spacing);
      if (!square && x.norm() > 1.0) continue;
      ++report.sample_count;
      if (is_identity_case(family, eps)) continue;
      const Vec2 hx = detail::map_unchecked(family, eps, x);
      const JacobianData jac = jacobian_unchecked(family, eps, x);
      const Mat2 defect = jac.dh - Mat2::Identity();
      const double defect_norm = Eigen::JacobiSVD<Mat2>(defect).singularValues()(0);
      report.map_distance = std::max(report.map_distance, (hx - x).norm());
      report.jacobian_distance = std::max(report.jacobian_distance, defect_norm);
      report.grad_j_sup = std::max(report.grad_j_sup, jac.grad_jh.norm());
    }
  }
  report.c1_distance = std::max(report.map_distance, report.jacobian_distance);
  return report;
}

}  // namespace domlab
