#pragma once

#include <array>
#include <vector>

namespace domlab {

/// Rule on [0, 1]; weights sum to 1.
struct LineRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Rule on a triangle in barycentric coordinates; weights sum to 1 (multiply by area).
struct TriangleRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre mapped to [0, 1], exact for polynomials of degree 2n-1.
LineRule gauss_legendre(int n);

/// Rule exact for polynomials up to `degree`. Degree 4 is the symmetric
/// 6-point rule; other degrees use a collapsed (Duffy) Gauss product rule.
TriangleRule triangle_rule(int degree);

}  // namespace domlab
