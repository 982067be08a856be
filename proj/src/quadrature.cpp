#include "domlab/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace domlab {

LineRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("Gauss-Legendre needs n >= 1");
  LineRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton on P_n from the Chebyshev-like initial guess
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double derivative = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      derivative = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / derivative;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    derivative = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
    rule.nodes[n - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

TriangleRule triangle_rule(int degree) {
  if (degree < 1) throw std::invalid_argument("triangle rule degree must be >= 1");
  TriangleRule rule;
  if (degree == 4) {
    const double a1 = 0.445948490915965, w1 = 0.223381589678011;
    const double a2 = 0.091576213509771, w2 = 0.109951743655322;
    for (const auto& [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
      const double b = 1.0 - 2.0 * a;
      rule.points.push_back({b, a, a});
      rule.points.push_back({a, b, a});
      rule.points.push_back({a, a, b});
      for (int k = 0; k < 3; ++k) rule.weights.push_back(w);
    }
    return rule;
  }
  // Duffy: (u, v) in [0,1]^2 -> (x, y) = (u, v (1 - u)), dA = (1 - u) du dv.
  const int n = degree / 2 + 2;
  const LineRule line = gauss_legendre(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = line.nodes[i], v = line.nodes[j];
      const double x = u, y = v * (1.0 - u);
      rule.points.push_back({1.0 - x - y, x, y});
      // reference triangle area is 1/2; normalise weights to sum 1
      rule.weights.push_back(2.0 * line.weights[i] * line.weights[j] * (1.0 - u));
    }
  }
  return rule;
}

}  // namespace domlab
