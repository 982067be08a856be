#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace domlab {

/// Scalar polynomial nonlinearity, coefficients in ascending powers.
/// Covers every built-in: zero, constants, 2u - u^3, u/2 - u^3/10, -u^3.
struct Nonlinearity {
  std::vector<double> coefficients;

  double value(double s) const noexcept;
  double derivative(double s) const noexcept;
  bool is_zero() const noexcept;
};

struct SemilinearProblem {
  std::string name = "custom";
  double a = 1.0;
  Nonlinearity f;
  Nonlinearity g;
  /// Dissipativity constants: f(s)/s <= c0 and g(s)/s <= d0 whenever |s| >= xi.
  double c0 = 0.0;
  double d0 = 0.0;
  double xi = 0.0;
};

/// a = 1, f(u) = 2u - u^3, g = 0, c0 = d0 = 0, xi = sqrt(2). Equilibria {-1, 0, 1}.
SemilinearProblem scenario_a();
/// a = 1, f = 0, g(u) = u/2 - u^3/10, c0 = 0, d0 = 1/10, xi = 2.
SemilinearProblem scenario_b();
/// a = 1, f(u) = -u^3, g = 0: the single globally stable equilibrium 0.
SemilinearProblem scenario_stable();
SemilinearProblem scenario_by_name(const std::string& name);

struct DissipativityCheck {
  bool ok = true;
  double worst_f_excess = 0.0;  // max of f(s)/s - c0 over samples
  double worst_g_excess = 0.0;
  int samples = 0;
};

/// Spot check of the dissipativity inequalities on `samples` points with
/// |s| in [xi, 10 xi] (both signs), tolerance 1e-12.
DissipativityCheck check_dissipativity(const SemilinearProblem& problem, int samples, std::uint64_t seed);

}  // namespace domlab
