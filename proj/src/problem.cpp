#include "domlab/problem.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace domlab {

double Nonlinearity::value(double s) const noexcept {
  double acc = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * s + *it;
  return acc;
}

double Nonlinearity::derivative(double s) const noexcept {
  double acc = 0.0;
  for (std::size_t k = coefficients.size(); k-- > 1;) acc = acc * s + static_cast<double>(k) * coefficients[k];
  return acc;
}

bool Nonlinearity::is_zero() const noexcept {
  return std::all_of(coefficients.begin(), coefficients.end(), [](double c) { return c == 0.0; });
}

SemilinearProblem scenario_a() {
  SemilinearProblem p;
  p.name = "A";
  p.a = 1.0;
  p.f.coefficients = {0.0, 2.0, 0.0, -1.0};
  p.g.coefficients = {};
  p.c0 = 0.0;
  p.d0 = 0.0;
  p.xi = std::sqrt(2.0);
  return p;
}

SemilinearProblem scenario_b() {
  SemilinearProblem p;
  p.name = "B";
  p.a = 1.0;
  p.f.coefficients = {};
  p.g.coefficients = {0.0, 0.5, 0.0, -0.1};
  p.c0 = 0.0;
  p.d0 = 0.1;
  p.xi = 2.0;
  return p;
}

SemilinearProblem scenario_stable() {
  SemilinearProblem p;
  p.name = "stable";
  p.a = 1.0;
  p.f.coefficients = {0.0, 0.0, 0.0, -1.0};
  p.c0 = 0.0;
  p.d0 = 0.0;
  p.xi = 0.0;
  return p;
}

SemilinearProblem scenario_by_name(const std::string& name) {
  if (name == "A") return scenario_a();
  if (name == "B") return scenario_b();
  if (name == "stable") return scenario_stable();
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

DissipativityCheck check_dissipativity(const SemilinearProblem& problem, int samples, std::uint64_t seed) {
  DissipativityCheck check;
  std::mt19937_64 rng(seed);
  const double lo = std::max(problem.xi, 1e-12);
  std::uniform_real_distribution<double> magnitude(lo, 10.0 * lo);
  check.worst_f_excess = -INFINITY;
  check.worst_g_excess = -INFINITY;
  for (int i = 0; i < samples; ++i) {
    const double s = (i % 2 == 0 ? 1.0 : -1.0) * magnitude(rng);
    check.worst_f_excess = std::max(check.worst_f_excess, problem.f.value(s) / s - problem.c0);
    check.worst_g_excess = std::max(check.worst_g_excess, problem.g.value(s) / s - problem.d0);
  }
  check.samples = samples;
  check.ok = check.worst_f_excess <= 1e-12 && check.worst_g_excess <= 1e-12;
  return check;
}

}  // namespace domlab
