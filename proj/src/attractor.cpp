#include "domlab/attractor.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <sstream>

#include "domlab/errors.hpp"
#include "domlab/spectral.hpp"

namespace domlab {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Equilibrium: return "equilibrium";
    case Provenance::ManifoldSample: return "manifold-sample";
    case Provenance::Flowed: return "flowed";
  }
  return "unknown";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "unknown";
}

int AttractorCloud::count(Provenance tag) const {
  return static_cast<int>(std::count_if(points.begin(), points.end(), [&](const CloudPoint& p) { return p.tag == tag; }));
}

std::vector<Vector> AttractorCloud::states() const {
  std::vector<Vector> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.state);
  return out;
}

namespace {

struct TrajectoryTask {
  int source;
  int direction;
  int sign;
  Vector start_direction;
};

struct TrajectoryResult {
  Connection connection;
  std::vector<CloudPoint> manifold;
  Vector endpoint;
};

TrajectoryResult trace_connection(const ImexStepper& stepper, const FieldNorms& norms, const Vector& base,
                                  const TrajectoryTask& task, const AttractorOptions& options) {
  const double spacing = options.delta / options.grid;
  const double s0 = options.start_fraction * spacing;
  TrajectoryResult out;
  out.connection.from = task.source;
  out.connection.direction = task.direction;
  out.connection.sign = task.sign;
  out.connection.states.push_back(base);
  out.connection.times.push_back(0.0);

  Vector u = base + task.sign * s0 * task.start_direction;
  out.connection.states.push_back(u);
  out.connection.times.push_back(0.0);

  const double dt = stepper.dt();
  const long max_steps = std::lround(options.t_max / dt);
  double previous_distance = s0;
  int next_sample = 1;
  for (long k = 1;; ++k) {
    if (k > max_steps) {
      std::ostringstream msg;
      msg << "connecting trajectory from equilibrium " << task.source << " did not settle by t = " << options.t_max;
      throw ConvergenceFailure(msg.str());
    }
    const double t = k * dt;
    Vector next;
    try {
      next = stepper.step(u);
    } catch (const BlowUp& e) {
      throw BlowUp(e.what(), t);
    }
    const double distance = norms.distance(next, base, NormKind::L2);
    // Manifold samples at fixed distances from the equilibrium, interpolated within the step.
    while (next_sample <= options.grid && distance >= next_sample * spacing) {
      const double target = next_sample * spacing;
      const double w = distance > previous_distance ? (target - previous_distance) / (distance - previous_distance) : 1.0;
      CloudPoint sample;
      sample.state = (1.0 - w) * u + w * next;
      sample.tag = Provenance::ManifoldSample;
      sample.source = task.source;
      sample.time = t - dt * (1.0 - w);
      out.manifold.push_back(std::move(sample));
      ++next_sample;
    }
    const double rate = (next - u).cwiseAbs().maxCoeff() / dt;
    const bool settled = rate < options.settle_rate && distance > 10.0 * s0;
    const bool far_enough =
        norms.distance(next, out.connection.states.back(), NormKind::L2) >= options.record_spacing;
    u = std::move(next);
    previous_distance = distance;
    if (far_enough || settled) {
      out.connection.states.push_back(u);
      out.connection.times.push_back(t);
    }
    if (settled) break;
  }
  out.endpoint = u;
  return out;
}

std::vector<CloudPoint> resample(const Connection& connection, const FieldNorms& norms, int count) {
  const auto& states = connection.states;
  std::vector<double> arc(states.size(), 0.0);
  for (std::size_t i = 1; i < states.size(); ++i) {
    arc[i] = arc[i - 1] + norms.distance(states[i], states[i - 1], NormKind::L2);
  }
  std::vector<CloudPoint> points;
  std::size_t seg = 1;
  for (int k = 0; k < count; ++k) {
    const double target = count == 1 ? 0.0 : arc.back() * k / (count - 1);
    while (seg + 1 < states.size() && arc[seg] < target) ++seg;
    const double length = arc[seg] - arc[seg - 1];
    const double w = length > 0.0 ? std::clamp((target - arc[seg - 1]) / length, 0.0, 1.0) : 1.0;
    CloudPoint p;
    p.state = (1.0 - w) * states[seg - 1] + w * states[seg];
    p.tag = Provenance::Flowed;
    p.source = connection.from;
    p.time = (1.0 - w) * connection.times[seg - 1] + w * connection.times[seg];
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace

AttractorCloud approximate_attractor(const DiscreteOperator& op, const SemilinearProblem& problem,
                                     const AttractorOptions& options) {
  if (options.grid < 1 || !(options.delta > 0.0) || options.polyline_points < 2) {
    throw std::invalid_argument("approximate_attractor: grid >= 1, delta > 0 and polyline_points >= 2 required");
  }
  AttractorCloud cloud;
  cloud.eps = op.eps;
  cloud.scenario = problem.name;
  cloud.nodes = op.size();

  const EigenPair first = first_eigenpairs(op, problem.c0, problem.d0, 1).front();
  if (!(first.value > 0.0)) {
    std::ostringstream msg;
    msg << "dissipativity not verified: mu1 = " << first.value << " at eps = " << op.eps;
    throw GateFailure(msg.str());
  }
  cloud.mu1 = first.value;

  const FieldNorms norms(*op.mesh);
  const int k = std::min(options.spectrum_k, op.size());
  cloud.equilibria = find_all_equilibria(op, problem, options.seeds, options.newton).equilibria;
  for (const auto& eq : cloud.equilibria) {
    cloud.spectra.push_back(linearization_spectrum(op, problem, eq, k, options.gap_threshold, options.newton.mode));
  }

  const ImexStepper stepper(op, problem, options.dt, options.mode);
  std::vector<std::vector<CloudPoint>> manifold_points;
  // Worklist: limits that match no known equilibrium are polished by Newton and appended.
  for (std::size_t next = 0; next < cloud.equilibria.size(); ++next) {
    const LinearizationSpectrum& spectrum = cloud.spectra[next];
    std::vector<TrajectoryTask> tasks;
    int direction = 0;
    for (const auto& pair : spectrum.eigenpairs) {
      if (!(pair.value < 0.0)) continue;
      const Vector v = pair.vector / norms.norm(pair.vector, NormKind::L2);
      for (int sign : {1, -1}) tasks.push_back({static_cast<int>(next), direction, sign, v});
      ++direction;
    }
    if (tasks.empty()) continue;

    std::vector<TrajectoryResult> results(tasks.size());
    const Vector base = cloud.equilibria[next].state;
    parallel_for(static_cast<int>(tasks.size()), options.threads, [&](int i) {
      results[i] = trace_connection(stepper, norms, base, tasks[i], options);
    });

    for (auto& result : results) {
      int limit = -1;
      double best = options.match_tolerance;
      for (std::size_t e = 0; e < cloud.equilibria.size(); ++e) {
        const double d = norms.distance(cloud.equilibria[e].state, result.endpoint, NormKind::H1);
        if (d <= best) {
          best = d;
          limit = static_cast<int>(e);
        }
      }
      if (limit < 0) {
        Equilibrium found = newton_equilibrium(op, problem, result.endpoint, options.newton);
        cloud.spectra.push_back(
            linearization_spectrum(op, problem, found, k, options.gap_threshold, options.newton.mode));
        cloud.equilibria.push_back(std::move(found));
        limit = static_cast<int>(cloud.equilibria.size()) - 1;
      }
      result.connection.to = limit;
      manifold_points.push_back(std::move(result.manifold));
      cloud.connections.push_back(std::move(result.connection));
    }
  }

  for (std::size_t e = 0; e < cloud.equilibria.size(); ++e) {
    cloud.hyperbolic = cloud.hyperbolic && cloud.spectra[e].hyperbolic;
    CloudPoint p;
    p.state = cloud.equilibria[e].state;
    p.tag = Provenance::Equilibrium;
    p.source = static_cast<int>(e);
    cloud.points.push_back(std::move(p));
  }
  for (std::size_t c = 0; c < cloud.connections.size(); ++c) {
    for (auto& p : manifold_points[c]) cloud.points.push_back(std::move(p));
    for (auto& p : resample(cloud.connections[c], norms, options.polyline_points)) cloud.points.push_back(std::move(p));
  }
  return cloud;
}

double semidistance(const std::vector<Vector>& a, const std::vector<Vector>& b, const FieldNorms& norms, NormKind kind,
                    int threads) {
  for (const auto* set : {&a, &b}) {
    for (const auto& v : *set) {
      if (v.size() != norms.size()) throw std::invalid_argument("semidistance: fields live on different meshes");
    }
  }
  if (a.empty()) return 0.0;
  if (b.empty()) return std::numeric_limits<double>::infinity();
  std::vector<double> nearest(a.size(), std::numeric_limits<double>::infinity());
  parallel_for(static_cast<int>(a.size()), threads, [&](int i) {
    for (const auto& y : b) nearest[i] = std::min(nearest[i], norms.distance(a[i], y, kind));
  });
  return *std::max_element(nearest.begin(), nearest.end());
}

SemidistanceResult semidistances(const AttractorCloud& cloud, const AttractorCloud& reference, const FieldNorms& norms,
                                 NormKind kind, int threads) {
  const auto a = cloud.states(), b = reference.states();
  SemidistanceResult result;
  result.norm = kind;
  result.forward = semidistance(a, b, norms, kind, threads);
  result.backward = semidistance(b, a, norms, kind, threads);
  return result;
}

double polyline_distance(const Vector& u, const std::vector<Vector>& vertices, const FieldNorms& norms,
                         NormKind kind) {
  if (vertices.empty()) return std::numeric_limits<double>::infinity();
  double best = norms.distance(u, vertices.front(), kind);
  for (std::size_t i = 1; i < vertices.size(); ++i) {
    const Vector d = vertices[i] - vertices[i - 1];
    const Vector w = u - vertices[i - 1];
    double t = 0.0;
    if (kind == NormKind::Sup) {
      // |w - t d|_sup is convex in t: golden-section search.
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 80; ++it) {
        const double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
        if ((w - x1 * d).cwiseAbs().maxCoeff() <= (w - x2 * d).cwiseAbs().maxCoeff()) {
          hi = x2;
        } else {
          lo = x1;
        }
      }
      t = 0.5 * (lo + hi);
    } else {
      const SparseMatrix& gram = kind == NormKind::L2 ? norms.mass() : norms.h1_gram();
      const Vector gd = gram * d;
      const double dd = d.dot(gd);
      t = dd > 0.0 ? std::clamp(w.dot(gd) / dd, 0.0, 1.0) : 0.0;
    }
    best = std::min(best, norms.norm(w - t * d, kind));
  }
  return best;
}

double invariance_defect(const DiscreteOperator& op, const SemilinearProblem& problem, const AttractorCloud& cloud,
                         double T, const AttractorOptions& options, NormKind kind) {
  const ImexStepper stepper(op, problem, options.dt, options.mode);
  const FieldNorms norms(*op.mesh);
  const long steps = std::lround(T / options.dt);
  std::vector<double> defect(cloud.points.size(), 0.0);
  parallel_for(static_cast<int>(cloud.points.size()), options.threads, [&](int i) {
    Vector u = cloud.points[i].state;
    for (long k = 0; k < steps; ++k) u = stepper.step(u);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : cloud.points) best = std::min(best, norms.distance(u, p.state, kind));
    for (const auto& c : cloud.connections) best = std::min(best, polyline_distance(u, c.states, norms, kind));
    defect[i] = best;
  });
  return defect.empty() ? 0.0 : *std::max_element(defect.begin(), defect.end());
}

bool decreasing_with_floor(const std::vector<double>& values, double floor) {
  for (std::size_t k = 0; k + 1 < values.size(); ++k) {
    const bool both_floor = values[k] <= floor && values[k + 1] <= floor;
    if (!(values[k + 1] < values[k] || both_floor)) return false;
  }
  return true;
}

std::vector<const SweepRow*> SweepReport::column(NormKind kind) const {
  std::vector<const SweepRow*> out;
  for (const auto& row : rows) {
    if (row.norm == kind) out.push_back(&row);
  }
  return out;
}

SweepReport continuity_sweep(const std::vector<const DiscreteOperator*>& ops, const SemilinearProblem& problem,
                             const SweepOptions& options) {
  const auto ref_it = std::find_if(ops.begin(), ops.end(), [](const DiscreteOperator* op) { return op->eps == 0.0; });
  if (ref_it == ops.end()) throw std::invalid_argument("continuity_sweep: an eps = 0 operator is required");
  const std::size_t ref = static_cast<std::size_t>(ref_it - ops.begin());

  // Largest eps first, the reference last.
  std::vector<std::size_t> order(ops.size());
  for (std::size_t i = 0; i < ops.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return ops[l]->eps > ops[r]->eps; });

  SweepReport report;
  std::vector<std::optional<AttractorCloud>> clouds(ops.size());
  std::vector<std::string> failures(ops.size());
  AttractorOptions inner = options.attractor;
  if (options.threads > 1) inner.threads = 1;
  parallel_for(static_cast<int>(ops.size()), options.threads, [&](int i) {
    try {
      clouds[i] = approximate_attractor(*ops[i], problem, inner);
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });

  const FieldNorms norms(*ops[ref]->mesh);
  bool any_failure = false, nonhyperbolic = false;
  for (std::size_t i : order) {
    report.eps.push_back(ops[i]->eps);
    if (clouds[i]) {
      nonhyperbolic = nonhyperbolic || !clouds[i]->hyperbolic;
    }
    for (NormKind kind : options.norms) {
      SweepRow row;
      row.eps = ops[i]->eps;
      row.norm = kind;
      if (!clouds[i] || !clouds[ref]) {
        row.ok = false;
        row.failure = clouds[i] ? "reference pipeline failed: " + failures[ref] : failures[i];
      } else if (ops[i]->size() != norms.size()) {
        row.ok = false;
        row.failure = "mesh mismatch with the eps = 0 operator";
      } else {
        const SemidistanceResult d = semidistances(*clouds[i], *clouds[ref], norms, kind, inner.threads);
        row.forward = d.forward;
        row.backward = d.backward;
        std::vector<Vector> eq_eps, eq_ref;
        for (const auto& e : clouds[i]->equilibria) eq_eps.push_back(e.state);
        for (const auto& e : clouds[ref]->equilibria) eq_ref.push_back(e.state);
        row.equilibria_forward = semidistance(eq_eps, eq_ref, norms, kind);
      }
      any_failure = any_failure || !row.ok;
      report.rows.push_back(std::move(row));
    }
  }
  for (std::size_t i : order) {
    if (clouds[i]) report.clouds.push_back(std::move(*clouds[i]));
  }

  auto trend = [&](NormKind kind, bool forward) {
    std::vector<double> values;
    for (const SweepRow* row : report.column(kind)) {
      if (row->eps > 0.0) values.push_back(forward ? row->forward : row->backward);
    }
    bool ok = decreasing_with_floor(values, options.floor);
    if (values.size() >= 2) {
      const double small = values.back(), large = values.front();
      const bool capped = small <= options.floor || (small < options.cap_ratio * large && small < options.absolute_cap);
      ok = ok && capped;
    }
    return ok;
  };

  if (nonhyperbolic) {
    report.verdict = Verdict::Inconclusive;
    report.notes.push_back("an equilibrium failed the hyperbolicity gate; continuity is not asserted");
  } else if (any_failure) {
    report.verdict = Verdict::Fail;
    report.notes.push_back("at least one per-eps pipeline failed");
  } else {
    report.verdict = trend(options.primary, true) && trend(options.primary, false) ? Verdict::Pass : Verdict::Fail;
  }
  if (!any_failure) {
    for (NormKind kind : options.norms) {
      std::ostringstream note;
      note << to_string(kind) << ": forward " << (trend(kind, true) ? "decreasing" : "NOT decreasing") << ", backward "
           << (trend(kind, false) ? "decreasing" : "NOT decreasing");
      report.notes.push_back(note.str());
    }
  }
  return report;
}

}  // namespace domlab
