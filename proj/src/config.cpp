#include "domlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "domlab/errors.hpp"

namespace domlab {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError("config key '" + key + "': " + what);
}

void reject_unknown(const json& object, const std::string& where, const std::set<std::string>& allowed) {
  if (!object.is_object()) fail(where, "expected an object");
  for (const auto& item : object.items()) {
    if (!allowed.count(item.key())) fail(where.empty() ? item.key() : where + "." + item.key(), "unknown key");
  }
}

template <typename T>
void read(const json& object, const std::string& key, const std::string& where, T& target) {
  if (!object.contains(key)) return;
  try {
    target = object.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(where.empty() ? key : where + "." + key, e.what());
  }
}

std::string mass_name(MassMode m) { return m == MassMode::Lumped ? "lumped" : "consistent"; }

MassMode mass_from(const std::string& name) {
  if (name == "lumped") return MassMode::Lumped;
  if (name == "consistent") return MassMode::Consistent;
  fail("cone.mass", "expected 'lumped' or 'consistent', got '" + name + "'");
}

std::string drift_name(DriftConvention d) { return d == DriftConvention::Published ? "published" : "pullback-consistent"; }

DriftConvention drift_from(const std::string& name) {
  if (name == "published") return DriftConvention::Published;
  if (name == "pullback-consistent") return DriftConvention::PullbackConsistent;
  fail("drift", "expected 'published' or 'pullback-consistent', got '" + name + "'");
}

}  // namespace

AssemblyOptions RunConfig::assembly_options() const {
  AssemblyOptions opts;
  opts.triangle_degree = triangle_degree;
  opts.edge_points = edge_points;
  opts.resolution_ratio = mesh.resolution_ratio;
  opts.drift = drift;
  return opts;
}

std::vector<double> RunConfig::positive_eps() const {
  std::vector<double> out;
  for (double e : eps) {
    if (e > 0.0) out.push_back(e);
  }
  return out;
}

RunConfig parse_config(const json& input) {
  const json& doc = input.is_object() && input.contains("config") && input.contains("tool") ? input.at("config") : input;
  reject_unknown(doc, "",
                 {"scenario", "problem", "family", "eps", "mesh", "time", "theta", "quadrature", "drift", "threads",
                  "seed", "export", "eigen", "cone", "semigroup", "evolve", "attractor"});
  RunConfig c;

  read(doc, "scenario", "", c.scenario);
  if (c.scenario == "custom") {
    if (!doc.contains("problem")) fail("problem", "required when scenario is 'custom'");
    c.problem = SemilinearProblem{};
    c.problem.name = "custom";
  } else {
    try {
      c.problem = scenario_by_name(c.scenario);
    } catch (const std::invalid_argument& e) {
      fail("scenario", e.what());
    }
  }
  if (doc.contains("problem")) {
    const json& p = doc.at("problem");
    reject_unknown(p, "problem", {"a", "f", "g", "c0", "d0", "xi"});
    read(p, "a", "problem", c.problem.a);
    read(p, "f", "problem", c.problem.f.coefficients);
    read(p, "g", "problem", c.problem.g.coefficients);
    read(p, "c0", "problem", c.problem.c0);
    read(p, "d0", "problem", c.problem.d0);
    read(p, "xi", "problem", c.problem.xi);
  }

  if (doc.contains("family")) {
    const json& f = doc.at("family");
    reject_unknown(f, "family",
                   {"kind", "alpha", "eps_max", "amplitude", "angular_mode", "collar", "jacobian_mode", "fd_step"});
    std::string kind = to_string(c.family.kind), mode = to_string(c.family.jacobian_mode);
    read(f, "kind", "family", kind);
    read(f, "jacobian_mode", "family", mode);
    try {
      c.family.kind = family_kind_from_string(kind);
      c.family.jacobian_mode = jacobian_mode_from_string(mode);
    } catch (const std::invalid_argument& e) {
      fail("family", e.what());
    }
    read(f, "alpha", "family", c.family.alpha);
    read(f, "eps_max", "family", c.family.eps_max);
    read(f, "amplitude", "family", c.family.amplitude);
    read(f, "angular_mode", "family", c.family.angular_mode);
    read(f, "collar", "family", c.family.collar);
    read(f, "fd_step", "family", c.family.fd_step);
  }

  read(doc, "eps", "", c.eps);
  if (doc.contains("mesh")) {
    const json& m = doc.at("mesh");
    reject_unknown(m, "mesh", {"n", "refine", "coarse_n", "disk_level", "resolution_ratio"});
    read(m, "n", "mesh", c.mesh.n);
    read(m, "refine", "mesh", c.mesh.refine);
    read(m, "coarse_n", "mesh", c.mesh.coarse_n);
    read(m, "disk_level", "mesh", c.mesh.disk_level);
    read(m, "resolution_ratio", "mesh", c.mesh.resolution_ratio);
  }
  if (doc.contains("time")) {
    const json& t = doc.at("time");
    reject_unknown(t, "time", {"dt", "T"});
    read(t, "dt", "time", c.dt);
    read(t, "T", "time", c.T);
  }
  read(doc, "theta", "", c.theta);
  if (doc.contains("quadrature")) {
    const json& q = doc.at("quadrature");
    reject_unknown(q, "quadrature", {"triangle_degree", "edge_points"});
    read(q, "triangle_degree", "quadrature", c.triangle_degree);
    read(q, "edge_points", "quadrature", c.edge_points);
  }
  if (doc.contains("drift")) {
    std::string name;
    read(doc, "drift", "", name);
    c.drift = drift_from(name);
  }
  read(doc, "threads", "", c.threads);
  read(doc, "seed", "", c.seed);
  if (doc.contains("export")) {
    const json& e = doc.at("export");
    reject_unknown(e, "export", {"mesh", "matrices"});
    read(e, "mesh", "export", c.export_mesh);
    read(e, "matrices", "export", c.export_matrices);
  }
  if (doc.contains("eigen")) {
    reject_unknown(doc.at("eigen"), "eigen", {"count"});
    read(doc.at("eigen"), "count", "eigen", c.eigen_count);
  }
  if (doc.contains("cone")) {
    const json& k = doc.at("cone");
    reject_unknown(k, "cone", {"samples", "mass"});
    read(k, "samples", "cone", c.cone_samples);
    if (k.contains("mass")) {
      std::string name;
      read(k, "mass", "cone", name);
      c.cone_mode = mass_from(name);
    }
  }
  if (doc.contains("semigroup")) {
    reject_unknown(doc.at("semigroup"), "semigroup", {"times"});
    read(doc.at("semigroup"), "times", "semigroup", c.semigroup_times);
  }
  if (doc.contains("evolve")) {
    const json& e = doc.at("evolve");
    reject_unknown(e, "evolve", {"eps", "initial", "value", "amplitude", "stride"});
    read(e, "eps", "evolve", c.evolve.eps);
    read(e, "initial", "evolve", c.evolve.initial);
    read(e, "value", "evolve", c.evolve.value);
    read(e, "amplitude", "evolve", c.evolve.amplitude);
    read(e, "stride", "evolve", c.evolve.stride);
  }
  if (doc.contains("attractor")) {
    const json& a = doc.at("attractor");
    reject_unknown(a, "attractor", {"delta", "grid", "polyline_points", "t_max", "cap_ratio"});
    read(a, "delta", "attractor", c.attractor.delta);
    read(a, "grid", "attractor", c.attractor.grid);
    read(a, "polyline_points", "attractor", c.attractor.polyline_points);
    read(a, "t_max", "attractor", c.attractor.t_max);
    read(a, "cap_ratio", "attractor", c.attractor.cap_ratio);
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config '" + path + "': " + e.what());
  }
  return parse_config(doc);
}

json to_json(const RunConfig& c) {
  json doc;
  doc["scenario"] = c.scenario;
  doc["problem"] = {{"a", c.problem.a},   {"f", c.problem.f.coefficients}, {"g", c.problem.g.coefficients},
                    {"c0", c.problem.c0}, {"d0", c.problem.d0},            {"xi", c.problem.xi}};
  doc["family"] = {{"kind", to_string(c.family.kind)},
                   {"alpha", c.family.alpha},
                   {"eps_max", c.family.eps_max},
                   {"amplitude", c.family.amplitude},
                   {"angular_mode", c.family.angular_mode},
                   {"collar", c.family.collar},
                   {"jacobian_mode", to_string(c.family.jacobian_mode)},
                   {"fd_step", c.family.fd_step}};
  doc["eps"] = c.eps;
  doc["mesh"] = {{"n", c.mesh.n},
                 {"refine", c.mesh.refine},
                 {"coarse_n", c.mesh.coarse_n},
                 {"disk_level", c.mesh.disk_level},
                 {"resolution_ratio", c.mesh.resolution_ratio}};
  doc["time"] = {{"dt", c.dt}, {"T", c.T}};
  doc["theta"] = c.theta;
  doc["quadrature"] = {{"triangle_degree", c.triangle_degree}, {"edge_points", c.edge_points}};
  doc["drift"] = drift_name(c.drift);
  doc["threads"] = c.threads;
  doc["seed"] = c.seed;
  doc["export"] = {{"mesh", c.export_mesh}, {"matrices", c.export_matrices}};
  doc["eigen"] = {{"count", c.eigen_count}};
  doc["cone"] = {{"samples", c.cone_samples}, {"mass", mass_name(c.cone_mode)}};
  doc["semigroup"] = {{"times", c.semigroup_times}};
  doc["evolve"] = {{"eps", c.evolve.eps},
                   {"initial", c.evolve.initial},
                   {"value", c.evolve.value},
                   {"amplitude", c.evolve.amplitude},
                   {"stride", c.evolve.stride}};
  doc["attractor"] = {{"delta", c.attractor.delta},
                      {"grid", c.attractor.grid},
                      {"polyline_points", c.attractor.polyline_points},
                      {"t_max", c.attractor.t_max},
                      {"cap_ratio", c.attractor.cap_ratio}};
  return doc;
}

void validate(const RunConfig& c) {
  if (c.eps.empty()) fail("eps", "must not be empty");
  for (std::size_t i = 0; i < c.eps.size(); ++i) {
    if (!(c.eps[i] >= 0.0) || !std::isfinite(c.eps[i])) fail("eps", "values must be finite and nonnegative");
    if (i > 0 && !(c.eps[i] < c.eps[i - 1])) fail("eps", "must be strictly descending");
    if (c.eps[i] > c.family.eps_max) fail("eps", "value above family.eps_max");
  }
  if (c.eps.back() != 0.0) fail("eps", "must contain 0 (the unperturbed reference)");
  if (!(c.family.alpha > 0.0 && c.family.alpha < 1.0)) fail("family.alpha", "must lie in (0, 1)");
  if (c.family.kind == FamilyKind::NormalField && c.family.jacobian_mode == JacobianMode::ClosedForm) {
    fail("family.jacobian_mode", "normal-field family supports only 'finite-difference'");
  }
  if (!(c.family.fd_step > 0.0)) fail("family.fd_step", "must be positive");
  if (c.mesh.n < 4) fail("mesh.n", "must be at least 4");
  if (c.mesh.refine != 0 && c.mesh.refine <= c.mesh.n) fail("mesh.refine", "must be 0 or larger than mesh.n");
  if (c.mesh.coarse_n < 2) fail("mesh.coarse_n", "must be at least 2");
  if (c.mesh.disk_level < 1) fail("mesh.disk_level", "must be at least 1");
  if (!(c.dt > 0.0)) fail("time.dt", "must be positive");
  if (!(c.T >= 0.0)) fail("time.T", "must be nonnegative");
  if (!(c.theta >= 0.0)) fail("theta", "must be nonnegative (0 selects 2 xi / m)");
  if (c.triangle_degree < 1 || c.edge_points < 1) fail("quadrature", "orders must be positive");
  if (c.threads < 1) fail("threads", "must be at least 1");
  if (c.eigen_count < 1) fail("eigen.count", "must be at least 1");
  if (c.cone_samples < 1) fail("cone.samples", "must be at least 1");
  for (double t : c.semigroup_times) {
    if (!(t >= 0.0)) fail("semigroup.times", "must be nonnegative");
  }
  if (c.evolve.initial != "constant" && c.evolve.initial != "cosine" && c.evolve.initial != "cone-sample") {
    fail("evolve.initial", "expected 'constant', 'cosine' or 'cone-sample'");
  }
  if (std::find(c.eps.begin(), c.eps.end(), c.evolve.eps) == c.eps.end()) fail("evolve.eps", "must be one of eps");
  if (c.evolve.stride < 0) fail("evolve.stride", "must be nonnegative");
  if (c.attractor.grid < 1 || !(c.attractor.delta > 0.0) || c.attractor.polyline_points < 2) {
    fail("attractor", "grid >= 1, delta > 0 and polyline_points >= 2 required");
  }
  if (!(c.attractor.cap_ratio > 0.0)) fail("attractor.cap_ratio", "must be positive");
  if (!(c.problem.a > 0.0)) fail("problem.a", "must be positive");

  // Mesh-resolution rule of the oscillatory family, checked against the structured mesh's longest edge.
  if (c.family.kind == FamilyKind::OscillatorySquare && c.mesh.resolution_ratio > 0.0) {
    const auto positive = c.positive_eps();
    if (!positive.empty()) {
      const double wavelength = std::pow(positive.back(), c.family.alpha);
      const double h = std::sqrt(2.0) / c.mesh.n;
      if (h > wavelength / c.mesh.resolution_ratio) {
        std::ostringstream msg;
        msg << "mesh.n = " << c.mesh.n << " under-resolves eps = " << positive.back() << " (longest edge " << h
            << " > eps^alpha / " << c.mesh.resolution_ratio << " = " << wavelength / c.mesh.resolution_ratio << ")";
        fail("mesh.n", msg.str());
      }
    }
  }
}

}  // namespace domlab
