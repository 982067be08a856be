#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>

#include "domlab/attractor.hpp"
#include "domlab/dynamics.hpp"
#include "domlab/errors.hpp"
#include "domlab/geometry.hpp"
#include "domlab/mesh.hpp"
#include "domlab/spectral.hpp"
#include "domlab/steady.hpp"

namespace domlab::cli {

namespace {

struct Cell {
  std::string text;
  Cell(double v) {  // NOLINT(google-explicit-constructor)
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    text = buf;
  }
  Cell(int v) : text(std::to_string(v)) {}                // NOLINT
  Cell(long v) : text(std::to_string(v)) {}               // NOLINT
  Cell(std::size_t v) : text(std::to_string(v)) {}        // NOLINT
  Cell(bool v) : text(v ? "1" : "0") {}                   // NOLINT
  Cell(std::string v) : text(std::move(v)) {}             // NOLINT
  Cell(const char* v) : text(v) {}                        // NOLINT
};

class Csv {
 public:
  Csv(RunContext& ctx, const std::string& name, const std::vector<std::string>& header)
      : out_(ctx.out / name) {
    if (!out_) throw std::runtime_error("cannot write " + (ctx.out / name).string());
    ctx.artifacts.push_back(name);
    write(std::vector<Cell>(header.begin(), header.end()));
  }
  void row(std::initializer_list<Cell> cells) { write(std::vector<Cell>(cells)); }

 private:
  void write(const std::vector<Cell>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i].text;
    out_ << '\n';
  }
  std::ofstream out_;
};

void timed(RunContext& ctx, const std::string& stage, const std::function<void()>& body) {
  const auto start = std::chrono::steady_clock::now();
  body();
  ctx.timings[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::shared_ptr<const Mesh> make_mesh(const RunConfig& c, int n) {
  if (c.family.domain() == ReferenceDomain::UnitDisk) return std::make_shared<const Mesh>(build_disk_mesh(c.mesh.disk_level));
  return std::make_shared<const Mesh>(build_square_mesh(n));
}

std::vector<DiscreteOperator> assemble_all(const std::shared_ptr<const Mesh>& mesh, const RunConfig& c,
                                           const std::vector<double>& eps, AssemblyOptions opts) {
  std::vector<DiscreteOperator> ops;
  ops.reserve(eps.size());
  for (double e : eps) ops.push_back(assemble_operator(mesh, c.family, e, c.problem.a, opts));
  return ops;
}

std::vector<const DiscreteOperator*> pointers(const std::vector<DiscreteOperator>& ops) {
  std::vector<const DiscreteOperator*> out;
  for (const auto& op : ops) out.push_back(&op);
  return out;
}

SeedOptions seed_options(const RunConfig& c) {
  SeedOptions seeds;
  seeds.range = std::max(1.0, 1.5 * c.problem.xi);
  seeds.threads = c.threads;
  return seeds;
}

std::vector<double> ascending(std::vector<double> eps) {
  std::reverse(eps.begin(), eps.end());
  return eps;
}

// Collects gate violations so every row is written before the command fails.
struct Gate {
  std::vector<std::string> failures;
  void add(const std::string& what) { failures.push_back(what); }
  void raise(const std::string& stage) const {
    if (failures.empty()) return;
    std::ostringstream msg;
    msg << stage << ":";
    for (const auto& f : failures) msg << " " << f << ";";
    throw GateFailure(msg.str());
  }
};

void cmd_coeffs(RunContext& ctx) {
  const RunConfig& c = ctx.config;
  const bool disk = c.family.domain() == ReferenceDomain::UnitDisk;
  Csv coeffs(ctx, "coeffs.csv",
             {"eps", "x1", "x2", "jh", "c11", "c12", "c22", "drift1", "drift2", "grad_jh1", "grad_jh2"});
  constexpr int lattice = 16;
  for (double eps : c.eps) {
    for (int j = 0; j <= lattice; ++j) {
      for (int i = 0; i <= lattice; ++i) {
        Vec2 x = disk ? Vec2(-1.0 + 2.0 * i / lattice, -1.0 + 2.0 * j / lattice) : Vec2(double(i) / lattice, double(j) / lattice);
        if (disk && x.norm() >= 1.0 - 1e-12) continue;
        const PointCoefficients pc = pullback_coefficients(c.family, eps, x);
        coeffs.row({eps, x.x(), x.y(), pc.jh, pc.c(0, 0), pc.c(0, 1), pc.c(1, 1), pc.drift.x(), pc.drift.y(),
                    pc.grad_jh.x(), pc.grad_jh.y()});
      }
    }
  }

  Csv ratio(ctx, "boundary_ratio.csv", {"eps", "edge", "x1", "x2", "mu"});
  struct Piece {
    EdgeTag tag;
    std::function<BoundaryPoint(double)> at;
  };
  std::vector<Piece> pieces;
  if (disk) {
    pieces.push_back({EdgeTag::Arc, [](double s) {
                        const double phi = 2.0 * M_PI * s;
                        return BoundaryPoint{Vec2(std::cos(phi), std::sin(phi)), Vec2(-std::sin(phi), std::cos(phi))};
                      }});
  } else {
    pieces.push_back({EdgeTag::Bottom, [](double s) { return BoundaryPoint{Vec2(s, 0.0), Vec2(1.0, 0.0)}; }});
    pieces.push_back({EdgeTag::Right, [](double s) { return BoundaryPoint{Vec2(1.0, s), Vec2(0.0, 1.0)}; }});
    pieces.push_back({EdgeTag::Top, [](double s) { return BoundaryPoint{Vec2(1.0 - s, 1.0), Vec2(-1.0, 0.0)}; }});
    pieces.push_back({EdgeTag::Left, [](double s) { return BoundaryPoint{Vec2(0.0, 1.0 - s), Vec2(0.0, -1.0)}; }});
  }
  constexpr int per_piece = 64;
  for (double eps : c.eps) {
    for (const auto& piece : pieces) {
      for (int k = 0; k < per_piece; ++k) {
        const BoundaryPoint p = piece.at((k + 0.5) / per_piece);
        ratio.row({eps, to_string(piece.tag), p.x.x(), p.x.y(), boundary_ratio(c.family, eps, p)});
      }
    }
  }

  if (c.export_mesh || c.export_matrices) {
    const auto mesh = make_mesh(c, c.mesh.n);
    if (c.export_mesh) {
      std::ofstream out(ctx.out / "mesh.txt");
      write_mesh(out, *mesh);
      ctx.artifacts.push_back("mesh.txt");
    }
    if (c.export_matrices) {
      const auto ops = assemble_all(mesh, c, c.eps, c.assembly_options());
      for (std::size_t i = 0; i < ops.size(); ++i) {
        const std::pair<const char*, const SparseMatrix*> parts[] = {
            {"mass", &ops[i].mass}, {"stiffness", &ops[i].stiffness}, {"drift", &ops[i].drift},
            {"boundary_mass", &ops[i].boundary_mass}};
        for (const auto& [name, matrix] : parts) {
          const std::string file = "matrix_eps" + std::to_string(i) + "_" + name + ".txt";
          std::ofstream out(ctx.out / file);
          write_matrix(out, *matrix);
          ctx.artifacts.push_back(file);
        }
      }
    }
  }
}

void cmd_hypotheses(RunContext& ctx) {
  const RunConfig& c = ctx.config;
  Csv csv(ctx, "hypotheses.csv",
          {"eps", "map_distance", "jacobian_distance", "c1_distance", "grad_j_sup", "expected_rate", "rate_ratio",
           "samples"});
  for (double eps : c.positive_eps()) {
    const int grid = std::max(128, static_cast<int>(std::ceil(8.0 / std::pow(eps, c.family.alpha))));
    const HypothesisReport r = check_hypotheses(c.family, eps, grid);
    const double expected =
        c.family.kind == FamilyKind::OscillatorySquare ? std::pow(eps, 1.0 - c.family.alpha) : std::nan("");
    csv.row({eps, r.map_distance, r.jacobian_distance, r.c1_distance, r.grad_j_sup, expected, r.grad_j_sup / expected,
             r.sample_count});
  }
}

void cmd_eigen(RunContext& ctx) {
  const RunConfig& c = ctx.config;
  const auto mesh = make_mesh(c, c.mesh.n);
  Csv csv(ctx, "eigen.csv", {"eps", "index", "mu_real", "mu_imag", "residual"});
  Gate gate;
  for (double eps : c.eps) {
    const auto op = assemble_operator(mesh, c.family, eps, c.problem.a, c.assembly_options());
    const auto pairs = first_eigenpairs(op, c.problem.c0, c.problem.d0, std::min(c.eigen_count, op.size()));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      csv.row({eps, i, pairs[i].value, pairs[i].imag, pairs[i].residual});
    }
    if (!(pairs.front().value > 0.0)) {
      std::ostringstream msg;
      msg << "mu1 = " << pairs.front().value << " <= 0 at eps = " << eps << " (dissipativity not verified)";
      gate.add(msg.str());
    }
  }
  gate.raise("eigen");
}

void cmd_opdist(RunContext& ctx) {
  const RunConfig& c = ctx.config;
  Csv csv(ctx, "opdist.csv", {"eps", "mesh_n", "tau", "k_abs", "norm"});
  std::vector<int> meshes{c.mesh.n};
  if (c.mesh.refine > 0 && c.family.domain() == ReferenceDomain::UnitSquare) meshes.push_back(c.mesh.refine);
  for (int n : meshes) {
    const auto mesh = make_mesh(c, n);
    const auto ref = assemble_operator(mesh, c.family, 0.0, c.problem.a, c.assembly_options());
    for (double eps : c.positive_eps()) {
      const auto op = assemble_operator(mesh, c.family, eps, c.problem.a, c.assembly_options());
      LanczosOptions lanczos;
      lanczos.seed = c.seed;
      const OperatorDistanceReport r = operator_distance(op, ref, lanczos);
      csv.row({eps, n, r.tau, r.k_abs, r.norm_kind});
    }
  }

  Csv semi(ctx, "semigroup.csv", {"eps", "mesh_n", "t", "distance"});
  AssemblyOptions coarse = c.assembly_options();
  coarse.resolution_ratio = 0.0;
  const auto mesh = c.family.domain() == ReferenceDomain::UnitSquare
                        ? std::make_shared<const Mesh>(build_square_mesh(c.mesh.coarse_n))
                        : make_mesh(c, c.mesh.coarse_n);
  const auto ref = assemble_operator(mesh, c.family, 0.0, c.problem.a, coarse);
  for (double eps : c.positive_eps()) {
    const auto op = assemble_operator(mesh, c.family, eps, c.problem.a, coarse);
    for (const auto& s : semigroup_distance(op, ref, c.semigroup_times).samples) {
      semi.row({eps, c.mesh.coarse_n, s.t, s.distance});
    }
  }
}

void cmd_evolve(RunContext& ctx) {
  const RunConfig& c = ctx.config;
  const auto mesh = make_mesh(c, c.mesh.n);
  const auto op = assemble_operator(mesh, c.family, c.evolve.eps, c.problem.a, c.assembly_options());
  Vector u0(op.size());
  std::unique_ptr<ComparisonCone> cone;
  MassMode mode = MassMode::Consistent;
  if (c.evolve.initial == "constant") {
    u0.setConstant(c.evolve.value);
  } else if (c.evolve.initial == "cosine") {
    for (int i = 0; i < op.size(); ++i) {
      const Vec2& x = mesh->nodes[i];
      u0[i] = c.evolve.value + c.evolve.amplitude * std::cos(M_PI * x.x()) * std::cos(M_PI * x.y());
    }
  } else {
    ConeOptions opts;
    opts.theta = c.theta;
    opts.mode = c.cone_mode;
    cone = std::make_unique<ComparisonCone>(build_cone(op, c.problem, opts));
    u0 = cone_samples(op, *cone, 1, c.seed).front();
    mode = c.cone_mode;
  }
  const ImexStepper stepper(op, c.problem, c.dt, mode);
  EvolveOptions opts;
  opts.T = c.T;
  opts.stride = c.evolve.stride;
  opts.cone = cone.get();
  const Trajectory traj = evolve(stepper, u0, opts);

  Csv csv(ctx, "trajectory.csv", {"step", "t", "sup_norm", "l2_rate", "cone_margin"});
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    csv.row({k, traj.times[k], traj.sup_norms[k], traj.rates[k],
             traj.cone_margins.empty() ? std::nan("") : traj.cone_margins[k]});
  }
  Csv final_state(ctx, "final_state.csv", {"node", "x1", "x2", "u"});
  for (int i = 0; i < op.size(); ++i) {
    final_state.row({i, mesh->nodes[i].x(), mesh->nodes[i].y(), traj.final_state[i]});
  }
  if (!traj.snapshots.empty()) {
    Csv snaps(ctx, "snapshots.csv", {"t", "node", "u"});
    for (std::size_t s = 0; s < traj.snapshots.size(); ++s) {
      for (int i = 0; i < op.size(); ++i) snaps.row({traj.snapshot_times[s], i, traj.snapshots[s][i]});
    }
  }
}

void cmd_cone(RunContext& ctx) {
  const RunConfig& c = ctx.config;
  const auto mesh = make_mesh(c, c.mesh.n);
  Csv csv(ctx, "cone.csv",
          {"eps", "mu1", "m", "theta", "theta_bar", "theta_bar_admissible", "max_margin", "margin_over_theta",
           "max_sup_norm", "contraction_time", "samples", "T", "dt", "seed"});
  Gate gate;
  for (double eps : c.eps) {
    const auto op = assemble_operator(mesh, c.family, eps, c.problem.a, c.assembly_options());
    ConeOptions cone_opts;
    cone_opts.theta = c.theta;
    cone_opts.mode = c.cone_mode;
    const ComparisonCone cone = build_cone(op, c.problem, cone_opts);
    InvarianceOptions inv;
    inv.samples = c.cone_samples;
    inv.T = c.T;
    inv.dt = c.dt;
    inv.seed = c.seed;
    inv.threads = c.threads;
    const InvarianceReport r = check_invariance(op, c.problem, cone, inv);
    csv.row({eps, cone.mu1, cone.m, r.theta, r.theta_bar, r.theta_bar_admissible, r.max_margin,
             r.max_margin / r.theta, r.max_sup_norm, r.contraction_time, r.samples, c.T, c.dt,
             c.seed});
    if (r.max_margin > 1e-6 * r.theta) {
      std::ostringstream msg;
      msg << "cone margin " << r.max_margin << " > 1e-6 theta at eps = " << eps;
      gate.add(msg.str());
    }
  }
  gate.raise("cone");
}

void cmd_equilibria(RunContext& ctx) {
  const RunConfig& c = ctx.config;
  const auto mesh = make_mesh(c, c.mesh.n);
  const auto eps = ascending(c.eps);
  const auto ops = assemble_all(mesh, c, eps, c.assembly_options());
  const auto roots = find_all_equilibria(ops.front(), c.problem, seed_options(c)).equilibria;
  ContinuationOptions cont;
  cont.spectrum_k = std::min(c.eigen_count, ops.front().size());
  const auto branches = continue_branches(pointers(ops), c.problem, roots, cont);

  const FieldNorms norms(*mesh);
  Csv table(ctx, "equilibria.csv",
            {"eps", "branch", "sup_norm", "mean", "h1_distance_to_root", "gap", "unstable_count", "hyperbolic",
             "residual", "newton_iters"});
  Csv spectra(ctx, "spectra.csv", {"eps", "branch", "index", "lambda_real", "lambda_imag"});
  Gate gate;
  for (const auto& branch : branches) {
    for (const auto& p : branch.points) {
      table.row({p.eps, branch.id, p.eq.state.cwiseAbs().maxCoeff(), field_mean(ops.front(), p.eq.state),
                 p.distance_to_root, p.spectrum.gap, p.spectrum.unstable_count, p.spectrum.hyperbolic,
                 p.eq.residual_norm, p.eq.newton_iters});
      for (std::size_t i = 0; i < p.spectrum.eigenpairs.size(); ++i) {
        spectra.row({p.eps, branch.id, i, p.spectrum.eigenpairs[i].value, p.spectrum.eigenpairs[i].imag});
      }
    }
    if (branch.failed) gate.add("branch " + std::to_string(branch.id) + ": " + branch.failure);
  }

  Csv patch_csv(ctx, "patch.csv", {"eps", "equilibrium", "direction", "sign", "s", "limit", "settled", "settle_time"});
  PatchOptions patch_opts;
  patch_opts.dt = c.dt;
  patch_opts.threads = c.threads;
  for (std::size_t e = 0; e < roots.size(); ++e) {
    const auto& spectrum = branches[e].points.front().spectrum;
    if (spectrum.unstable_count < 1) continue;
    const auto patch = unstable_patch(ops.front(), c.problem, roots[e], spectrum, patch_opts, roots);
    for (const auto& s : patch.samples) {
      patch_csv.row({0.0, e, s.direction, s.sign, s.s, s.limit, s.settled, s.settle_time});
    }
    if (patch.unsettled > 0) gate.add(std::to_string(patch.unsettled) + " unstable-patch samples did not settle");
  }
  gate.raise("equilibria");
}

void cmd_attractor(RunContext& ctx) {
  const RunConfig& c = ctx.config;
  const auto mesh = make_mesh(c, c.mesh.n);
  const auto ops = assemble_all(mesh, c, c.eps, c.assembly_options());
  SweepOptions opts;
  opts.attractor.seeds = seed_options(c);
  opts.attractor.dt = c.dt;
  opts.attractor.delta = c.attractor.delta;
  opts.attractor.grid = c.attractor.grid;
  opts.attractor.polyline_points = c.attractor.polyline_points;
  opts.attractor.t_max = c.attractor.t_max;
  opts.attractor.threads = c.threads;
  opts.cap_ratio = c.attractor.cap_ratio;
  opts.threads = c.threads;
  const SweepReport report = continuity_sweep(pointers(ops), c.problem, opts);

  Csv rows(ctx, "attractor.csv", {"eps", "norm", "forward", "backward", "equilibria_forward", "ok", "failure"});
  for (const auto& r : report.rows) {
    rows.row({r.eps, to_string(r.norm), r.forward, r.backward, r.equilibria_forward, r.ok, r.failure});
  }
  Csv points(ctx, "clouds.csv", {"eps", "point", "provenance", "source", "time", "mean", "sup_norm", "l2_norm"});
  const FieldNorms norms(*mesh);
  Csv invariance(ctx, "attractor_invariance.csv", {"eps", "points", "equilibria", "connections", "defect_l2_T1"});
  for (const auto& cloud : report.clouds) {
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      const auto& p = cloud.points[i];
      points.row({cloud.eps, i, to_string(p.tag), p.source, p.time, p.state.mean(), p.state.cwiseAbs().maxCoeff(),
                  norms.norm(p.state, NormKind::L2)});
    }
    const auto op_it = std::find_if(ops.begin(), ops.end(), [&](const DiscreteOperator& op) { return op.eps == cloud.eps; });
    invariance.row({cloud.eps, cloud.points.size(), cloud.equilibria.size(), cloud.connections.size(),
                    invariance_defect(*op_it, c.problem, cloud, 1.0, opts.attractor)});
  }

  std::ofstream summary(ctx.out / "summary.txt");
  ctx.artifacts.push_back("summary.txt");
  summary << "attractor continuity sweep (" << c.problem.name << ", mesh " << c.mesh.n << ")\n";
  summary << "verdict (" << to_string(opts.primary) << "): " << to_string(report.verdict) << "\n";
  for (const auto& note : report.notes) summary << "  " << note << "\n";
}

void run_single(const std::string& command, RunContext& ctx) {
  if (command == "coeffs") return timed(ctx, command, [&] { cmd_coeffs(ctx); });
  if (command == "hypotheses") return timed(ctx, command, [&] { cmd_hypotheses(ctx); });
  if (command == "eigen") return timed(ctx, command, [&] { cmd_eigen(ctx); });
  if (command == "opdist") return timed(ctx, command, [&] { cmd_opdist(ctx); });
  if (command == "evolve") return timed(ctx, command, [&] { cmd_evolve(ctx); });
  if (command == "cone") return timed(ctx, command, [&] { cmd_cone(ctx); });
  if (command == "equilibria") return timed(ctx, command, [&] { cmd_equilibria(ctx); });
  if (command == "attractor") return timed(ctx, command, [&] { cmd_attractor(ctx); });
  throw std::invalid_argument("unknown subcommand '" + command + "'");
}

}  // namespace

void run_command(const std::string& command, RunContext& ctx) {
  if (command != "all") return run_single(command, ctx);
  // Every stage runs; gate failures are collected and reported together.
  Gate gate;
  for (const auto& stage : kCommands) {
    if (stage == "all") continue;
    try {
      run_single(stage, ctx);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      gate.add(e.what());
    }
  }
  gate.raise("all");
}

}  // namespace domlab::cli
