#include "optgrowth/evolution.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "optgrowth/postprocess.hpp"

namespace optgrowth {
namespace {

constexpr const char* kCheckpointMagic = "optgrowth-checkpoint";
constexpr int kCheckpointVersion = 1;

StepRecord make_record(int iter, const AssembledSystem& sys, const GrowthField& growth, Vector displacement) {
  StepRecord rec;
  rec.iter = iter;
  rec.growth = growth;
  rec.displacement = std::move(displacement);
  rec.mass = sys.trace_weights.dot(growth.values());
  const ShapeMetrics shape = shape_metrics(rec.displacement, *sys.mesh);
  rec.perimeter = shape.perimeter;
  rec.area = shape.area;
  rec.roundness = shape.roundness;
  return rec;
}

}  // namespace

void Scenario::validate() const {
  if (mesh_path.empty()) {
    if (!(length > 0.0)) throw ValidationError("geometry.length must be positive");
    if (!(height > 0.0)) throw ValidationError("geometry.height must be positive");
    if (!(target_h > 0.0)) throw ValidationError("geometry.target_h must be positive");
  }
  law.validate();
  if (!std::isfinite(load) || load < 0.0) throw ValidationError("load.p must be finite and non-negative");
  balance.validate(balance.local_gamma.size());
  solver.validate();
  if (n_iter < 0) throw ValidationError("run.n_iter must be non-negative");
  if (snapshot_every < 1) throw ValidationError("output.snapshot_every must be at least 1");
  if (out_dir.empty()) throw ValidationError("output.out_dir must not be empty");
  if (solver.path == SolverPath::analytic && balance.relation == BalanceRelation::inequality) {
    throw ValidationError("balance.relation = inequality requires solver.path = numerical");
  }
  if (objective == ObjectiveKind::external_work && load == 0.0) {
    throw ValidationError("objective.kind = external_work needs a nonzero load.p");
  }
}

void apply_boundary_conditions(TriMesh& mesh, BoundaryKind bc) {
  double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
  double xmax = -xmin, ymax = -xmin;
  for (const auto& p : mesh.nodes()) {
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  const double tol = 1e-9 * std::max(xmax - xmin, ymax - ymin);
  auto near = [tol](double a, double b) { return std::abs(a - b) <= tol; };

  mesh.dirichlet_nodes.clear();
  mesh.pinned_dofs.clear();
  mesh.neumann_edges.clear();

  std::vector<bool> clamped(static_cast<std::size_t>(mesh.num_nodes()), false);
  if (bc == BoundaryKind::free_isostatic) {
    auto nearest = [&](const Point2& target) {
      Index best = 0;
      for (Index v = 1; v < mesh.num_nodes(); ++v) {
        if ((mesh.node(v) - target).norm() < (mesh.node(best) - target).norm()) best = v;
      }
      return best;
    };
    const Index left = nearest({xmin, ymin});
    const Index right = nearest({xmax, ymin});
    if (left == right) throw ValidationError("free_isostatic: pin nodes coincide");
    mesh.pinned_dofs = {{left, 0}, {left, 1}, {right, 1}};
  } else {
    for (Index v = 0; v < mesh.num_nodes(); ++v) {
      const double x = mesh.node(v).x();
      if (near(x, xmin) || (bc == BoundaryKind::doubly_clamped && near(x, xmax))) {
        mesh.dirichlet_nodes.push_back(v);
        clamped[static_cast<std::size_t>(v)] = true;
      }
    }
  }

  const auto& loop = mesh.boundary_loop();
  for (std::size_t j = 0; j < loop.size(); ++j) {
    const Index a = loop[j];
    const Index b = loop[(j + 1) % loop.size()];
    if (clamped[static_cast<std::size_t>(a)] && clamped[static_cast<std::size_t>(b)]) continue;
    const bool top = near(mesh.node(a).y(), ymax) && near(mesh.node(b).y(), ymax);
    mesh.neumann_edges.push_back({a, b, top});
  }
}

TriMesh build_mesh(const Scenario& scenario) {
  TriMesh mesh = scenario.mesh_path.empty()
                     ? generate_rect_mesh(scenario.length, scenario.height, scenario.target_h)
                     : read_mesh_file(scenario.mesh_path);
  apply_boundary_conditions(mesh, scenario.bc);
  return mesh;
}

AssembledSystem build_system(const Scenario& scenario) {
  const TriMesh mesh = build_mesh(scenario);
  SurfaceLoad load;
  load.traction = Point2(0.0, -scenario.load);
  return assemble(mesh, scenario.law, load);
}

bool History::all_converged() const {
  for (const auto& r : records) {
    if (!r.converged) return false;
  }
  return true;
}

History run(const Scenario& scenario, const AssembledSystem& sys, const RunOptions& options) {
  scenario.validate();
  const Index ne = sys.num_elements();
  scenario.balance.validate(ne);
  const Objective objective(scenario.objective);
  using Clock = std::chrono::steady_clock;

  History hist;
  GrowthField growth = options.initial_growth.value_or(GrowthField(ne));
  if (growth.num_elements() != ne) throw ValidationError("restart growth does not match the mesh");
  hist.records.reserve(static_cast<std::size_t>(std::max(0, scenario.n_iter - options.start_iter) + 1));

  {
    const auto t0 = Clock::now();
    StepRecord rec = make_record(options.start_iter, sys, growth, solve_equilibrium(sys, growth));
    rec.psi = objective.value(sys, rec.displacement);
    rec.objective = rec.psi;
    rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    hist.records.push_back(std::move(rec));
    if (options.on_record) options.on_record(hist.records.back());
  }

  for (int i = options.start_iter + 1; i <= scenario.n_iter; ++i) {
    const auto t0 = Clock::now();
    try {
      StepResult step = solve_step(sys, growth, objective, scenario.balance, scenario.solver);
      growth = step.growth;
      StepRecord rec = make_record(i, sys, growth, std::move(step.displacement));
      rec.psi = step.psi_value;
      rec.objective = step.objective_value;
      rec.multiplier_norm = step.multipliers.norm();
      rec.kkt_residual = step.kkt_residual;
      rec.max_psd_violation = max_psd_violation(step.increment);
      rec.converged = step.converged;
      rec.inner_iterations = step.inner_iterations;
      rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
      hist.records.push_back(std::move(rec));
    } catch (const Error& e) {
      hist.failure = "step " + std::to_string(i) + ": " + e.what();
      break;
    }
    if (options.on_record) options.on_record(hist.records.back());
  }
  return hist;
}

History run(const Scenario& scenario) { return run(scenario, build_system(scenario)); }

double growth_l2_distance(const GrowthField& a, const GrowthField& b, const Vector& element_areas) {
  if (a.num_elements() != b.num_elements() || a.num_elements() != element_areas.size()) {
    throw ValidationError("growth distance: incompatible fields");
  }
  double sum = 0.0;
  for (Index e = 0; e < element_areas.size(); ++e) {
    const Eigen::Vector3d d = a.element(e) - b.element(e);
    sum += element_areas[e] * (d[0] * d[0] + d[1] * d[1] + 0.5 * d[2] * d[2]);
  }
  return std::sqrt(sum);
}

CompareReport compare_runs(const History& a, const History& b, const Vector& element_areas) {
  if (a.records.empty() || b.records.empty()) throw ValidationError("compare: empty history");
  CompareReport rep;
  const std::size_t n = std::min(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a.records[i].iter != b.records[i].iter) throw ValidationError("compare: iteration numbering differs");
    rep.objective_differences.push_back(b.records[i].objective - a.records[i].objective);
  }
  const auto& fa = a.records.back();
  const auto& fb = b.records.back();
  rep.final_objective_a = fa.objective;
  rep.final_objective_b = fb.objective;
  rep.final_psi_a = fa.psi;
  rep.final_psi_b = fb.psi;
  rep.growth_distance = growth_l2_distance(fa.growth, fb.growth, element_areas);
  return rep;
}

void write_checkpoint(const std::filesystem::path& path, const TriMesh& mesh, const GrowthField& growth,
                      int iter) {
  if (growth.num_elements() != mesh.num_elements()) throw ValidationError("checkpoint: growth/mesh mismatch");
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw Error("cannot open " + tmp + " for writing");
    os << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
    os << "iter " << iter << '\n';
    os << "mesh\n";
    write_mesh(os, mesh);
    os << "growth " << growth.values().size() << '\n';
    os << std::setprecision(17);
    for (Index i = 0; i < growth.values().size(); ++i) os << growth.values()[i] << '\n';
    if (!os) throw Error("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open checkpoint " + path.string());
  std::string magic, word;
  int version = 0;
  if (!(is >> magic >> version) || magic != kCheckpointMagic) {
    throw ValidationError("checkpoint " + path.string() + ": bad header");
  }
  if (version != kCheckpointVersion) {
    throw ValidationError("checkpoint " + path.string() + ": unsupported version " + std::to_string(version));
  }
  Checkpoint cp;
  if (!(is >> word >> cp.iter) || word != "iter") throw ValidationError("checkpoint: missing iter");
  if (!(is >> word) || word != "mesh") throw ValidationError("checkpoint: missing mesh");
  cp.mesh = read_mesh(is);
  Index n = 0;
  if (!(is >> word >> n) || word != "growth" || n != 3 * cp.mesh.num_elements()) {
    throw ValidationError("checkpoint: growth block does not match the mesh");
  }
  Vector v(n);
  for (Index i = 0; i < n; ++i) {
    if (!(is >> v[i])) throw ValidationError("checkpoint: truncated growth values");
  }
  cp.growth = GrowthField(std::move(v));
  return cp;
}

}  // namespace optgrowth
