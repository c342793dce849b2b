// optgrowth command-line driver: run, validate, compare, selftest.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "optgrowth/config.hpp"
#include "optgrowth/evolution.hpp"
#include "optgrowth/output.hpp"
#include "optgrowth/selftest.hpp"

namespace fs = std::filesystem;
using namespace optgrowth;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitSolver = 2;

bool same_mesh(const TriMesh& a, const TriMesh& b) {
  return a.nodes() == b.nodes() && a.triangles() == b.triangles();
}

std::string snapshot_name(int iter) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%04d.vtk", iter);
  return buf;
}

struct RunArgs {
  std::string config;
  std::string solver;
  std::string out;
  std::string restart;
  bool no_timing = false;
  bool quiet = false;
};

int cmd_run(const RunArgs& args) {
  Scenario sc = parse_config_file(args.config);
  if (!args.solver.empty()) {
    sc.solver.path = args.solver == "analytic" ? SolverPath::analytic : SolverPath::numerical;
  }
  if (!args.out.empty()) sc.out_dir = args.out;
  sc.validate();

  const AssembledSystem sys = build_system(sc);
  const TriMesh& mesh = *sys.mesh;
  RunOptions opts;
  if (!args.restart.empty()) {
    Checkpoint cp = read_checkpoint(args.restart);
    if (!same_mesh(cp.mesh, mesh)) throw ValidationError("restart: checkpoint mesh differs from the scenario mesh");
    if (cp.iter > sc.n_iter) throw ValidationError("restart: checkpoint iteration exceeds run.n_iter");
    opts.start_iter = cp.iter;
    opts.initial_growth = std::move(cp.growth);
  }

  const fs::path out(sc.out_dir);
  fs::create_directories(out);
  write_file_atomic(out / "scenario.ini", describe(sc));
  const Point2 center = sc.center.value_or(mesh.area_centroid());

  opts.on_record = [&](const StepRecord& rec) {
    if (rec.iter % sc.snapshot_every == 0 || rec.iter == sc.n_iter || rec.iter == opts.start_iter) {
      write_vtk_snapshot(out / snapshot_name(rec.iter), mesh, make_snapshot(sys, rec, center));
      write_checkpoint(out / "checkpoint.chk", mesh, rec.growth, rec.iter);
    }
    if (!args.quiet) {
      std::cout << "iter " << rec.iter << "  objective " << rec.objective << "  kkt " << rec.kkt_residual
                << (rec.converged ? "" : "  (not converged)") << '\n';
    }
  };

  const History hist = run(sc, sys, opts);
  write_metrics_csv(out / "metrics.csv", hist, !args.no_timing);
  const StepRecord& last = hist.records.back();
  write_checkpoint(out / "final.chk", mesh, last.growth, last.iter);

  std::cout << "finished " << last.iter << " of " << sc.n_iter << " iterations; objective "
            << last.objective << ", roundness " << last.roundness << "; output in " << out.string() << '\n';
  if (!hist.failure.empty()) {
    std::cerr << "error: " << hist.failure << '\n';
    return kExitSolver;
  }
  if (!hist.all_converged()) {
    std::cerr << "error: at least one step did not reach the inner tolerance\n";
    return kExitSolver;
  }
  return kExitOk;
}

int cmd_validate(const std::string& config) {
  const Scenario sc = parse_config_file(config);
  std::cout << describe(sc);
  return kExitOk;
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b) {
  History a = read_metrics_csv(fs::path(dir_a) / "metrics.csv");
  History b = read_metrics_csv(fs::path(dir_b) / "metrics.csv");
  const Checkpoint ca = read_checkpoint(fs::path(dir_a) / "final.chk");
  const Checkpoint cb = read_checkpoint(fs::path(dir_b) / "final.chk");
  if (!same_mesh(ca.mesh, cb.mesh)) throw ValidationError("compare: the two runs use different meshes");
  if (a.records.empty() || b.records.empty()) throw ValidationError("compare: empty metrics");
  a.records.back().growth = ca.growth;
  b.records.back().growth = cb.growth;

  Vector areas(ca.mesh.num_elements());
  for (Index e = 0; e < areas.size(); ++e) areas[e] = element_geometry(ca.mesh, e).area;
  const CompareReport rep = compare_runs(a, b, areas);

  double max_diff = 0.0;
  for (double d : rep.objective_differences) max_diff = std::max(max_diff, std::abs(d));
  std::cout.precision(6);
  std::cout << "final objective A: " << rep.final_objective_a << "  (iter " << a.records.back().iter << ")\n"
            << "final objective B: " << rep.final_objective_b << "  (iter " << b.records.back().iter << ")\n"
            << "relative difference: "
            << std::abs(rep.final_objective_b - rep.final_objective_a) /
                   std::max(std::abs(rep.final_objective_a), 1e-300)
            << '\n'
            << "max |objective difference| over iterations: " << max_diff << '\n'
            << "L2 growth distance: " << rep.growth_distance << '\n';
  return kExitOk;
}

int cmd_selftest() {
  int failed = 0;
  for (const auto& r : run_selftest()) {
    std::cout << (r.passed ? "PASS  " : "FAIL  ") << r.name << "  " << r.detail << '\n';
    if (!r.passed) ++failed;
  }
  std::cout << (failed ? std::to_string(failed) + " check(s) failed" : std::string("all checks passed")) << '\n';
  return failed ? kExitSolver : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental volumetric growth by constrained minimization"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run the growth evolution of a scenario");
  run_cmd->add_option("config", run_args.config, "Scenario file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--solver", run_args.solver, "Override solver.path")
      ->check(CLI::IsMember({"analytic", "numerical"}));
  run_cmd->add_option("--out", run_args.out, "Override output.out_dir");
  run_cmd->add_option("--restart", run_args.restart, "Start from a checkpoint file")->check(CLI::ExistingFile);
  run_cmd->add_flag("--no-timing", run_args.no_timing, "Write zeros in the wall_ms column");
  run_cmd->add_flag("-q,--quiet", run_args.quiet, "Only print the final summary");

  std::string validate_config;
  auto* validate_cmd = app.add_subcommand("validate", "Parse a scenario and print it fully resolved");
  validate_cmd->add_option("config", validate_config, "Scenario file")->required()->check(CLI::ExistingFile);

  std::string dir_a, dir_b;
  auto* compare_cmd = app.add_subcommand("compare", "Compare the outputs of two runs");
  compare_cmd->add_option("run_a", dir_a, "First output directory")->required()->check(CLI::ExistingDirectory);
  compare_cmd->add_option("run_b", dir_b, "Second output directory")->required()->check(CLI::ExistingDirectory);

  auto* selftest_cmd = app.add_subcommand("selftest", "Run the built-in oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*run_cmd) return cmd_run(run_args);
    if (*validate_cmd) return cmd_validate(validate_config);
    if (*compare_cmd) return cmd_compare(dir_a, dir_b);
    if (*selftest_cmd) return cmd_selftest();
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}
