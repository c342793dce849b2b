#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "optgrowth/config.hpp"
#include "optgrowth/evolution.hpp"
#include "test_support.hpp"

using namespace optgrowth;
namespace fs = std::filesystem;

namespace {

Scenario short_clamped(int n, SolverPath path) {
  Scenario sc = preset("doubly_clamped");
  sc.n_iter = n;
  sc.solver.path = path;
  return sc;
}

Scenario coarse_perimeter(int n) {
  Scenario sc = preset("perimeter");
  sc.target_h = 0.1;
  sc.n_iter = n;
  return sc;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("optgrowth_evolution_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Boundary, CantileverAndClampedTags) {
  TriMesh m = generate_rect_mesh(1.0, 0.1, 0.0285);
  apply_boundary_conditions(m, BoundaryKind::cantilever);
  ASSERT_FALSE(m.dirichlet_nodes.empty());
  for (Index v : m.dirichlet_nodes) EXPECT_EQ(m.node(v).x(), 0.0);
  EXPECT_EQ(m.dirichlet_nodes.size(), 6u);
  double loaded_length = 0.0;
  for (const auto& e : m.neumann_edges) {
    if (e.loaded) {
      EXPECT_EQ(m.node(e.a).y(), 0.1);
      EXPECT_EQ(m.node(e.b).y(), 0.1);
      loaded_length += (m.node(e.b) - m.node(e.a)).norm();
    }
    EXPECT_FALSE(m.node(e.a).x() == 0.0 && m.node(e.b).x() == 0.0);
  }
  EXPECT_NEAR(loaded_length, 1.0, 1e-12);

  TriMesh d = generate_rect_mesh(1.0, 0.1, 0.0285);
  apply_boundary_conditions(d, BoundaryKind::doubly_clamped);
  EXPECT_EQ(d.dirichlet_nodes.size(), 12u);
  for (Index v : d.dirichlet_nodes) EXPECT_TRUE(d.node(v).x() == 0.0 || d.node(v).x() == 1.0);
  EXPECT_TRUE(d.pinned_dofs.empty());
}

TEST(Scenario, ValidationRules) {
  Scenario sc;
  EXPECT_NO_THROW(sc.validate());
  sc.solver.path = SolverPath::analytic;
  sc.balance.relation = BalanceRelation::inequality;
  EXPECT_THROW(sc.validate(), ValidationError);
  sc = Scenario{};
  sc.load = 0.0;
  EXPECT_THROW(sc.validate(), ValidationError);
  sc = Scenario{};
  sc.balance.gamma = -0.01;
  EXPECT_THROW(sc.validate(), ValidationError);
  sc = Scenario{};
  sc.snapshot_every = 0;
  EXPECT_THROW(sc.validate(), ValidationError);
  sc = Scenario{};
  sc.n_iter = -1;
  EXPECT_THROW(sc.validate(), ValidationError);
}

TEST(Run, RecordCountsMassAndCallbacks) {
  const Scenario sc = short_clamped(6, SolverPath::numerical);
  const auto sys = build_system(sc);
  int calls = 0;
  RunOptions opts;
  opts.on_record = [&](const StepRecord& r) { EXPECT_EQ(r.iter, calls++); };
  const History h = run(sc, sys, opts);
  ASSERT_EQ(h.records.size(), 7u);
  EXPECT_EQ(calls, 7);
  EXPECT_TRUE(h.failure.empty());
  EXPECT_TRUE(h.all_converged());
  const double per_step = sc.balance.gamma * sys.domain_area;
  for (const auto& r : h.records) {
    EXPECT_NEAR(r.mass, r.iter * per_step, 1e-12);
    EXPECT_LE(r.max_psd_violation, 1e-12);
    if (r.iter > 0) EXPECT_LE(r.kkt_residual, 1e-5);
  }
  EXPECT_EQ(h.records[0].objective, h.records[0].psi);
}

TEST(Run, GrowthOnlyAccumulates) {
  const Scenario sc = coarse_perimeter(8);
  const History h = run(sc);
  ASSERT_EQ(h.records.size(), 9u);
  for (std::size_t i = 1; i < h.records.size(); ++i) {
    const GrowthField inc(Vector(h.records[i].growth.values() - h.records[i - 1].growth.values()));
    EXPECT_LE(max_psd_violation(inc), 1e-12) << "step " << i;
  }
}

TEST(Run, ConstantGradientGrowsLinearlyInTime) {
  const Scenario sc = short_clamped(10, SolverPath::analytic);
  const History h = run(sc);
  const Vector& g1 = h.records[1].growth.values();
  for (const auto& r : h.records) {
    EXPECT_LE((r.growth.values() - r.iter * g1).lpNorm<Eigen::Infinity>(), 1e-12) << "iter " << r.iter;
  }
}

TEST(Run, StartBeyondEndGivesOnlyTheInitialRecord) {
  const Scenario sc = short_clamped(3, SolverPath::numerical);
  const auto sys = build_system(sc);
  RunOptions opts;
  opts.start_iter = 3;
  const History h = run(sc, sys, opts);
  ASSERT_EQ(h.records.size(), 1u);
  EXPECT_EQ(h.records[0].iter, 3);
}

TEST(Run, StepFailureIsReportedWithCompletedRecords) {
  Scenario sc = short_clamped(4, SolverPath::numerical);
  sc.solver.inv2tau = 1e-300;  // step size overflows
  const History h = run(sc);
  EXPECT_FALSE(h.failure.empty());
  EXPECT_EQ(h.failure.rfind("step 1", 0), 0u) << h.failure;
  EXPECT_EQ(h.records.size(), 1u);
}

TEST(Run, MismatchedRestartRejected) {
  const Scenario sc = short_clamped(2, SolverPath::numerical);
  const auto sys = build_system(sc);
  RunOptions opts;
  opts.initial_growth = GrowthField(3);
  EXPECT_THROW(run(sc, sys, opts), ValidationError);
}

TEST(Compare, DistanceOracleAndIdenticalRuns) {
  const Vector areas = Vector::Constant(1, 2.0);
  const GrowthField a(Vector(Eigen::Vector3d(1, 0, 2)));
  const GrowthField zero(1);
  EXPECT_NEAR(growth_l2_distance(a, zero, areas), std::sqrt(6.0), 1e-15);
  EXPECT_THROW(growth_l2_distance(a, GrowthField(2), areas), ValidationError);

  const Scenario sc = short_clamped(4, SolverPath::numerical);
  const auto sys = build_system(sc);
  const History h1 = run(sc, sys);
  const History h2 = run(sc, sys);
  const auto rep = compare_runs(h1, h2, sys.element_areas);
  EXPECT_EQ(rep.growth_distance, 0.0);
  for (double d : rep.objective_differences) EXPECT_EQ(d, 0.0);
  EXPECT_EQ(rep.final_objective_a, rep.final_objective_b);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto dir = scratch("roundtrip");
  const Scenario sc = coarse_perimeter(3);
  const auto sys = build_system(sc);
  const History h = run(sc, sys);
  write_checkpoint(dir / "c.chk", *sys.mesh, h.records.back().growth, 3);
  const Checkpoint cp = read_checkpoint(dir / "c.chk");
  EXPECT_EQ(cp.iter, 3);
  EXPECT_EQ(cp.growth.values(), h.records.back().growth.values());
  EXPECT_EQ(cp.mesh.nodes(), sys.mesh->nodes());
  EXPECT_EQ(cp.mesh.triangles(), sys.mesh->triangles());
  EXPECT_FALSE(fs::exists(dir / "c.chk.tmp"));
}

TEST(Checkpoint, CorruptFilesRejected) {
  const auto dir = scratch("corrupt");
  {
    std::ofstream(dir / "bad.chk") << "something else 1\n";
  }
  EXPECT_THROW(read_checkpoint(dir / "bad.chk"), ValidationError);
  {
    std::ofstream(dir / "ver.chk") << "optgrowth-checkpoint 99\n";
  }
  EXPECT_THROW(read_checkpoint(dir / "ver.chk"), ValidationError);
  const TriMesh m = generate_rect_mesh(1.0, 1.0, std::sqrt(2.0));
  write_checkpoint(dir / "ok.chk", m, GrowthField(2), 1);
  std::string text;
  {
    std::ifstream is(dir / "ok.chk");
    text.assign(std::istreambuf_iterator<char>(is), {});
  }
  {
    std::ofstream(dir / "trunc.chk") << text.substr(0, text.size() - 4);
  }
  EXPECT_THROW(read_checkpoint(dir / "trunc.chk"), ValidationError);
  EXPECT_THROW(read_checkpoint(dir / "missing.chk"), ValidationError);
}

TEST(Checkpoint, RestartReproducesTheUninterruptedRun) {
  const auto dir = scratch("restart");
  const Scenario full = coarse_perimeter(6);
  const auto sys = build_system(full);
  const History ref = run(full, sys);

  Scenario first = full;
  first.n_iter = 3;
  const History part = run(first, sys);
  write_checkpoint(dir / "mid.chk", *sys.mesh, part.records.back().growth, 3);

  const Checkpoint cp = read_checkpoint(dir / "mid.chk");
  RunOptions opts;
  opts.start_iter = cp.iter;
  opts.initial_growth = cp.growth;
  const History rest = run(full, sys, opts);
  ASSERT_EQ(rest.records.size(), 4u);
  EXPECT_EQ(rest.records.front().iter, 3);
  EXPECT_EQ(rest.records.back().iter, 6);
  EXPECT_LE((rest.records.back().growth.values() - ref.records.back().growth.values()).lpNorm<Eigen::Infinity>(),
            1e-14);
  EXPECT_EQ(rest.records.back().objective, ref.records.back().objective);
}
