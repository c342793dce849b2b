#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "optgrowth/constraints.hpp"
#include "optgrowth/fem.hpp"
#include "optgrowth/mesh.hpp"
#include "optgrowth/objectives.hpp"
#include "optgrowth/solver.hpp"

namespace optgrowth {

enum class BoundaryKind { cantilever, doubly_clamped, free_isostatic };

struct Scenario {
  std::string name;  // preset name, or empty

  // geometry
  double length = 1.0;
  double height = 0.1;
  double target_h = 0.0285;
  std::string mesh_path;  // overrides the generated mesh when set

  ElasticLaw law;
  BoundaryKind bc = BoundaryKind::doubly_clamped;
  double load = 5e-3;  // p; the top edge carries (0, -p)
  ObjectiveKind objective = ObjectiveKind::external_work;
  MassBalance balance{BalanceMode::global, BalanceRelation::equality, 0.05, {}};
  SolverConfig solver;
  int n_iter = 30;

  // output
  std::string out_dir = "./out";
  int snapshot_every = 5;
  std::optional<Point2> center;  // radial/hoop center; default area centroid

  void validate() const;
};

/// Mesh of the scenario with boundary-condition tags applied.
TriMesh build_mesh(const Scenario& scenario);
/// Tags Dirichlet nodes, isostatic pins and the loaded top edge on `mesh`,
/// using its bounding box as the rectangle (0, l) x (0, h).
void apply_boundary_conditions(TriMesh& mesh, BoundaryKind bc);
AssembledSystem build_system(const Scenario& scenario);

struct StepRecord {
  int iter = 0;
  GrowthField growth;
  Vector displacement;
  double objective = 0.0;  // Psi + increment penalty (Psi alone at the initial state)
  double psi = 0.0;
  double mass = 0.0;       // a . gamma
  double multiplier_norm = 0.0;
  double kkt_residual = 0.0;
  double max_psd_violation = 0.0;  // of the increment
  double perimeter = 0.0;
  double area = 0.0;
  double roundness = 0.0;
  double wall_ms = 0.0;
  bool converged = true;
  int inner_iterations = 0;
};

struct History {
  std::vector<StepRecord> records;
  bool all_converged() const;
  /// Set when a step threw; the records hold every completed step.
  std::string failure;
};

struct RunOptions {
  /// Start from this state instead of zero growth.
  std::optional<GrowthField> initial_growth;
  int start_iter = 0;
  /// Called after every record is appended (including the initial one).
  std::function<void(const StepRecord&)> on_record;
};

History run(const Scenario& scenario, const AssembledSystem& sys, const RunOptions& options = {});
History run(const Scenario& scenario);

struct CompareReport {
  std::vector<double> objective_differences;  // b - a per common iteration
  double final_objective_a = 0.0;
  double final_objective_b = 0.0;
  double final_psi_a = 0.0;
  double final_psi_b = 0.0;
  double growth_distance = 0.0;  // L2(Omega) of the final tensor difference
};

/// sqrt(sum_e |T_e| |G_a - G_b|_F^2) with the tensors rebuilt from the
/// vector layout (shear halved).
double growth_l2_distance(const GrowthField& a, const GrowthField& b, const Vector& element_areas);
CompareReport compare_runs(const History& a, const History& b, const Vector& element_areas);

// Checkpoint: versioned header, iteration index, embedded mesh, raw growth.
struct Checkpoint {
  int iter = 0;
  TriMesh mesh;
  GrowthField growth;
};
void write_checkpoint(const std::filesystem::path& path, const TriMesh& mesh, const GrowthField& growth,
                      int iter);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace optgrowth
