#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "optgrowth/evolution.hpp"
#include "optgrowth/postprocess.hpp"

namespace optgrowth {

/// Metrics table, one row per record. With `timing` false the wall_ms
/// column is written as 0 so repeated runs give identical files.
void write_metrics_csv(const std::filesystem::path& path, const History& history, bool timing = true);
/// Reads back the scalar columns (no fields) of a metrics table.
History read_metrics_csv(const std::filesystem::path& path);

struct Snapshot {
  int iter = 0;
  Vector displacement;
  GrowthField growth;
  StressField stress;    // loaded
  StressField residual;  // zero-load
  RadialHoop radial_hoop;  // of the residual stress
};

/// Builds every snapshot field for one record.
Snapshot make_snapshot(const AssembledSystem& sys, const StepRecord& record, const Point2& center);

/// Legacy ASCII VTK unstructured grid: point displacement and the cell
/// arrays Eg11 Eg22 Eg12 T11 T22 T12 T0_11 T0_22 T0_12 sigma_rr sigma_tt.
void write_vtk_snapshot(const std::filesystem::path& path, const TriMesh& mesh, const Snapshot& snap);

struct VtkData {
  std::vector<Point2> points;
  std::vector<Triangle> cells;
  std::vector<Point2> displacement;
  std::map<std::string, std::vector<double>> cell_arrays;
  std::vector<std::string> cell_array_order;
};
VtkData read_vtk(const std::filesystem::path& path);

/// Writes `content` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace optgrowth
