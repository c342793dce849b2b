#include "optgrowth/output.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace optgrowth {
namespace {

const char* const kCsvHeader =
    "iter,objective,mass,multiplier_norm,kkt_residual,max_psd_violation,perimeter,area,roundness,wall_ms";

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_num(const std::string& s, const std::string& where) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ValidationError(where + ": bad number '" + s + "'");
  }
  return v;
}

void expect(std::istream& is, const std::string& word, const std::string& path) {
  std::string w;
  if (!(is >> w) || w != word) {
    throw ValidationError(path + ": expected '" + word + "', found '" + w + "'");
  }
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error("cannot open " + tmp.string() + " for writing");
    os << content;
    if (!os) throw Error("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void write_metrics_csv(const std::filesystem::path& path, const History& history, bool timing) {
  if (history.records.empty()) throw ValidationError("metrics: empty history");
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& r : history.records) {
    os << r.iter << ',' << num(r.objective) << ',' << num(r.mass) << ',' << num(r.multiplier_norm) << ','
       << num(r.kkt_residual) << ',' << num(r.max_psd_violation) << ',' << num(r.perimeter) << ','
       << num(r.area) << ',' << num(r.roundness) << ',' << num(timing ? r.wall_ms : 0.0) << '\n';
  }
  write_file_atomic(path, os.str());
}

History read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open metrics file " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw ValidationError(path.string() + ": unexpected header");
  History h;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (cols.size() != 10) throw ValidationError(where + ": expected 10 columns");
    StepRecord r;
    r.iter = static_cast<int>(parse_num(cols[0], where));
    r.objective = parse_num(cols[1], where);
    r.mass = parse_num(cols[2], where);
    r.multiplier_norm = parse_num(cols[3], where);
    r.kkt_residual = parse_num(cols[4], where);
    r.max_psd_violation = parse_num(cols[5], where);
    r.perimeter = parse_num(cols[6], where);
    r.area = parse_num(cols[7], where);
    r.roundness = parse_num(cols[8], where);
    r.wall_ms = parse_num(cols[9], where);
    h.records.push_back(std::move(r));
  }
  return h;
}

Snapshot make_snapshot(const AssembledSystem& sys, const StepRecord& record, const Point2& center) {
  Snapshot s;
  s.iter = record.iter;
  s.displacement = record.displacement;
  s.growth = record.growth;
  s.stress = cauchy_stress(sys, record.displacement, record.growth);
  s.residual = residual_stress(sys, record.growth);
  s.radial_hoop = radial_hoop(s.residual, *sys.mesh, center);
  return s;
}

void write_vtk_snapshot(const std::filesystem::path& path, const TriMesh& mesh, const Snapshot& snap) {
  const Index n = mesh.num_nodes();
  const Index ne = mesh.num_elements();
  if (snap.displacement.size() != 2 * n || snap.growth.num_elements() != ne || snap.stress.num_elements() != ne ||
      snap.residual.num_elements() != ne || snap.radial_hoop.sigma_rr.size() != ne) {
    throw ValidationError("vtk: snapshot fields do not match the mesh");
  }
  std::ostringstream os;
  os << "# vtk DataFile Version 3.0\n";
  os << "optgrowth iter " << snap.iter << "\n";
  os << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << n << " double\n";
  for (const auto& p : mesh.nodes()) os << num(p.x()) << ' ' << num(p.y()) << " 0\n";
  os << "CELLS " << ne << ' ' << 4 * ne << '\n';
  for (const auto& t : mesh.triangles()) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "CELL_TYPES " << ne << '\n';
  for (Index e = 0; e < ne; ++e) os << "5\n";
  os << "POINT_DATA " << n << "\nVECTORS displacement double\n";
  for (Index v = 0; v < n; ++v) {
    os << num(snap.displacement[2 * v]) << ' ' << num(snap.displacement[2 * v + 1]) << " 0\n";
  }
  os << "CELL_DATA " << ne << '\n';
  auto array = [&](const char* name, auto&& value) {
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (Index e = 0; e < ne; ++e) os << num(value(e)) << '\n';
  };
  const Vector& g = snap.growth.values();
  array("Eg11", [&](Index e) { return g[3 * e]; });
  array("Eg22", [&](Index e) { return g[3 * e + 1]; });
  array("Eg12", [&](Index e) { return 0.5 * g[3 * e + 2]; });
  array("T11", [&](Index e) { return snap.stress.values(e, 0); });
  array("T22", [&](Index e) { return snap.stress.values(e, 1); });
  array("T12", [&](Index e) { return snap.stress.values(e, 2); });
  array("T0_11", [&](Index e) { return snap.residual.values(e, 0); });
  array("T0_22", [&](Index e) { return snap.residual.values(e, 1); });
  array("T0_12", [&](Index e) { return snap.residual.values(e, 2); });
  array("sigma_rr", [&](Index e) { return snap.radial_hoop.sigma_rr[e]; });
  array("sigma_tt", [&](Index e) { return snap.radial_hoop.sigma_tt[e]; });
  write_file_atomic(path, os.str());
}

VtkData read_vtk(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open VTK file " + path.string());
  const std::string p = path.string();
  std::string line;
  for (int i = 0; i < 4; ++i) {
    if (!std::getline(is, line)) throw ValidationError(p + ": truncated header");
  }
  if (line != "DATASET UNSTRUCTURED_GRID") throw ValidationError(p + ": not an unstructured grid");

  VtkData d;
  Index n = 0, ne = 0, size = 0;
  std::string type, word;
  expect(is, "POINTS", p);
  is >> n >> type;
  d.points.resize(static_cast<std::size_t>(n));
  for (auto& pt : d.points) {
    double z = 0.0;
    if (!(is >> pt.x() >> pt.y() >> z)) throw ValidationError(p + ": truncated points");
  }
  expect(is, "CELLS", p);
  is >> ne >> size;
  d.cells.resize(static_cast<std::size_t>(ne));
  for (auto& c : d.cells) {
    int k = 0;
    if (!(is >> k >> c[0] >> c[1] >> c[2]) || k != 3) throw ValidationError(p + ": bad cell");
  }
  expect(is, "CELL_TYPES", p);
  is >> size;
  for (Index e = 0; e < size; ++e) is >> word;
  expect(is, "POINT_DATA", p);
  is >> size;
  expect(is, "VECTORS", p);
  is >> word >> type;
  d.displacement.resize(static_cast<std::size_t>(n));
  for (auto& u : d.displacement) {
    double z = 0.0;
    if (!(is >> u.x() >> u.y() >> z)) throw ValidationError(p + ": truncated displacement");
  }
  expect(is, "CELL_DATA", p);
  is >> size;
  while (is >> word) {
    if (word != "SCALARS") throw ValidationError(p + ": unexpected '" + word + "'");
    std::string name;
    int comps = 0;
    is >> name >> type >> comps;
    expect(is, "LOOKUP_TABLE", p);
    is >> word;
    std::vector<double> values(static_cast<std::size_t>(ne));
    for (auto& v : values) {
      std::string tok;
      if (!(is >> tok)) throw ValidationError(p + ": truncated array " + name);
      v = parse_num(tok, p);
    }
    d.cell_array_order.push_back(name);
    d.cell_arrays[name] = std::move(values);
  }
  return d;
}

}  // namespace optgrowth
