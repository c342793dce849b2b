#include "optgrowth/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace optgrowth {
namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  std::string out = s.substr(b, e - b + 1);
  if (out.size() >= 2 && (out.front() == '"' || out.front() == '\'') && out.back() == out.front()) {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  auto res = std::from_chars(first, s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ValidationError(key + ": expected a number, got '" + s + "'");
  }
  return v;
}

int parse_int(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ValidationError(key + ": expected an integer, got '" + s + "'");
  }
  return v;
}

template <class E>
E parse_enum(const std::string& key, const std::string& raw, const std::map<std::string, E>& options) {
  const std::string s = trim(raw);
  auto it = options.find(s);
  if (it != options.end()) return it->second;
  std::string allowed;
  for (const auto& [name, value] : options) allowed += (allowed.empty() ? "" : "|") + name;
  throw ValidationError(key + ": expected one of " + allowed + ", got '" + s + "'");
}

Point2 parse_point(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ValidationError(key + ": expected \"x,y\", got '" + s + "'");
  return {parse_double(key, s.substr(0, comma)), parse_double(key, s.substr(comma + 1))};
}

const std::map<std::string, BoundaryKind> kBoundary = {{"cantilever", BoundaryKind::cantilever},
                                                       {"doubly_clamped", BoundaryKind::doubly_clamped},
                                                       {"free_isostatic", BoundaryKind::free_isostatic}};
const std::map<std::string, ObjectiveKind> kObjective = {{"external_work", ObjectiveKind::external_work},
                                                         {"perimeter", ObjectiveKind::perimeter}};
const std::map<std::string, BalanceMode> kMode = {{"global", BalanceMode::global}, {"local", BalanceMode::local}};
const std::map<std::string, BalanceRelation> kRelation = {{"equality", BalanceRelation::equality},
                                                          {"inequality", BalanceRelation::inequality}};
const std::map<std::string, SolverPath> kPath = {{"analytic", SolverPath::analytic},
                                                 {"numerical", SolverPath::numerical}};
const std::map<std::string, GradientLinearization> kLinearization = {
    {"previous", GradientLinearization::previous}, {"fixed_point", GradientLinearization::fixed_point}};
const std::map<std::string, ShearWeight> kShear = {{"engineering", ShearWeight::engineering},
                                                   {"frobenius", ShearWeight::frobenius}};

template <class E>
std::string name_of(E value, const std::map<std::string, E>& options) {
  for (const auto& [name, v] : options) {
    if (v == value) return name;
  }
  return "?";
}

using Setter = void (*)(Scenario&, const std::string& key, const std::string& value);

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"geometry.length", [](Scenario& s, const std::string& k, const std::string& v) { s.length = parse_double(k, v); }},
      {"geometry.height", [](Scenario& s, const std::string& k, const std::string& v) { s.height = parse_double(k, v); }},
      {"geometry.target_h", [](Scenario& s, const std::string& k, const std::string& v) { s.target_h = parse_double(k, v); }},
      {"geometry.mesh_path", [](Scenario& s, const std::string&, const std::string& v) { s.mesh_path = trim(v); }},
      {"material.E", [](Scenario& s, const std::string& k, const std::string& v) { s.law.young_modulus = parse_double(k, v); }},
      {"material.nu", [](Scenario& s, const std::string& k, const std::string& v) { s.law.poisson_ratio = parse_double(k, v); }},
      {"bc.kind", [](Scenario& s, const std::string& k, const std::string& v) { s.bc = parse_enum(k, v, kBoundary); }},
      {"load.p", [](Scenario& s, const std::string& k, const std::string& v) { s.load = parse_double(k, v); }},
      {"objective.kind", [](Scenario& s, const std::string& k, const std::string& v) { s.objective = parse_enum(k, v, kObjective); }},
      {"balance.mode", [](Scenario& s, const std::string& k, const std::string& v) { s.balance.mode = parse_enum(k, v, kMode); }},
      {"balance.relation", [](Scenario& s, const std::string& k, const std::string& v) { s.balance.relation = parse_enum(k, v, kRelation); }},
      {"balance.gamma", [](Scenario& s, const std::string& k, const std::string& v) { s.balance.gamma = parse_double(k, v); }},
      {"solver.inv2tau", [](Scenario& s, const std::string& k, const std::string& v) { s.solver.inv2tau = parse_double(k, v); }},
      {"solver.path", [](Scenario& s, const std::string& k, const std::string& v) { s.solver.path = parse_enum(k, v, kPath); }},
      {"solver.gradient_linearization", [](Scenario& s, const std::string& k, const std::string& v) {
         s.solver.gradient_linearization = parse_enum(k, v, kLinearization);
       }},
      {"solver.shear_weight", [](Scenario& s, const std::string& k, const std::string& v) { s.solver.shear_weight = parse_enum(k, v, kShear); }},
      {"run.n_iter", [](Scenario& s, const std::string& k, const std::string& v) { s.n_iter = parse_int(k, v); }},
      {"output.snapshot_every", [](Scenario& s, const std::string& k, const std::string& v) { s.snapshot_every = parse_int(k, v); }},
      {"output.out_dir", [](Scenario& s, const std::string&, const std::string& v) { s.out_dir = trim(v); }},
      {"output.center", [](Scenario& s, const std::string& k, const std::string& v) {
         if (trim(v) == "centroid") {
           s.center.reset();
         } else {
           s.center = parse_point(k, v);
         }
       }},
  };
  return table;
}

}  // namespace

std::string to_string(BoundaryKind k) { return name_of(k, kBoundary); }
std::string to_string(ObjectiveKind k) { return name_of(k, kObjective); }
std::string to_string(BalanceMode m) { return name_of(m, kMode); }
std::string to_string(BalanceRelation r) { return name_of(r, kRelation); }
std::string to_string(SolverPath p) { return name_of(p, kPath); }
std::string to_string(GradientLinearization g) { return name_of(g, kLinearization); }
std::string to_string(ShearWeight w) { return name_of(w, kShear); }

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"doubly_clamped", "cantilever", "perimeter"};
  return names;
}

Scenario preset(const std::string& name) {
  Scenario s;
  s.name = name;
  s.law = {1.0, 0.0};
  s.length = 1.0;
  s.solver.path = SolverPath::numerical;
  if (name == "doubly_clamped" || name == "cantilever") {
    s.height = 0.1;
    s.target_h = 0.0285;
    s.bc = name == "cantilever" ? BoundaryKind::cantilever : BoundaryKind::doubly_clamped;
    s.load = name == "cantilever" ? 5e-4 : 5e-3;
    s.objective = ObjectiveKind::external_work;
    s.balance = {BalanceMode::global, BalanceRelation::equality, 0.05, {}};
    s.solver.inv2tau = 10.0;
    s.n_iter = 30;
  } else if (name == "perimeter") {
    s.height = 0.5;
    s.target_h = 0.0395;
    s.bc = BoundaryKind::free_isostatic;
    s.load = 0.0;
    s.objective = ObjectiveKind::perimeter;
    s.balance = {BalanceMode::local, BalanceRelation::equality, 0.024, {}};
    s.solver.inv2tau = 100.0;
    s.n_iter = 500;
  } else {
    throw ValidationError("preset: unknown preset '" + name + "' (expected doubly_clamped|cantilever|perimeter)");
  }
  return s;
}

Scenario parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError("config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  Scenario s = preset("doubly_clamped");
  s.name.clear();
  if (auto p = tree.get_child_optional("preset")) {
    if (!p->empty()) throw ValidationError("preset: must be a top-level key, not a section");
    s = preset(trim(p->data()));
  }

  const auto& table = setters();
  for (const auto& [section, child] : tree) {
    if (section == "preset") continue;
    static const std::vector<std::string> sections = {"geometry", "material", "bc",  "load",  "objective",
                                                      "balance",  "solver",   "run", "output"};
    if (child.empty() && !child.data().empty()) {
      throw ValidationError(section + ": unknown top-level key (only 'preset' is allowed outside sections)");
    }
    if (std::find(sections.begin(), sections.end(), section) == sections.end()) {
      throw ValidationError(section + ": unknown section");
    }
    for (const auto& [key, value] : child) {
      const std::string path = section + "." + key;
      auto it = table.find(path);
      if (it == table.end()) throw ValidationError(path + ": unknown key");
      it->second(s, path, value.data());
    }
  }
  s.validate();
  return s;
}

Scenario parse_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open config " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

std::string describe(const Scenario& s) {
  std::ostringstream os;
  if (!s.name.empty()) os << "; preset " << s.name << "\n";
  os << "[geometry]\n";
  os << "length = " << fmt(s.length) << "\nheight = " << fmt(s.height) << "\ntarget_h = " << fmt(s.target_h) << "\n";
  if (!s.mesh_path.empty()) os << "mesh_path = " << s.mesh_path << "\n";
  os << "\n[material]\nE = " << fmt(s.law.young_modulus) << "\nnu = " << fmt(s.law.poisson_ratio) << "\n";
  os << "\n[bc]\nkind = " << to_string(s.bc) << "\n";
  os << "\n[load]\np = " << fmt(s.load) << "\n";
  os << "\n[objective]\nkind = " << to_string(s.objective) << "\n";
  os << "\n[balance]\nmode = " << to_string(s.balance.mode) << "\nrelation = " << to_string(s.balance.relation)
     << "\ngamma = " << fmt(s.balance.gamma) << "\n";
  os << "\n[solver]\npath = " << to_string(s.solver.path) << "\ninv2tau = " << fmt(s.solver.inv2tau)
     << "\ngradient_linearization = " << to_string(s.solver.gradient_linearization)
     << "\nshear_weight = " << to_string(s.solver.shear_weight) << "\n";
  os << "\n[run]\nn_iter = " << s.n_iter << "\n";
  os << "\n[output]\nout_dir = " << s.out_dir << "\nsnapshot_every = " << s.snapshot_every << "\n";
  if (s.center) os << "center = " << fmt(s.center->x()) << "," << fmt(s.center->y()) << "\n";
  return os.str();
}

}  // namespace optgrowth
