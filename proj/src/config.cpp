#include "kcpc/cli.hpp"

#include "kcpc/error.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace kcpc {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + join(path, key) + "'");
  }
}

const json& object_at(const json& obj, const std::string& key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_object()) throw ConfigError("config key '" + join(path, key) + "' must be an object");
  return v;
}

double number_at(const json& obj, const std::string& key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError("config key '" + join(path, key) + "' must be a number");
  return v.get<double>();
}

long long integer_at(const json& obj, const std::string& key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_number_integer()) {
    throw ConfigError("config key '" + join(path, key) + "' must be an integer");
  }
  return v.get<long long>();
}

std::string string_at(const json& obj, const std::string& key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError("config key '" + join(path, key) + "' must be a string");
  return v.get<std::string>();
}

bool bool_at(const json& obj, const std::string& key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError("config key '" + join(path, key) + "' must be true or false");
  return v.get<bool>();
}

cd complex_value(const json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  throw ConfigError("config key '" + where + "' must hold numbers or [re, im] pairs");
}

Eigen::Matrix3cd parse_matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) throw ConfigError("config key '" + where + "' must be a 3x3 matrix");
  Eigen::Matrix3cd m;
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_array() || v[i].size() != 3) {
      throw ConfigError("config key '" + where + "' must be a 3x3 matrix");
    }
    for (int j = 0; j < 3; ++j) m(i, j) = complex_value(v[i][j], where);
  }
  return m;
}

WaveVector parse_vector(const json& v, double scale, const std::string& where) {
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number()) {
    throw ConfigError("config key '" + where + "' must list vectors of three numbers");
  }
  return WaveVector(scale * v[0].get<double>(), scale * v[1].get<double>(), scale * v[2].get<double>());
}

}  // namespace

PermittivityTensor PermittivitySpec::tensor() const {
  if (eps1) return PermittivityTensor(*eps1);
  return pseudochiral_tensor(eps_lattice, beta);
}

KPath RunConfig::build_path() const {
  if (!kpath.anchors.empty()) {
    std::vector<SymmetryPoint> anchors;
    for (const auto& name : kpath.anchors) anchors.push_back(resolve_symmetry_point(name, lattice));
    return build_kpath(anchors, kpath.segments_per_edge);
  }
  if (kpath.points.size() == 1) {
    KPath path;
    path.anchors = {{"", kpath.points.front()}};
    path.points = kpath.points;
    path.anchor_indices = {0};
    return path;
  }
  return build_kpath(kpath.points, kpath.segments_per_edge);
}

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  check_keys(doc, {"lattice", "geometry", "grid", "permittivity", "solver", "kpath", "output", "gap",
                   "compare_modes", "workers"},
             "");
  RunConfig cfg;
  cfg.document = doc;

  if (!doc.contains("lattice")) throw ConfigError("missing config key 'lattice'");
  cfg.lattice = parse_lattice_family(string_at(doc, "lattice", ""));

  if (!doc.contains("geometry")) throw ConfigError("missing config key 'geometry'");
  {
    const json& g = object_at(doc, "geometry", "");
    if (!g.contains("kind")) throw ConfigError("missing config key 'geometry.kind'");
    cfg.geometry = GeometrySpec::make(parse_geometry_kind(string_at(g, "kind", "geometry")));
    for (const auto& [key, value] : g.items()) {
      if (key == "kind") continue;
      if (!cfg.geometry.parameters().count(key)) {
        throw ConfigError("unknown config key 'geometry." + key + "' for geometry " +
                          to_string(cfg.geometry.kind()));
      }
      cfg.geometry.set_parameter(key, number_at(g, key, "geometry"));
    }
  }

  if (!doc.contains("grid")) throw ConfigError("missing config key 'grid'");
  {
    const json& g = object_at(doc, "grid", "");
    check_keys(g, {"n"}, "grid");
    if (!g.contains("n")) throw ConfigError("missing config key 'grid.n'");
    const long long n = integer_at(g, "n", "grid");
    if (n < 4 || n > 1024) throw ConfigError("config key 'grid.n' must be in [4, 1024]");
    cfg.n = static_cast<int>(n);
  }

  cfg.permittivity.eps_lattice = cfg.lattice == LatticeFamily::BCC ? 16.0 : 13.0;
  if (doc.contains("permittivity")) {
    const json& p = object_at(doc, "permittivity", "");
    check_keys(p, {"mode", "eps_lattice", "beta", "eps1"}, "permittivity");
    if (p.contains("mode")) cfg.permittivity.mode = parse_permittivity_mode(string_at(p, "mode", "permittivity"));
    if (p.contains("eps_lattice")) cfg.permittivity.eps_lattice = number_at(p, "eps_lattice", "permittivity");
    if (p.contains("beta")) cfg.permittivity.beta = number_at(p, "beta", "permittivity");
    if (p.contains("eps1")) cfg.permittivity.eps1 = parse_matrix(p.at("eps1"), "permittivity.eps1");
  }
  // Surface tensor errors (non-Hermitian, bad eps_lattice) before any solve.
  (void)cfg.permittivity.tensor();

  if (doc.contains("solver")) {
    const json& s = object_at(doc, "solver", "");
    check_keys(s, {"num_eigenpairs", "tol", "max_iter", "block_size", "gamma", "seed", "initial_guess"}, "solver");
    if (s.contains("num_eigenpairs")) cfg.solver.num_eigenpairs = static_cast<int>(integer_at(s, "num_eigenpairs", "solver"));
    if (s.contains("tol")) cfg.solver.tol = number_at(s, "tol", "solver");
    if (s.contains("max_iter")) cfg.solver.max_iter = static_cast<int>(integer_at(s, "max_iter", "solver"));
    if (s.contains("block_size")) cfg.solver.block_size = static_cast<int>(integer_at(s, "block_size", "solver"));
    if (s.contains("gamma")) cfg.solver.gamma_override = number_at(s, "gamma", "solver");
    if (s.contains("seed")) {
      const long long seed = integer_at(s, "seed", "solver");
      if (seed < 0) throw ConfigError("config key 'solver.seed' must be non-negative");
      cfg.solver.seed = static_cast<std::uint64_t>(seed);
    }
    if (s.contains("initial_guess")) cfg.solver.initial_guess = parse_initial_guess(string_at(s, "initial_guess", "solver"));
  }
  cfg.solver.validate();

  if (!doc.contains("kpath")) throw ConfigError("missing config key 'kpath'");
  {
    const json& k = object_at(doc, "kpath", "");
    check_keys(k, {"anchors", "points", "units", "segments_per_edge"}, "kpath");
    double scale = 1.0;
    if (k.contains("units")) {
      const std::string units = string_at(k, "units", "kpath");
      if (units == "pi") {
        scale = kPi;
      } else if (units != "radians") {
        throw ConfigError("config key 'kpath.units' must be 'radians' or 'pi'");
      }
    }
    if (k.contains("anchors") == k.contains("points")) {
      throw ConfigError("config key 'kpath' needs exactly one of 'anchors' or 'points'");
    }
    if (k.contains("anchors")) {
      const json& a = k.at("anchors");
      if (!a.is_array()) throw ConfigError("config key 'kpath.anchors' must be a list of names");
      for (const auto& name : a) {
        if (!name.is_string()) throw ConfigError("config key 'kpath.anchors' must be a list of names");
        cfg.kpath.anchors.push_back(name.get<std::string>());
      }
      if (cfg.kpath.anchors.size() < 2) throw ConfigError("config key 'kpath.anchors' needs at least 2 names");
    } else {
      const json& pts = k.at("points");
      if (!pts.is_array() || pts.empty()) throw ConfigError("config key 'kpath.points' must be a non-empty list");
      for (const auto& v : pts) cfg.kpath.points.push_back(parse_vector(v, scale, "kpath.points"));
    }
    if (k.contains("segments_per_edge")) {
      const long long seg = integer_at(k, "segments_per_edge", "kpath");
      if (seg < 1) throw ConfigError("config key 'kpath.segments_per_edge' must be >= 1");
      cfg.kpath.segments_per_edge = static_cast<int>(seg);
    }
    for (const auto& p : cfg.kpath.points) {
      if (!p.is_finite()) throw ConfigError("config key 'kpath.points' must be finite");
    }
    (void)cfg.build_path();
  }

  if (doc.contains("output")) {
    const json& o = object_at(doc, "output", "");
    check_keys(o, {"csv", "json", "svg"}, "output");
    if (o.contains("csv")) cfg.outputs.csv = string_at(o, "csv", "output");
    if (o.contains("json")) cfg.outputs.json = string_at(o, "json", "output");
    if (o.contains("svg")) cfg.outputs.svg = string_at(o, "svg", "output");
  }

  if (doc.contains("gap")) {
    const json& g = object_at(doc, "gap", "");
    check_keys(g, {"below_band"}, "gap");
    if (g.contains("below_band")) {
      const long long b = integer_at(g, "below_band", "gap");
      if (b < 1 || b >= cfg.solver.num_eigenpairs) {
        throw ConfigError("config key 'gap.below_band' must be in [1, num_eigenpairs - 1]");
      }
      cfg.gap_below_band = static_cast<int>(b);
    }
  }

  if (doc.contains("compare_modes")) cfg.compare_modes = bool_at(doc, "compare_modes", "");
  if (doc.contains("workers")) {
    const long long w = integer_at(doc, "workers", "");
    if (w < 1) throw ConfigError("config key 'workers' must be >= 1");
    cfg.workers = static_cast<int>(w);
  }
  return cfg;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  json* node = &doc;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) {
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    path.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    json& next = (*node)[path[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ConfigError("override key '" + key + "' passes through a non-object");
    node = &next;
  }
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  (*node)[path.back()] = std::move(value);
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc = json::parse(buffer.str(), nullptr, false, true);
  if (doc.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_config(doc);
}

int resolve_workers(const RunConfig& config) {
  if (const char* env = std::getenv("KCPC_WORKERS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || value < 1) {
      throw ConfigError("KCPC_WORKERS must be a positive integer");
    }
    return static_cast<int>(value);
  }
  return std::max(1, config.workers);
}

}  // namespace kcpc
