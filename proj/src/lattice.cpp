#include "kcpc/lattice.hpp"

#include "kcpc/error.hpp"
#include "kcpc/types.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cctype>

namespace kcpc {

std::string to_string(LatticeFamily family) {
  switch (family) {
    case LatticeFamily::SC:
      return "SC";
    case LatticeFamily::FCC:
      return "FCC";
    case LatticeFamily::BCC:
      return "BCC";
  }
  return "?";
}

LatticeFamily parse_lattice_family(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "SC") return LatticeFamily::SC;
  if (upper == "FCC") return LatticeFamily::FCC;
  if (upper == "BCC") return LatticeFamily::BCC;
  throw ConfigError("unknown lattice family '" + std::string(name) + "' (expected SC, FCC or BCC)");
}

LatticeSpec build_lattice(LatticeFamily family) {
  LatticeSpec spec;
  spec.family = family;
  switch (family) {
    case LatticeFamily::SC:
      spec.a.setIdentity();
      break;
    case LatticeFamily::FCC:
      spec.a << 0.0, 0.5, 0.5,  //
          0.5, 0.0, 0.5,        //
          0.5, 0.5, 0.0;
      break;
    case LatticeFamily::BCC:
      spec.a << -0.5, 0.5, 0.5,  //
          0.5, -0.5, 0.5,        //
          0.5, 0.5, -0.5;
      break;
  }
  spec.b = spec.a.inverse();
  return spec;
}

std::vector<SymmetryPoint> symmetry_points(LatticeFamily family) {
  constexpr double p = kPi;
  switch (family) {
    case LatticeFamily::SC:
      return {{"Γ", {0, 0, 0}}, {"L", {p, 0, 0}}, {"M", {p, p, 0}}, {"N", {p, p, p}}};
    case LatticeFamily::FCC:
      return {{"X", {0, 2 * p, 0}}, {"U", {p / 2, 2 * p, p}}, {"L", {p, p, p}},
              {"Γ", {0, 0, 0}},     {"W", {p, 2 * p, 0}},     {"K", {1.5 * p, 1.5 * p, 0}}};
    case LatticeFamily::BCC:
      return {{"H′", {2 * p, 0, 0}},
              {"Γ", {0, 0, 0}},
              {"P", {p, p, p}},
              {"N", {p, 0, p}},
              {"H", {0, 2 * p, 0}}};
  }
  return {};
}

namespace {

std::string canonical_label(std::string_view label) {
  if (label == "Gamma" || label == "G" || label == "gamma") return "Γ";
  if (label == "H'" || label == "Hp") return "H′";
  return std::string(label);
}

}  // namespace

SymmetryPoint resolve_symmetry_point(std::string_view name, LatticeFamily default_family) {
  LatticeFamily family = default_family;
  std::string_view label = name;
  if (const auto colon = name.find(':'); colon != std::string_view::npos) {
    family = parse_lattice_family(name.substr(0, colon));
    label = name.substr(colon + 1);
  }
  const std::string wanted = canonical_label(label);
  for (auto& point : symmetry_points(family)) {
    if (point.label == wanted) return point;
  }
  throw ConfigError("unknown symmetry point '" + std::string(name) + "' for lattice " +
                    to_string(family));
}

std::string KPath::label_at(std::size_t index) const {
  for (std::size_t a = 0; a < anchor_indices.size(); ++a) {
    if (anchor_indices[a] == index) return anchors[a].label;
  }
  return {};
}

KPath build_kpath(const std::vector<SymmetryPoint>& anchors, int segments_per_edge) {
  if (anchors.size() < 2) throw ConfigError("k-path needs at least 2 anchors");
  if (segments_per_edge < 1) throw ConfigError("k-path segments_per_edge must be >= 1");

  KPath path;
  path.anchors = anchors;
  path.segments_per_edge = segments_per_edge;
  path.points.reserve(anchors.size() + (anchors.size() - 1) * (segments_per_edge - 1));
  for (std::size_t e = 0; e + 1 < anchors.size(); ++e) {
    const Eigen::Vector3d& from = anchors[e].k.k;
    const Eigen::Vector3d& to = anchors[e + 1].k.k;
    path.anchor_indices.push_back(path.points.size());
    path.points.emplace_back(from);
    for (int s = 1; s < segments_per_edge; ++s) {
      const double t = static_cast<double>(s) / segments_per_edge;
      path.points.emplace_back(Eigen::Vector3d((1.0 - t) * from + t * to));
    }
  }
  path.anchor_indices.push_back(path.points.size());
  path.points.push_back(anchors.back().k);
  return path;
}

KPath build_kpath(const std::vector<WaveVector>& anchors, int segments_per_edge) {
  std::vector<SymmetryPoint> labeled;
  labeled.reserve(anchors.size());
  for (const auto& k : anchors) labeled.push_back({"", k});
  return build_kpath(labeled, segments_per_edge);
}

}  // namespace kcpc
