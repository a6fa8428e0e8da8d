#include "kcpc/geometry.hpp"

#include "kcpc/error.hpp"
#include "kcpc/types.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

namespace kcpc {

GridSpec GridSpec::make(int n) {
  if (n < 4) throw ConfigError("grid division N must be >= 4, got " + std::to_string(n));
  return GridSpec{n};
}

std::string to_string(GeometryKind kind) {
  switch (kind) {
    case GeometryKind::ScCurv:
      return "SC_CURV";
    case GeometryKind::FccDiamond:
      return "FCC_DIAMOND";
    case GeometryKind::BccSingleGyroid:
      return "BCC_SG";
    case GeometryKind::BccDoubleGyroid:
      return "BCC_DG";
    case GeometryKind::Vacuum:
      return "VACUUM";
    case GeometryKind::Full:
      return "FULL";
  }
  return "?";
}

GeometryKind parse_geometry_kind(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) {
    return c == '-' ? '_' : static_cast<char>(std::toupper(c));
  });
  if (upper == "SC_CURV") return GeometryKind::ScCurv;
  if (upper == "FCC_DIAMOND" || upper == "FCC") return GeometryKind::FccDiamond;
  if (upper == "BCC_SG") return GeometryKind::BccSingleGyroid;
  if (upper == "BCC_DG") return GeometryKind::BccDoubleGyroid;
  if (upper == "VACUUM") return GeometryKind::Vacuum;
  if (upper == "FULL") return GeometryKind::Full;
  throw ConfigError("unknown geometry kind '" + std::string(name) + "'");
}

GeometrySpec GeometrySpec::make(GeometryKind kind) {
  GeometrySpec spec;
  spec.kind_ = kind;
  switch (kind) {
    case GeometryKind::ScCurv:
      spec.params_ = {{"sphere_radius", 0.345}, {"cylinder_radius", 0.11}};
      break;
    case GeometryKind::FccDiamond:
      spec.params_ = {{"sphere_radius", 0.12}, {"spheroid_minor_radius", 0.11}};
      break;
    case GeometryKind::BccSingleGyroid:
    case GeometryKind::BccDoubleGyroid:
      spec.params_ = {{"threshold", 1.1}};
      break;
    case GeometryKind::Vacuum:
    case GeometryKind::Full:
      break;
  }
  return spec;
}

double GeometrySpec::parameter(const std::string& name) const {
  const auto it = params_.find(name);
  if (it == params_.end()) {
    throw ConfigError("geometry " + to_string(kind_) + " has no parameter '" + name + "'");
  }
  return it->second;
}

void GeometrySpec::set_parameter(const std::string& name, double value) {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw ConfigError("geometry " + to_string(kind_) + " has no parameter '" + name + "'");
  }
  if (!std::isfinite(value) || value <= 0.0) {
    throw ConfigError("geometry parameter '" + name + "' must be positive");
  }
  it->second = value;
}

IndicatorField IndicatorField::constant(int n, bool inside) {
  IndicatorField field;
  field.n = n;
  const std::size_t size = static_cast<std::size_t>(n) * n * n;
  for (auto& e : field.edge) e.assign(size, inside ? 1 : 0);
  field.volume.assign(size, inside ? 1 : 0);
  return field;
}

double IndicatorField::volume_fill_fraction() const {
  if (volume.empty()) return 0.0;
  const auto count = std::count(volume.begin(), volume.end(), std::uint8_t{1});
  return static_cast<double>(count) / static_cast<double>(volume.size());
}

double gyroid(const Eigen::Vector3d& p) {
  const double x = kTwoPi * p.x();
  const double y = kTwoPi * p.y();
  const double z = kTwoPi * p.z();
  return std::sin(x) * std::cos(y) + std::sin(y) * std::cos(z) + std::sin(z) * std::cos(x);
}

namespace {

struct Box {
  Eigen::Vector3d lo;
  Eigen::Vector3d hi;

  bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  bool touches_unit_cell() const {
    return (hi.array() >= 0.0).all() && (lo.array() <= 1.0).all();
  }
};

struct Sphere {
  Eigen::Vector3d center;
  double radius;
  Box box;
};

// Segment with a radius: a capsule around [p0, p1].
struct Rod {
  Eigen::Vector3d p0;
  Eigen::Vector3d p1;
  double radius;
  Box box;
};

// Prolate spheroid given by its foci and minor semi-axis.
struct Spheroid {
  Eigen::Vector3d f0;
  Eigen::Vector3d f1;
  double major_sum;  // 2a
  Box box;
};

Box sphere_box(const Eigen::Vector3d& c, double r) {
  return {(c.array() - r).matrix(), (c.array() + r).matrix()};
}

Box segment_box(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double r) {
  return {(a.cwiseMin(b).array() - r).matrix(), (a.cwiseMax(b).array() + r).matrix()};
}

double point_segment_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                              const Eigen::Vector3d& b) {
  const Eigen::Vector3d ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

// Precomputed primitives covering the unit cube, including the periodic images
// of objects that poke in from neighbouring cells.
class MaterialPredicate {
 public:
  explicit MaterialPredicate(const GeometrySpec& spec) : kind_(spec.kind()) {
    switch (kind_) {
      case GeometryKind::ScCurv:
        build_sc_curv(spec.parameter("sphere_radius"), spec.parameter("cylinder_radius"));
        break;
      case GeometryKind::FccDiamond:
        build_fcc_diamond(spec.parameter("sphere_radius"), spec.parameter("spheroid_minor_radius"));
        break;
      case GeometryKind::BccSingleGyroid:
      case GeometryKind::BccDoubleGyroid:
        threshold_ = spec.parameter("threshold");
        break;
      case GeometryKind::Vacuum:
      case GeometryKind::Full:
        break;
    }
  }

  bool operator()(const Eigen::Vector3d& cartesian) const {
    switch (kind_) {
      case GeometryKind::Vacuum:
        return false;
      case GeometryKind::Full:
        return true;
      case GeometryKind::BccSingleGyroid:
        return gyroid(cartesian) > threshold_;
      case GeometryKind::BccDoubleGyroid:
        return std::abs(gyroid(cartesian)) > threshold_;
      case GeometryKind::ScCurv:
      case GeometryKind::FccDiamond:
        break;
    }
    const Eigen::Vector3d p = (cartesian.array() - cartesian.array().floor()).matrix();
    for (const auto& s : spheres_) {
      if (s.box.contains(p) && (p - s.center).norm() <= s.radius) return true;
    }
    for (const auto& r : rods_) {
      if (r.box.contains(p) && point_segment_distance(p, r.p0, r.p1) <= r.radius) return true;
    }
    for (const auto& s : spheroids_) {
      if (s.box.contains(p) && (p - s.f0).norm() + (p - s.f1).norm() <= s.major_sum) return true;
    }
    return false;
  }

 private:
  template <typename Fn>
  static void for_each_image(Fn&& fn) {
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) fn(Eigen::Vector3d(dx, dy, dz));
  }

  void add_sphere(const Eigen::Vector3d& c, double r) {
    for_each_image([&](const Eigen::Vector3d& shift) {
      const Box box = sphere_box(c + shift, r);
      if (box.touches_unit_cell()) spheres_.push_back({c + shift, r, box});
    });
  }

  void add_rod(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double r) {
    for_each_image([&](const Eigen::Vector3d& shift) {
      const Box box = segment_box(a + shift, b + shift, r);
      if (box.touches_unit_cell()) rods_.push_back({a + shift, b + shift, r, box});
    });
  }

  void add_spheroid(const Eigen::Vector3d& f0, const Eigen::Vector3d& f1, double minor) {
    const double c = 0.5 * (f1 - f0).norm();
    const double major = std::sqrt(minor * minor + c * c);
    for_each_image([&](const Eigen::Vector3d& shift) {
      const Box box = segment_box(f0 + shift, f1 + shift, major);
      if (box.touches_unit_cell()) spheroids_.push_back({f0 + shift, f1 + shift, 2.0 * major, box});
    });
  }

  // Sphere at the cell centre joined by four rods along the cube body diagonals.
  void build_sc_curv(double sphere_radius, double cylinder_radius) {
    add_sphere({0.5, 0.5, 0.5}, sphere_radius);
    add_rod({0, 0, 0}, {1, 1, 1}, cylinder_radius);
    add_rod({1, 0, 0}, {0, 1, 1}, cylinder_radius);
    add_rod({0, 1, 0}, {1, 0, 1}, cylinder_radius);
    add_rod({0, 0, 1}, {1, 1, 0}, cylinder_radius);
  }

  // Diamond structure in the conventional cube: FCC sites plus the (1/4,1/4,1/4)
  // sublattice, spheres on every site and spheroids on the tetrahedral bonds.
  void build_fcc_diamond(double sphere_radius, double minor_radius) {
    const std::array<Eigen::Vector3d, 4> fcc = {
        Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(0, 0.5, 0.5), Eigen::Vector3d(0.5, 0, 0.5),
        Eigen::Vector3d(0.5, 0.5, 0)};
    const std::array<Eigen::Vector3d, 4> bonds = {
        Eigen::Vector3d(0.25, 0.25, 0.25), Eigen::Vector3d(0.25, -0.25, -0.25),
        Eigen::Vector3d(-0.25, 0.25, -0.25), Eigen::Vector3d(-0.25, -0.25, 0.25)};
    for (const auto& site : fcc) {
      add_sphere(site, sphere_radius);
      add_sphere(site + bonds[0], sphere_radius);
      for (const auto& bond : bonds) add_spheroid(site, site + bond, minor_radius);
    }
  }

  GeometryKind kind_;
  double threshold_ = 0.0;
  std::vector<Sphere> spheres_;
  std::vector<Rod> rods_;
  std::vector<Spheroid> spheroids_;
};

}  // namespace

bool contains(const GeometrySpec& geometry, const Eigen::Vector3d& p) {
  return MaterialPredicate(geometry)(p);
}

IndicatorField rasterize_indicators(const GeometrySpec& geometry, const GridSpec& grid,
                                    const LatticeSpec& lattice) {
  const MaterialPredicate inside(geometry);
  const int n = grid.n;
  const double h = grid.h();

  IndicatorField field;
  field.n = n;
  for (auto& e : field.edge) e.resize(grid.cells());
  field.volume.resize(grid.cells());

  // Offsets (in units of h) of each DoF family from the zero-based index.
  const std::array<Eigen::Vector3d, 4> offsets = {
      Eigen::Vector3d(0.5, 1.0, 1.0), Eigen::Vector3d(1.0, 0.5, 1.0),
      Eigen::Vector3d(1.0, 1.0, 0.5), Eigen::Vector3d(0.5, 0.5, 0.5)};

  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const std::size_t idx = grid.index(i, j, k);
        const Eigen::Vector3d base(i, j, k);
        for (int f = 0; f < 4; ++f) {
          const Eigen::Vector3d frac = (base + offsets[f]) * h;
          const std::uint8_t value = inside(lattice.to_cartesian(frac)) ? 1 : 0;
          if (f < 3) {
            field.edge[f][idx] = value;
          } else {
            field.volume[idx] = value;
          }
        }
      }
    }
  }
  return field;
}

}  // namespace kcpc
