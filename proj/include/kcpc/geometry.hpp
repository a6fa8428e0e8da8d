#pragma once

#include "kcpc/lattice.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace kcpc {

/// Uniform grid with N divisions per fractional axis.
struct GridSpec {
  int n = 4;

  /// Throws ConfigError unless n >= 4 (keeps h < 1/pi).
  static GridSpec make(int n);

  double h() const { return 1.0 / n; }
  std::size_t cells() const { return static_cast<std::size_t>(n) * n * n; }
  /// Linear index with i (axis 1) fastest.
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(n) * (j + static_cast<std::size_t>(n) * k);
  }
};

enum class GeometryKind { ScCurv, FccDiamond, BccSingleGyroid, BccDoubleGyroid, Vacuum, Full };

std::string to_string(GeometryKind kind);
/// Accepts SC_CURV, FCC_DIAMOND (or FCC), BCC_SG, BCC_DG, VACUUM, FULL.
GeometryKind parse_geometry_kind(std::string_view name);

/**
 * Material subdomain description. Parameters start at the standard defaults:
 *
 *   SC_CURV      sphere_radius 0.345, cylinder_radius 0.11
 *   FCC_DIAMOND  sphere_radius 0.12, spheroid_minor_radius 0.11
 *   BCC_SG/DG    threshold 1.1
 *
 * Lengths are in Cartesian units of the conventional unit cube.
 */
class GeometrySpec {
 public:
  static GeometrySpec make(GeometryKind kind);

  GeometryKind kind() const { return kind_; }
  const std::map<std::string, double>& parameters() const { return params_; }
  double parameter(const std::string& name) const;
  /// Overrides a known parameter; unknown names or non-positive values throw ConfigError.
  void set_parameter(const std::string& name, double value);

 private:
  GeometryKind kind_ = GeometryKind::Vacuum;
  std::map<std::string, double> params_;
};

/// Edge-DoF indicators per axis plus the volume-DoF indicator, each length N^3.
struct IndicatorField {
  int n = 0;
  std::array<std::vector<std::uint8_t>, 3> edge;
  std::vector<std::uint8_t> volume;

  static IndicatorField constant(int n, bool inside);
  double volume_fill_fraction() const;
};

/// Gyroid level-set function, period 1 along each Cartesian axis.
double gyroid(const Eigen::Vector3d& p);

/// Membership of a Cartesian point in the material subdomain (coordinates taken modulo the cell).
bool contains(const GeometrySpec& geometry, const Eigen::Vector3d& p);

/**
 * Samples the geometry at the staggered DoF locations of the primitive cell:
 * x-edges at ((i+1/2)h, (j+1)h, (k+1)h), y-edges at ((i+1)h, (j+1/2)h, (k+1)h),
 * z-edges at ((i+1)h, (j+1)h, (k+1/2)h) and volumes at ((i+1/2)h, (j+1/2)h, (k+1/2)h)
 * for zero-based indices, each mapped to Cartesian space through the lattice vectors.
 */
IndicatorField rasterize_indicators(const GeometrySpec& geometry, const GridSpec& grid,
                                    const LatticeSpec& lattice);

}  // namespace kcpc
