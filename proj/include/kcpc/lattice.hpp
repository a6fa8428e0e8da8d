#pragma once

#include <Eigen/Core>

#include <string>
#include <string_view>
#include <vector>

namespace kcpc {

enum class LatticeFamily { SC, FCC, BCC };

std::string to_string(LatticeFamily family);

/// Parses "SC", "FCC" or "BCC" (case-insensitive). Throws ConfigError otherwise.
LatticeFamily parse_lattice_family(std::string_view name);

/**
 * Primitive cell of a cubic lattice with unit lattice constant.
 *
 * Columns of `a` are the primitive vectors a1, a2, a3. `b` is the inverse of
 * `a`; its entries b_ij weight the fractional-coordinate derivatives that make
 * up the Cartesian gradient, d/dx_i = sum_j b_ji d/dy_j.
 */
struct LatticeSpec {
  LatticeFamily family = LatticeFamily::SC;
  Eigen::Matrix3d a = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d b = Eigen::Matrix3d::Identity();

  /// Maps fractional coordinates of the primitive cell to Cartesian space.
  Eigen::Vector3d to_cartesian(const Eigen::Vector3d& fractional) const { return a * fractional; }
};

LatticeSpec build_lattice(LatticeFamily family);

/// Bloch wave vector in Cartesian components (radians per unit length).
struct WaveVector {
  Eigen::Vector3d k = Eigen::Vector3d::Zero();

  WaveVector() = default;
  WaveVector(double k1, double k2, double k3) : k(k1, k2, k3) {}
  explicit WaveVector(const Eigen::Vector3d& v) : k(v) {}

  double operator[](int i) const { return k[i]; }
  double norm() const { return k.norm(); }
  double max_abs() const { return k.cwiseAbs().maxCoeff(); }
  bool is_zero() const { return k.isZero(0.0); }
  bool is_finite() const { return k.allFinite(); }

  friend bool operator==(const WaveVector& lhs, const WaveVector& rhs) { return lhs.k == rhs.k; }
};

struct SymmetryPoint {
  std::string label;
  WaveVector k;
};

/// Labeled Brillouin-zone points of a family, in table order.
std::vector<SymmetryPoint> symmetry_points(LatticeFamily family);

/**
 * Resolves an anchor name such as "FCC:W", "SC:Γ" or a bare "L" (using
 * `default_family`). "Gamma" and "G" are accepted for Γ, "H'" for H′.
 * Throws ConfigError for unknown labels.
 */
SymmetryPoint resolve_symmetry_point(std::string_view name, LatticeFamily default_family);

/// Piecewise-linear path through anchors; anchors appear exactly once each.
struct KPath {
  std::vector<SymmetryPoint> anchors;
  int segments_per_edge = 1;
  std::vector<WaveVector> points;
  /// Position of each anchor inside `points`.
  std::vector<std::size_t> anchor_indices;

  /// Anchor label at point `index`, or an empty string for interpolated points.
  std::string label_at(std::size_t index) const;
};

KPath build_kpath(const std::vector<SymmetryPoint>& anchors, int segments_per_edge);
KPath build_kpath(const std::vector<WaveVector>& anchors, int segments_per_edge);

}  // namespace kcpc
