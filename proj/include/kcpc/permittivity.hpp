#pragma once

#include "kcpc/geometry.hpp"
#include "kcpc/spectral.hpp"
#include "kcpc/types.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kcpc {

enum class PermittivityMode { Diagonal, Trivial, CrossDoF };

std::string to_string(PermittivityMode mode);
/// Accepts diagonal, trivial, crossdof (case-insensitive).
PermittivityMode parse_permittivity_mode(std::string_view name);

/// Inverse relative permittivity inside the material, a 3x3 Hermitian matrix.
class PermittivityTensor {
 public:
  PermittivityTensor() = default;
  /// Throws ConfigError unless eps is Hermitian to 1e-14 (relative) and finite.
  explicit PermittivityTensor(const Eigen::Matrix3cd& eps);

  const Eigen::Matrix3cd& matrix() const { return eps_; }
  cd operator()(int i, int j) const { return eps_(i, j); }
  /// Ascending eigenvalues.
  Eigen::Vector3d eigenvalues() const;
  bool is_diagonal() const;

 private:
  Eigen::Matrix3cd eps_ = Eigen::Matrix3cd::Identity();
};

/**
 * (1/eps_lattice) [[sqrt(1+beta^2), -i|beta|, 0], [i|beta|, sqrt(1+beta^2), 0], [0, 0, 1]].
 * Warns when eps_lattice < 1; throws ConfigError when it is not positive.
 */
PermittivityTensor pseudochiral_tensor(double eps_lattice, double beta);

struct HpdReport {
  bool assumption_eigen = false;         // spectrum inside (0, 1]
  bool assumption_sdd = false;           // strictly diagonally dominant rows
  bool assumption_zero_offdiag = false;  // some upper off-diagonal entry is exactly zero
  bool guaranteed_trivial = false;
  bool guaranteed_crossdof = false;
  /// lambda_min of eps1 with its diagonal clipped to min(eps_ii, 1).
  double lambda_min_bound = 0.0;
};

HpdReport hpd_report(const PermittivityTensor& tensor);

/// Off-diagonal block pairs (i, j) with i < j.
enum class AxisPair { P12, P13, P23 };

/**
 * Four-point average that carries component-j edge values to component-i edge
 * locations: D0 (x_p + x_{p-1})/2 along axis i and D0^T (x_p + x_{p+1})/2 along
 * axis j, periodic. `transpose` applies T^T instead.
 */
std::vector<cd> transfer_T(AxisPair pair, int n, std::span<const cd> v, bool transpose);

/**
 * Discrete permittivity M acting on physical edge fields. Diagonal blocks are
 * (eps_ii - 1) I_i + 1. Off-diagonal blocks are eps_ij I_V (Trivial) or the
 * symmetrized transfers eps_ij (I_i T_ij + T_ij I_j)/2 (CrossDoF), with the
 * conjugate transposes below the diagonal.
 */
class PermittivityOperator {
 public:
  /// Throws ConfigError for Diagonal mode with nonzero off-diagonal entries.
  PermittivityOperator(PermittivityTensor tensor, IndicatorField indicators, PermittivityMode mode);

  static PermittivityOperator vacuum(int n);

  int n() const { return indicators_.n; }
  PermittivityMode mode() const { return mode_; }
  const PermittivityTensor& tensor() const { return tensor_; }
  const IndicatorField& indicators() const { return indicators_; }

  /// out = M in; the spans must not overlap.
  void apply(std::span<const cd> in, std::span<cd> out) const;

 private:
  PermittivityTensor tensor_;
  IndicatorField indicators_;
  PermittivityMode mode_;
};

FieldVector apply_M(const PermittivityOperator& op, const FieldVector& v);

}  // namespace kcpc
