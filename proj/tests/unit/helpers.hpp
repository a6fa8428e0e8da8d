#pragma once

#include "kcpc/geometry.hpp"
#include "kcpc/oracle.hpp"
#include "kcpc/spectral.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/QR>

#include <random>
#include <vector>

namespace test {

using kcpc::cd;

inline std::vector<cd> random_values(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<cd> v(n);
  for (auto& x : v) x = {g(rng), g(rng)};
  return v;
}

inline kcpc::FieldVector random_field(int n, kcpc::Space space, std::mt19937_64& rng) {
  return kcpc::FieldVector(n, space, random_values(3 * static_cast<std::size_t>(n) * n * n, rng));
}

inline Eigen::VectorXcd to_eigen(std::span<const cd> v) {
  return Eigen::Map<const Eigen::VectorXcd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline double max_abs_diff(std::span<const cd> a, std::span<const cd> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline kcpc::WaveVector random_k(std::mt19937_64& rng, double bound) {
  std::uniform_real_distribution<double> u(-bound, bound);
  return kcpc::WaveVector(u(rng), u(rng), u(rng));
}

/// Plain cross product; Eigen's cross conjugates complex results.
inline Eigen::Vector3cd cross(const Eigen::Vector3cd& a, const Eigen::Vector3cd& b) {
  return {a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0)};
}

/// Unitary 3D DFT blocks for the three field components: physical = U * fourier.
inline kcpc::oracle::Dense field_dft(int n) {
  const auto f = kcpc::oracle::dft3_matrix(n);
  const Eigen::Index s = f.rows();
  kcpc::oracle::Dense u = kcpc::oracle::Dense::Zero(3 * s, 3 * s);
  for (int c = 0; c < 3; ++c) u.block(c * s, c * s, s, s) = f;
  return u;
}

inline kcpc::IndicatorField random_indicators(int n, std::mt19937_64& rng) {
  kcpc::IndicatorField f = kcpc::IndicatorField::constant(n, false);
  std::bernoulli_distribution b(0.5);
  for (auto& e : f.edge) {
    for (auto& x : e) x = b(rng);
  }
  for (auto& x : f.volume) x = b(rng);
  return f;
}

/// Random Hermitian 3x3 matrix with spectrum drawn from [lo, hi].
inline Eigen::Matrix3cd random_hermitian(std::mt19937_64& rng, double lo, double hi) {
  std::normal_distribution<double> g;
  Eigen::Matrix3cd z;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) z(i, j) = {g(rng), g(rng)};
  }
  Eigen::HouseholderQR<Eigen::Matrix3cd> qr(z);
  const Eigen::Matrix3cd q = qr.householderQ();
  std::uniform_real_distribution<double> u(lo, hi);
  const Eigen::Vector3d d(u(rng), u(rng), u(rng));
  Eigen::Matrix3cd m = q * d.cast<cd>().asDiagonal() * q.adjoint();
  return (m + m.adjoint()) / 2.0;
}

}  // namespace test
