#pragma once

#include "kcpc/geometry.hpp"
#include "kcpc/lattice.hpp"
#include "kcpc/types.hpp"

#include <array>
#include <memory>
#include <span>
#include <vector>

namespace kcpc {

enum class Space { Physical, Fourier };

/**
 * Three stacked N^3 scalar grids (x, y and z components), each laid out with
 * axis 1 fastest. The space tag records whether the values are grid samples or
 * unitary 3D DFT coefficients.
 */
class FieldVector {
 public:
  FieldVector() = default;
  FieldVector(int n, Space space);
  /// Throws ContractViolation unless values.size() == 3 n^3.
  FieldVector(int n, Space space, std::vector<cd> values);

  int n() const { return n_; }
  Space space() const { return space_; }
  std::size_t size() const { return data_.size(); }
  std::size_t grid_size() const { return data_.size() / 3; }

  std::span<cd> values() { return data_; }
  std::span<const cd> values() const { return data_; }
  std::span<cd> component(int c) { return values().subspan(c * grid_size(), grid_size()); }
  std::span<const cd> component(int c) const { return values().subspan(c * grid_size(), grid_size()); }

  cd& operator[](std::size_t i) { return data_[i]; }
  const cd& operator[](std::size_t i) const { return data_[i]; }

  double norm() const;

 private:
  int n_ = 0;
  Space space_ = Space::Physical;
  std::vector<cd> data_;
};

/// <u, v> with the conjugate on the first argument.
cd inner(std::span<const cd> u, std::span<const cd> v);
double norm(std::span<const cd> v);

/// Eigenvalues of the circulant matrix with the given first row: lambda_m = sum_j c_j w^(m j), w = exp(2 pi i / N).
std::vector<cd> circulant_symbols(std::span<const cd> first_row);

/// Diagonal symbols of the difference operators for one (N, k, lattice) triple.
struct FourierSymbolSet {
  int n = 0;
  WaveVector k;
  Eigen::Matrix3d b = Eigen::Matrix3d::Identity();
  double gamma = 1.0;
  /// Symbols of the 1D averaging (D0) and backward-difference (D1) circulants.
  std::vector<cd> lambda0;
  std::vector<cd> lambda1;
  /// Per-mode symbols of the three shifted derivative blocks.
  std::array<std::vector<cd>, 3> kappa;
  /// max over modes of |kappa|^2, used to scale the kernel threshold.
  double kappa_sq_max = 0.0;

  std::size_t modes() const { return kappa[0].size(); }
  double kappa_sq(std::size_t mode) const {
    return std::norm(kappa[0][mode]) + std::norm(kappa[1][mode]) + std::norm(kappa[2][mode]);
  }
  /// |kappa|^2 at or below this value is treated as an exact zero.
  double kernel_threshold() const { return 1e-28 * kappa_sq_max; }
  /// Smallest nonzero eigenvalue of the divergence penalty (min nonzero |kappa|^2).
  double min_nonzero_kappa_sq() const;
};

/**
 * Builds lambda0/lambda1 from the first rows (1/2)(1,0,..,0,1) and (1/h)(1,0,..,0,-1)
 * and assembles kappa_i(m) = sum_j b_ji lambda1(m_j) + i k_i lambda0(m_i) over the 3D
 * mode grid (mode index m_1 fastest).
 */
FourierSymbolSet build_symbols(const GridSpec& grid, const WaveVector& k, const LatticeSpec& lattice,
                               double gamma);

/**
 * Unitary 3D DFT applied to the three components of a field at once.
 * `forward` maps grid samples to coefficients (kernel exp(-2 pi i m j / N)),
 * `inverse` maps back; both scale by N^{-3/2}. Owns FFTW plans; one instance
 * must not be used from two threads at the same time.
 */
class Dft3 {
 public:
  explicit Dft3(int n);
  ~Dft3();
  Dft3(const Dft3&) = delete;
  Dft3& operator=(const Dft3&) = delete;
  Dft3(Dft3&&) noexcept;
  Dft3& operator=(Dft3&&) noexcept;

  int n() const;
  void forward(std::span<const cd> in, std::span<cd> out) const;
  void inverse(std::span<const cd> in, std::span<cd> out) const;

 private:
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

FieldVector dft3_forward(const FieldVector& v);
FieldVector dft3_inverse(const FieldVector& v);

// Per-mode block kernels on Fourier-space data of length 3 N^3. `in` and `out` may alias.

/// Cross-product structured curl symbol (adjoint = conjugate transpose per mode).
void apply_ka(const FourierSymbolSet& sym, std::span<const cd> in, std::span<cd> out, bool adjoint);
/// Rank-one divergence penalty conj(kappa) kappa^T.
void apply_kb(const FourierSymbolSet& sym, std::span<const cd> in, std::span<cd> out);
/// Preconditioner matrix |kappa|^2 I + (gamma - 1) conj(kappa) kappa^T.
void apply_kp(const FourierSymbolSet& sym, std::span<const cd> in, std::span<cd> out);
/// Closed-form inverse of apply_kp; modes on the numerical kernel pass through unchanged.
void apply_precond(const FourierSymbolSet& sym, std::span<const cd> in, std::span<cd> out);

FieldVector apply_KA(const FourierSymbolSet& sym, const FieldVector& v, bool adjoint);
FieldVector apply_KB(const FourierSymbolSet& sym, const FieldVector& v);
FieldVector apply_KP(const FourierSymbolSet& sym, const FieldVector& v);
FieldVector apply_precond(const FourierSymbolSet& sym, const FieldVector& v);

}  // namespace kcpc
