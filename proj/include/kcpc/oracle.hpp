#pragma once

#include "kcpc/geometry.hpp"
#include "kcpc/lattice.hpp"
#include "kcpc/permittivity.hpp"
#include "kcpc/types.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <utility>
#include <vector>

// Dense reference matrices for small grids. Everything here is assembled
// straight from the Kronecker definitions and shares no code with the
// matrix-free path beyond the input types.
namespace kcpc::oracle {

using Dense = Eigen::MatrixXcd;

/// Largest grid the dense assembly accepts.
inline constexpr int kMaxN = 10;

/// C_ij = c_{(j - i) mod N}.
Dense circulant(std::span<const cd> first_row);
/// (1/2) circulant (1, 0, ..., 0, 1).
Dense averaging(int n);
/// (1/h) circulant (1, 0, ..., 0, -1).
Dense backward_difference(int n);
Dense kron(const Dense& a, const Dense& b);
/// I (x) I (x) d for axis 0 (fastest index), I (x) d (x) I for axis 1, d (x) I (x) I for axis 2.
Dense on_axis(const Dense& d, int axis);
/// F_jm = w^{jm} / sqrt(N), w = exp(2 pi i / N).
Dense dft_matrix(int n);
/// F (x) F (x) F.
Dense dft3_matrix(int n);

/// Shifted derivative block i: sum_j b_ji D1 on axis j + i k_i D0 on axis i.
Dense shifted_block(int axis, int n, const WaveVector& k, const LatticeSpec& lattice);
/// Four-point transfer T_ij (or its transpose) as a Kronecker product.
Dense transfer_matrix(AxisPair pair, int n, bool transpose);
Dense permittivity_matrix(const PermittivityOperator& op);

struct DenseOperatorSet {
  int n = 0;
  WaveVector k;
  LatticeSpec lattice;
  double gamma = 0.0;
  Dense a;  // curl, 3N^3 x 3N^3
  Dense b;  // divergence, N^3 x 3N^3
  Dense m;  // permittivity, 3N^3 x 3N^3
  std::vector<Dense> d;  // the three shifted blocks

  /// A M A^H + gamma B^H B (or without the penalty).
  Dense system(bool penalized = true) const;
};

/// Throws ConfigError when N exceeds kMaxN.
DenseOperatorSet assemble_dense(const GridSpec& grid, const WaveVector& k, const LatticeSpec& lattice,
                                const PermittivityOperator& permittivity, double gamma);

/// Ascending eigenvalues of a Hermitian matrix (LAPACK zheevd).
Eigen::VectorXd hermitian_eigenvalues(const Dense& h);
Eigen::VectorXd dense_spectrum(const DenseOperatorSet& set, bool penalized);

/// Closed-form eigenvalues mu_j of K^H K for K = D1 + i k D0 (unsorted, j = 0..N-1).
std::vector<double> mu_closed_form(int n, double k);
/// Max deviation between the dense spectra of K_i^H K_i and the closed form over the three axes (A = I).
double verify_mu_formula(const GridSpec& grid, const WaveVector& k);

/// Number of eigenvalues with |lambda| <= tol * max |lambda|.
int kernel_dimension(const Eigen::VectorXd& eigenvalues, double tol);

struct VerifyReport {
  std::string name;
  bool pass = false;
  std::vector<std::pair<std::string, double>> deviations;
  std::vector<std::pair<std::string, double>> tolerances;
};

/// Names accepted by run_case.
std::vector<std::string> case_names();
/// Runs one named dense check at (N, k). Unknown names throw ConfigError.
VerifyReport run_case(const std::string& name, int n, const WaveVector& k);

}  // namespace kcpc::oracle
