#pragma once

#include "kcpc/geometry.hpp"
#include "kcpc/lattice.hpp"
#include "kcpc/permittivity.hpp"
#include "kcpc/spectral.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kcpc {

/// Support of the seeded random starting block: the block-size lowest-|kappa| Fourier modes, or every entry.
enum class InitialGuess { LowModes, Random };

std::string to_string(InitialGuess guess);
/// Accepts lowmodes or random.
InitialGuess parse_initial_guess(std::string_view name);

struct SolverConfig {
  int num_eigenpairs = 6;
  double tol = 1e-5;
  int max_iter = 500;
  /// 0 selects num_eigenpairs + 5.
  int block_size = 0;
  std::optional<double> gamma_override;
  std::uint64_t seed = 0;
  InitialGuess initial_guess = InitialGuess::LowModes;

  int effective_block_size() const { return block_size > 0 ? block_size : num_eigenpairs + 5; }
  /// Throws ConfigError on m < 1, tol <= 0, max_iter < 1, block size < m or a non-positive gamma.
  void validate() const;
};

struct EigenResult {
  /// Ascending discrete eigenvalues omega_h^2.
  std::vector<double> omega_sq;
  std::vector<FieldVector> vectors;
  /// ||(A M A^H + gamma B^H B) x - omega^2 x|| / ||x|| per pair.
  std::vector<double> residuals;
  int iterations = 0;
  bool converged = false;
  double gamma_used = 0.0;
  int nullspace_dim = 0;
  /// Residuals of the wanted pairs after every iteration (row 0 is the initial block).
  std::vector<std::vector<double>> residual_history;
  /// Wanted Ritz values after every iteration.
  std::vector<std::vector<double>> ritz_history;
  std::vector<std::string> warnings;
};

/// 4 pi^2 for k = 0 or ||k|| > 1, 4 pi^2 / ||k||^2 for 0 < ||k|| <= 1.
double choose_gamma(const WaveVector& k);

/// Orthonormal deflation basis: the three zero-mode unit vectors when k is exactly zero, empty otherwise.
struct NullSpaceBasis {
  int dim = 0;
  std::vector<FieldVector> vectors;
};

NullSpaceBasis null_space(const WaveVector& k, const GridSpec& grid);

/**
 * The penalized operator K_A F^H M F K_A^H + gamma K_B in Fourier space, with
 * its preconditioner. Owns one DFT plan set and two work buffers, so a single
 * instance must not be shared between threads.
 */
class SystemOperator {
 public:
  SystemOperator(const FourierSymbolSet& symbols, const PermittivityOperator& permittivity);

  std::size_t size() const { return 3 * symbols_.modes(); }
  const FourierSymbolSet& symbols() const { return symbols_; }

  /// y = A x; x and y must not overlap.
  void apply(std::span<const cd> x, std::span<cd> y);
  /// w = K_P^{-1} r.
  void precondition(std::span<const cd> r, std::span<cd> w) const;

 private:
  const FourierSymbolSet& symbols_;
  const PermittivityOperator& permittivity_;
  Dft3 dft_;
  std::vector<cd> work_a_;
  std::vector<cd> work_b_;
};

FieldVector apply_system(const FourierSymbolSet& symbols, const PermittivityOperator& permittivity,
                         const FieldVector& x);

/**
 * Block LOBPCG with soft locking for the smallest cfg.num_eigenpairs eigenpairs.
 * Every trial vector is kept orthogonal to `deflation`.
 */
EigenResult lobpcg(const FourierSymbolSet& symbols, const PermittivityOperator& permittivity,
                   const SolverConfig& cfg, const NullSpaceBasis& deflation);

/// Picks gamma (or the override), builds symbols and the null space, and runs lobpcg.
EigenResult solve_at(const GridSpec& grid, const LatticeSpec& lattice, const WaveVector& k,
                     const PermittivityOperator& permittivity, const SolverConfig& cfg);

}  // namespace kcpc
