#include "kcpc/solver.hpp"

#include "kcpc/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace kcpc {

std::string to_string(InitialGuess guess) {
  return guess == InitialGuess::LowModes ? "lowmodes" : "random";
}

InitialGuess parse_initial_guess(std::string_view name) {
  if (name == "lowmodes") return InitialGuess::LowModes;
  if (name == "random") return InitialGuess::Random;
  throw ConfigError("unknown initial guess '" + std::string(name) + "' (expected lowmodes or random)");
}

void SolverConfig::validate() const {
  if (num_eigenpairs < 1) throw ConfigError("solver.num_eigenpairs must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("solver.tol must be positive");
  if (max_iter < 1) throw ConfigError("solver.max_iter must be >= 1");
  if (effective_block_size() < num_eigenpairs) {
    throw ConfigError("solver.block_size must be >= solver.num_eigenpairs");
  }
  if (gamma_override && !(*gamma_override > 0.0 && std::isfinite(*gamma_override))) {
    throw ConfigError("solver.gamma must be positive");
  }
}

double choose_gamma(const WaveVector& k) {
  if (!k.is_finite()) throw ConfigError("wave vector must be finite");
  const double norm = k.norm();
  const double base = 4.0 * kPi * kPi;
  if (norm == 0.0 || norm > 1.0) return base;
  return base / (norm * norm);
}

NullSpaceBasis null_space(const WaveVector& k, const GridSpec& grid) {
  NullSpaceBasis basis;
  if (!k.is_zero()) return basis;
  basis.dim = 3;
  for (int c = 0; c < 3; ++c) {
    FieldVector v(grid.n, Space::Fourier);
    v[c * grid.cells()] = 1.0;
    basis.vectors.push_back(std::move(v));
  }
  return basis;
}

SystemOperator::SystemOperator(const FourierSymbolSet& symbols, const PermittivityOperator& permittivity)
    : symbols_(symbols),
      permittivity_(permittivity),
      dft_(symbols.n),
      work_a_(3 * symbols.modes()),
      work_b_(3 * symbols.modes()) {
  if (permittivity.n() != symbols.n) {
    throw ContractViolation("permittivity grid does not match the symbol set");
  }
}

void SystemOperator::apply(std::span<const cd> x, std::span<cd> y) {
  apply_ka(symbols_, x, work_a_, true);
  dft_.inverse(work_a_, work_b_);
  permittivity_.apply(work_b_, work_a_);
  dft_.forward(work_a_, work_a_);
  apply_ka(symbols_, work_a_, y, false);

  const std::size_t n3 = symbols_.modes();
  const double gamma = symbols_.gamma;
  for (std::size_t m = 0; m < n3; ++m) {
    const cd a1 = symbols_.kappa[0][m], a2 = symbols_.kappa[1][m], a3 = symbols_.kappa[2][m];
    const cd s = gamma * (a1 * x[m] + a2 * x[n3 + m] + a3 * x[2 * n3 + m]);
    y[m] += std::conj(a1) * s;
    y[n3 + m] += std::conj(a2) * s;
    y[2 * n3 + m] += std::conj(a3) * s;
  }
}

void SystemOperator::precondition(std::span<const cd> r, std::span<cd> w) const {
  apply_precond(symbols_, r, w);
}

FieldVector apply_system(const FourierSymbolSet& symbols, const PermittivityOperator& permittivity,
                         const FieldVector& x) {
  if (x.space() != Space::Fourier) throw ContractViolation("apply_system expects a Fourier field");
  SystemOperator op(symbols, permittivity);
  FieldVector y(x.n(), Space::Fourier);
  op.apply(x.values(), y.values());
  return y;
}

namespace {

using Block = Eigen::MatrixXcd;
using Index = Eigen::Index;

std::span<const cd> column(const Block& b, Index j) {
  return {b.data() + j * b.rows(), static_cast<std::size_t>(b.rows())};
}
std::span<cd> column(Block& b, Index j) { return {b.data() + j * b.rows(), static_cast<std::size_t>(b.rows())}; }

Block apply_block(SystemOperator& op, const Block& x) {
  Block y(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) op.apply(column(x, j), column(y, j));
  return y;
}

void project_out(Block& v, const Block& q) {
  if (q.cols() == 0 || v.cols() == 0) return;
  v -= q * (q.adjoint() * v);
}

// Orthonormalizes the columns of v (and applies the same map to av), dropping
// directions whose Gram eigenvalue is below drop_tol times the largest. With
// scale=false the columns are taken as they are and drop_tol is absolute, so
// columns that lost most of their norm to earlier projections are caught.
// Returns the smallest Gram eigenvalue kept.
double svqb(Block& v, Block* av, double drop_tol, bool scale = true) {
  if (v.cols() == 0) return 0.0;
  Eigen::MatrixXcd g = v.adjoint() * v;
  g = (0.5 * (g + g.adjoint())).eval();
  Eigen::VectorXd dinv = Eigen::VectorXd::Ones(g.rows());
  for (Index i = 0; scale && i < g.rows(); ++i) {
    const double d = g(i, i).real();
    dinv(i) = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  const Eigen::MatrixXcd scaled = dinv.asDiagonal() * g * dinv.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(scaled);
  const Eigen::VectorXd& theta = es.eigenvalues();
  const double theta_max = theta.size() ? theta.maxCoeff() : 0.0;
  const double floor = scale ? drop_tol * theta_max : drop_tol;
  std::vector<Index> keep;
  double smallest = 0.0;
  for (Index i = 0; i < theta.size(); ++i) {
    if (theta_max > 0.0 && theta(i) > floor) {
      if (keep.empty()) smallest = theta(i);
      keep.push_back(i);
    }
  }
  Eigen::MatrixXcd t(g.rows(), static_cast<Index>(keep.size()));
  for (Index c = 0; c < t.cols(); ++c) {
    t.col(c) = dinv.asDiagonal() * es.eigenvectors().col(keep[c]) / std::sqrt(theta(keep[c]));
  }
  v = v * t;
  if (av) *av = *av * t;
  return smallest;
}

void normalize_columns(Block& v, Block& av) {
  for (Index j = 0; j < v.cols(); ++j) {
    const double nrm = v.col(j).norm();
    if (nrm > 0.0) {
      v.col(j) /= nrm;
      av.col(j) /= nrm;
    }
  }
}

// Removes the X and deflation components from v (and the matching parts of av).
void orthogonalize_against(Block& v, Block* av, const Block& x, const Block* ax, const Block& q) {
  if (v.cols() == 0) return;
  project_out(v, q);
  if (x.cols() > 0) {
    const Eigen::MatrixXcd c = x.adjoint() * v;
    v -= x * c;
    if (av && ax) *av -= *ax * c;
  }
}

Block random_block(Index rows, Index cols, std::uint64_t seed) {
  // Raw 64-bit draws mapped by hand keep the sequence identical across standard libraries.
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
  Block b(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      const double re = uniform();
      b(i, j) = cd(re, uniform());
    }
  }
  return b;
}

// Zeroes every row outside the `modes` Fourier modes of smallest |kappa|^2 (all three components kept).
void restrict_to_low_modes(Block& x, const FourierSymbolSet& symbols, Index modes) {
  const std::size_t n3 = symbols.modes();
  std::vector<std::size_t> order(n3);
  for (std::size_t i = 0; i < n3; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return symbols.kappa_sq(a) < symbols.kappa_sq(b);
  });
  std::vector<bool> keep(n3, false);
  for (std::size_t i = 0; i < std::min<std::size_t>(modes, n3); ++i) keep[order[i]] = true;
  for (std::size_t mode = 0; mode < n3; ++mode) {
    if (keep[mode]) continue;
    for (int c = 0; c < 3; ++c) x.row(static_cast<Index>(c * n3 + mode)).setZero();
  }
}

bool hpd_guaranteed(const PermittivityOperator& permittivity) {
  const HpdReport report = hpd_report(permittivity.tensor());
  return permittivity.mode() == PermittivityMode::CrossDoF ? report.guaranteed_crossdof
                                                           : report.guaranteed_trivial;
}

}  // namespace

EigenResult lobpcg(const FourierSymbolSet& symbols, const PermittivityOperator& permittivity,
                   const SolverConfig& cfg, const NullSpaceBasis& deflation) {
  cfg.validate();
  const Index n = static_cast<Index>(3 * symbols.modes());
  const Index m = cfg.num_eigenpairs;
  const Index free_dim = n - deflation.dim;
  if (m > free_dim) throw ConfigError("more eigenpairs requested than the problem size allows");
  const Index nb = std::min<Index>(cfg.effective_block_size(), free_dim);
  constexpr double kDropTol = 1e-12;
  constexpr double kPDropTol = 1e-20;
  constexpr double kPRefresh = 1e-4;
  constexpr int kRefreshEvery = 20;

  EigenResult result;
  result.gamma_used = symbols.gamma;
  result.nullspace_dim = deflation.dim;
  auto warn = [&](const std::string& msg) {
    result.warnings.push_back(msg);
    emit_warning(msg);
  };

  if (!hpd_guaranteed(permittivity)) {
    warn("permittivity tensor does not satisfy the assumptions that guarantee a positive definite "
         "operator in mode " + to_string(permittivity.mode()));
  }

  Block q(n, deflation.dim);
  for (int i = 0; i < deflation.dim; ++i) {
    const FieldVector& v = deflation.vectors.at(i);
    if (static_cast<Index>(v.size()) != n || v.space() != Space::Fourier) {
      throw ContractViolation("deflation vector does not match the problem");
    }
    std::copy(v.values().begin(), v.values().end(), q.col(i).data());
  }

  SystemOperator op(symbols, permittivity);

  Block x = random_block(n, nb, cfg.seed);
  if (cfg.initial_guess == InitialGuess::LowModes) restrict_to_low_modes(x, symbols, nb);
  for (int pass = 0; pass < 2; ++pass) {
    project_out(x, q);
    svqb(x, nullptr, kDropTol);
  }
  if (x.cols() < nb) throw std::runtime_error("initial block is rank deficient");
  Block ax = apply_block(op, x);

  Eigen::VectorXd lambda;
  auto rayleigh_ritz_on_x = [&] {
    Eigen::MatrixXcd g = x.adjoint() * ax;
    g = (0.5 * (g + g.adjoint())).eval();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g);
    x = x * es.eigenvectors();
    ax = ax * es.eigenvectors();
    lambda = es.eigenvalues();
  };
  rayleigh_ritz_on_x();

  Block w, aw, p, ap;
  std::vector<double> res(nb, 0.0);
  bool fresh = true;  // ax was produced by explicit operator applications
  int iter = 0;

  for (;;) {
    Block r = ax - x * lambda.asDiagonal();
    for (Index j = 0; j < nb; ++j) res[j] = r.col(j).norm() / x.col(j).norm();
    result.residual_history.emplace_back(res.begin(), res.begin() + m);
    result.ritz_history.emplace_back(lambda.data(), lambda.data() + m);

    const bool wanted_done = std::all_of(res.begin(), res.begin() + m, [&](double v) { return v <= cfg.tol; });
    if (wanted_done) {
      if (fresh) {
        result.converged = true;
        break;
      }
      // Confirm with residuals from explicit applications before accepting.
      ax = apply_block(op, x);
      for (Index j = 0; j < nb; ++j) {
        lambda(j) = x.col(j).dot(ax.col(j)).real() / x.col(j).squaredNorm();
      }
      fresh = true;
      result.residual_history.pop_back();
      result.ritz_history.pop_back();
      continue;
    }
    if (iter >= cfg.max_iter) break;
    ++iter;
    fresh = false;

    std::vector<Index> active;
    for (Index j = 0; j < nb; ++j) {
      if (res[j] > cfg.tol) active.push_back(j);
    }

    w.resize(n, static_cast<Index>(active.size()));
    for (Index c = 0; c < w.cols(); ++c) op.precondition(column(r, active[c]), column(w, c));
    r.resize(0, 0);
    for (int pass = 0; pass < 2; ++pass) {
      orthogonalize_against(w, nullptr, x, nullptr, q);
      svqb(w, nullptr, kDropTol);
    }
    if (w.cols() == 0) {
      std::ostringstream msg;
      msg << "search directions collapsed at iteration " << iter << "; stopping";
      warn(msg.str());
      break;
    }
    aw = apply_block(op, w);

    if (p.cols() > 0) {
      normalize_columns(p, ap);
      for (int pass = 0; pass < 2; ++pass) {
        orthogonalize_against(p, &ap, x, &ax, q);
        orthogonalize_against(p, &ap, w, &aw, Block(n, 0));
      }
      // AP is updated by subtraction above; once P has shrunk a lot the
      // cancellation error dominates and AP is recomputed.
      const double kept = svqb(p, &ap, kPDropTol, false);
      if (p.cols() > 0 && kept < kPRefresh) ap = apply_block(op, p);
    }

    const Index nx = x.cols(), nw = w.cols(), np = p.cols();
    const Index dim = nx + nw + np;
    Eigen::MatrixXcd g(dim, dim);
    g.block(0, 0, nx, nx) = x.adjoint() * ax;
    g.block(0, nx, nx, nw) = x.adjoint() * aw;
    g.block(nx, nx, nw, nw) = w.adjoint() * aw;
    if (np > 0) {
      g.block(0, nx + nw, nx, np) = x.adjoint() * ap;
      g.block(nx, nx + nw, nw, np) = w.adjoint() * ap;
      g.block(nx + nw, nx + nw, np, np) = p.adjoint() * ap;
    }
    for (Index i = 0; i < dim; ++i) {
      for (Index j = 0; j < i; ++j) g(i, j) = std::conj(g(j, i));
      g(i, i) = g(i, i).real();
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g);
    const Eigen::MatrixXcd c = es.eigenvectors().leftCols(nb);
    lambda = es.eigenvalues().head(nb);

    Eigen::MatrixXcd c_active(dim, static_cast<Index>(active.size()));
    for (Index k = 0; k < c_active.cols(); ++k) c_active.col(k) = c.col(active[k]);

    Block p_new = w * c_active.middleRows(nx, nw);
    Block ap_new = aw * c_active.middleRows(nx, nw);
    if (np > 0) {
      p_new += p * c_active.bottomRows(np);
      ap_new += ap * c_active.bottomRows(np);
    }
    Block x_new = x * c.topRows(nx) + w * c.middleRows(nx, nw);
    Block ax_new = ax * c.topRows(nx) + aw * c.middleRows(nx, nw);
    if (np > 0) {
      x_new += p * c.bottomRows(np);
      ax_new += ap * c.bottomRows(np);
    }
    x = std::move(x_new);
    ax = std::move(ax_new);
    p = std::move(p_new);
    ap = std::move(ap_new);
    w.resize(0, 0);
    aw.resize(0, 0);

    // Keep X orthonormal and AX honest against slow drift.
    const double ortho_err = (x.adjoint() * x - Eigen::MatrixXcd::Identity(nb, nb)).cwiseAbs().maxCoeff();
    if (ortho_err > 1e-10 || iter % kRefreshEvery == 0) {
      if (ortho_err > 1e-10) svqb(x, nullptr, 0.0);
      ax = apply_block(op, x);
      rayleigh_ritz_on_x();
      fresh = true;
    }
  }

  result.iterations = iter;
  for (Index j = 0; j < m; ++j) {
    result.omega_sq.push_back(lambda(j));
    result.residuals.push_back(res[j]);
    std::vector<cd> values(x.col(j).data(), x.col(j).data() + n);
    result.vectors.emplace_back(symbols.n, Space::Fourier, std::move(values));
  }
  if (!result.converged) {
    std::ostringstream msg;
    msg << "LOBPCG stopped after " << iter << " iterations without reaching tol " << cfg.tol;
    warn(msg.str());
  }
  const double lambda1_b = symbols.min_nonzero_kappa_sq();
  if (std::isfinite(lambda1_b) && result.omega_sq.back() >= symbols.gamma * lambda1_b) {
    warn("computed eigenvalues reach gamma * lambda_1(B^H B); the window may contain penalized "
         "divergence modes");
  }
  return result;
}

EigenResult solve_at(const GridSpec& grid, const LatticeSpec& lattice, const WaveVector& k,
                     const PermittivityOperator& permittivity, const SolverConfig& cfg) {
  cfg.validate();
  const double gamma = cfg.gamma_override ? *cfg.gamma_override : choose_gamma(k);
  const FourierSymbolSet symbols = build_symbols(grid, k, lattice, gamma);
  return lobpcg(symbols, permittivity, cfg, null_space(k, grid));
}

}  // namespace kcpc
