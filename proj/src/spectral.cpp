#include "kcpc/spectral.hpp"

#include "kcpc/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

namespace kcpc {

FieldVector::FieldVector(int n, Space space)
    : n_(n), space_(space), data_(3 * static_cast<std::size_t>(n) * n * n) {}

FieldVector::FieldVector(int n, Space space, std::vector<cd> values)
    : n_(n), space_(space), data_(std::move(values)) {
  if (data_.size() != 3 * static_cast<std::size_t>(n) * n * n) {
    throw ContractViolation("FieldVector needs 3 N^3 values");
  }
}

double FieldVector::norm() const { return kcpc::norm(data_); }

cd inner(std::span<const cd> u, std::span<const cd> v) {
  if (u.size() != v.size()) throw ContractViolation("inner product of vectors with different lengths");
  cd sum{0.0, 0.0};
  for (std::size_t i = 0; i < u.size(); ++i) sum += std::conj(u[i]) * v[i];
  return sum;
}

double norm(std::span<const cd> v) {
  double sum = 0.0;
  for (const cd& x : v) sum += std::norm(x);
  return std::sqrt(sum);
}

std::vector<cd> circulant_symbols(std::span<const cd> first_row) {
  const std::size_t n = first_row.size();
  std::vector<cd> lambda(n, cd{0.0, 0.0});
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t j = 0; j < n; ++j) {
      if (first_row[j] == cd{0.0, 0.0}) continue;
      // Reduce the exponent first so large m*j does not lose phase accuracy.
      const double phase = kTwoPi * static_cast<double>((m * j) % n) / static_cast<double>(n);
      lambda[m] += first_row[j] * std::polar(1.0, phase);
    }
  }
  return lambda;
}

double FourierSymbolSet::min_nonzero_kappa_sq() const {
  const double threshold = kernel_threshold();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < modes(); ++m) {
    const double s = kappa_sq(m);
    if (s > threshold) best = std::min(best, s);
  }
  return best;
}

FourierSymbolSet build_symbols(const GridSpec& grid, const WaveVector& k, const LatticeSpec& lattice,
                               double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("penalty coefficient gamma must be positive");
  if (!k.is_finite()) throw ConfigError("wave vector must be finite");

  const int n = grid.n;
  FourierSymbolSet sym;
  sym.n = n;
  sym.k = k;
  sym.b = lattice.b;
  sym.gamma = gamma;

  std::vector<cd> row0(n, cd{0.0, 0.0});
  std::vector<cd> row1(n, cd{0.0, 0.0});
  row0.front() = 0.5;
  row0.back() += 0.5;
  row1.front() = 1.0 / grid.h();
  row1.back() += -1.0 / grid.h();
  sym.lambda0 = circulant_symbols(row0);
  sym.lambda1 = circulant_symbols(row1);

  const std::size_t cells = grid.cells();
  for (auto& kap : sym.kappa) kap.resize(cells);

  const cd i_unit{0.0, 1.0};
  for (int m3 = 0; m3 < n; ++m3) {
    for (int m2 = 0; m2 < n; ++m2) {
      for (int m1 = 0; m1 < n; ++m1) {
        const std::array<int, 3> m = {m1, m2, m3};
        const std::size_t idx = grid.index(m1, m2, m3);
        double sq = 0.0;
        for (int c = 0; c < 3; ++c) {
          cd value = i_unit * k[c] * sym.lambda0[m[c]];
          for (int a = 0; a < 3; ++a) {
            if (lattice.b(a, c) != 0.0) value += lattice.b(a, c) * sym.lambda1[m[a]];
          }
          sym.kappa[c][idx] = value;
          sq += std::norm(value);
        }
        sym.kappa_sq_max = std::max(sym.kappa_sq_max, sq);
      }
    }
  }
  return sym;
}

// ---------------------------------------------------------------------------
// Dft3

namespace {

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(const cd* p) {
  return reinterpret_cast<fftw_complex*>(const_cast<cd*>(p));
}

}  // namespace

struct Dft3::Plans {
  int n = 0;
  std::size_t total = 0;
  fftw_plan forward_oop = nullptr;
  fftw_plan inverse_oop = nullptr;
  fftw_plan forward_ip = nullptr;
  fftw_plan inverse_ip = nullptr;

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    for (fftw_plan p : {forward_oop, inverse_oop, forward_ip, inverse_ip}) {
      if (p) fftw_destroy_plan(p);
    }
  }
};

Dft3::Dft3(int n) : plans_(std::make_unique<Plans>()) {
  if (n < 1) throw ContractViolation("DFT size must be positive");
  plans_->n = n;
  const std::size_t cells = static_cast<std::size_t>(n) * n * n;
  plans_->total = 3 * cells;

  std::vector<cd> a(plans_->total), b(plans_->total);
  const int dims[3] = {n, n, n};
  const int dist = static_cast<int>(cells);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;

  std::lock_guard lock(planner_mutex());
  auto make = [&](cd* in, cd* out, int sign, unsigned extra) {
    return fftw_plan_many_dft(3, dims, 3, as_fftw(in), nullptr, 1, dist, as_fftw(out), nullptr, 1,
                              dist, sign, flags | extra);
  };
  plans_->forward_oop = make(a.data(), b.data(), FFTW_FORWARD, FFTW_PRESERVE_INPUT);
  plans_->inverse_oop = make(a.data(), b.data(), FFTW_BACKWARD, FFTW_PRESERVE_INPUT);
  plans_->forward_ip = make(a.data(), a.data(), FFTW_FORWARD, 0);
  plans_->inverse_ip = make(a.data(), a.data(), FFTW_BACKWARD, 0);
  if (!plans_->forward_oop || !plans_->inverse_oop || !plans_->forward_ip || !plans_->inverse_ip) {
    throw std::runtime_error("FFTW planning failed");
  }
}

Dft3::~Dft3() = default;
Dft3::Dft3(Dft3&&) noexcept = default;
Dft3& Dft3::operator=(Dft3&&) noexcept = default;

int Dft3::n() const { return plans_->n; }

namespace {

void run(fftw_plan oop, fftw_plan ip, std::size_t total, int n, std::span<const cd> in,
         std::span<cd> out) {
  if (in.size() != total || out.size() != total) {
    throw ContractViolation("DFT input/output must hold 3 N^3 values");
  }
  if (in.data() == out.data()) {
    fftw_execute_dft(ip, as_fftw(out.data()), as_fftw(out.data()));
  } else {
    fftw_execute_dft(oop, as_fftw(in.data()), as_fftw(out.data()));
  }
  const double scale = 1.0 / std::pow(static_cast<double>(n), 1.5);
  for (cd& x : out) x *= scale;
}

}  // namespace

void Dft3::forward(std::span<const cd> in, std::span<cd> out) const {
  run(plans_->forward_oop, plans_->forward_ip, plans_->total, plans_->n, in, out);
}

void Dft3::inverse(std::span<const cd> in, std::span<cd> out) const {
  run(plans_->inverse_oop, plans_->inverse_ip, plans_->total, plans_->n, in, out);
}

FieldVector dft3_forward(const FieldVector& v) {
  if (v.space() != Space::Physical) throw ContractViolation("dft3_forward expects a physical field");
  FieldVector out(v.n(), Space::Fourier);
  Dft3(v.n()).forward(v.values(), out.values());
  return out;
}

FieldVector dft3_inverse(const FieldVector& v) {
  if (v.space() != Space::Fourier) throw ContractViolation("dft3_inverse expects a Fourier field");
  FieldVector out(v.n(), Space::Physical);
  Dft3(v.n()).inverse(v.values(), out.values());
  return out;
}

// ---------------------------------------------------------------------------
// Per-mode kernels

namespace {

void check_sizes(const FourierSymbolSet& sym, std::span<const cd> in, std::span<cd> out) {
  const std::size_t expected = 3 * sym.modes();
  if (in.size() != expected || out.size() != expected) {
    throw ContractViolation("field length does not match the symbol set");
  }
}

}  // namespace

void apply_ka(const FourierSymbolSet& sym, std::span<const cd> in, std::span<cd> out, bool adjoint) {
  check_sizes(sym, in, out);
  const std::size_t n3 = sym.modes();
  const cd* k1 = sym.kappa[0].data();
  const cd* k2 = sym.kappa[1].data();
  const cd* k3 = sym.kappa[2].data();
  for (std::size_t m = 0; m < n3; ++m) {
    const cd v1 = in[m], v2 = in[n3 + m], v3 = in[2 * n3 + m];
    if (!adjoint) {
      out[m] = -k3[m] * v2 + k2[m] * v3;
      out[n3 + m] = k3[m] * v1 - k1[m] * v3;
      out[2 * n3 + m] = -k2[m] * v1 + k1[m] * v2;
    } else {
      const cd c1 = std::conj(k1[m]), c2 = std::conj(k2[m]), c3 = std::conj(k3[m]);
      out[m] = c3 * v2 - c2 * v3;
      out[n3 + m] = -c3 * v1 + c1 * v3;
      out[2 * n3 + m] = c2 * v1 - c1 * v2;
    }
  }
}

void apply_kb(const FourierSymbolSet& sym, std::span<const cd> in, std::span<cd> out) {
  check_sizes(sym, in, out);
  const std::size_t n3 = sym.modes();
  for (std::size_t m = 0; m < n3; ++m) {
    const cd a1 = sym.kappa[0][m], a2 = sym.kappa[1][m], a3 = sym.kappa[2][m];
    const cd s = a1 * in[m] + a2 * in[n3 + m] + a3 * in[2 * n3 + m];
    out[m] = std::conj(a1) * s;
    out[n3 + m] = std::conj(a2) * s;
    out[2 * n3 + m] = std::conj(a3) * s;
  }
}

void apply_kp(const FourierSymbolSet& sym, std::span<const cd> in, std::span<cd> out) {
  check_sizes(sym, in, out);
  const std::size_t n3 = sym.modes();
  const double g1 = sym.gamma - 1.0;
  for (std::size_t m = 0; m < n3; ++m) {
    const cd a1 = sym.kappa[0][m], a2 = sym.kappa[1][m], a3 = sym.kappa[2][m];
    const double sq = std::norm(a1) + std::norm(a2) + std::norm(a3);
    const cd v1 = in[m], v2 = in[n3 + m], v3 = in[2 * n3 + m];
    const cd s = g1 * (a1 * v1 + a2 * v2 + a3 * v3);
    out[m] = sq * v1 + std::conj(a1) * s;
    out[n3 + m] = sq * v2 + std::conj(a2) * s;
    out[2 * n3 + m] = sq * v3 + std::conj(a3) * s;
  }
}

void apply_precond(const FourierSymbolSet& sym, std::span<const cd> in, std::span<cd> out) {
  check_sizes(sym, in, out);
  const std::size_t n3 = sym.modes();
  const double threshold = sym.kernel_threshold();
  const double gamma = sym.gamma;
  for (std::size_t m = 0; m < n3; ++m) {
    const cd a1 = sym.kappa[0][m], a2 = sym.kappa[1][m], a3 = sym.kappa[2][m];
    const double sq = std::norm(a1) + std::norm(a2) + std::norm(a3);
    const cd v1 = in[m], v2 = in[n3 + m], v3 = in[2 * n3 + m];
    if (sq <= threshold) {
      out[m] = v1;
      out[n3 + m] = v2;
      out[2 * n3 + m] = v3;
      continue;
    }
    // Sherman-Morrison inverse of |k|^2 I + (gamma - 1) conj(k) k^T.
    const double inv = 1.0 / sq;
    const cd s = ((gamma - 1.0) / (gamma * sq * sq)) * (a1 * v1 + a2 * v2 + a3 * v3);
    out[m] = inv * v1 - std::conj(a1) * s;
    out[n3 + m] = inv * v2 - std::conj(a2) * s;
    out[2 * n3 + m] = inv * v3 - std::conj(a3) * s;
  }
}

namespace {

template <typename Kernel>
FieldVector apply_fourier(const FourierSymbolSet& sym, const FieldVector& v, Kernel&& kernel) {
  if (v.space() != Space::Fourier) throw ContractViolation("expected a Fourier-space field");
  if (v.n() != sym.n) throw ContractViolation("field grid does not match the symbol set");
  FieldVector out(v.n(), Space::Fourier);
  kernel(v.values(), out.values());
  return out;
}

}  // namespace

FieldVector apply_KA(const FourierSymbolSet& sym, const FieldVector& v, bool adjoint) {
  return apply_fourier(sym, v, [&](auto in, auto out) { apply_ka(sym, in, out, adjoint); });
}

FieldVector apply_KB(const FourierSymbolSet& sym, const FieldVector& v) {
  return apply_fourier(sym, v, [&](auto in, auto out) { apply_kb(sym, in, out); });
}

FieldVector apply_KP(const FourierSymbolSet& sym, const FieldVector& v) {
  return apply_fourier(sym, v, [&](auto in, auto out) { apply_kp(sym, in, out); });
}

FieldVector apply_precond(const FourierSymbolSet& sym, const FieldVector& v) {
  return apply_fourier(sym, v, [&](auto in, auto out) { apply_precond(sym, in, out); });
}

}  // namespace kcpc
