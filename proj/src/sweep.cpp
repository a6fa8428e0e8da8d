#include "kcpc/cli.hpp"

#include "kcpc/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace kcpc {

bool BandStructure::all_converged() const {
  return std::all_of(points.begin(), points.end(), [](const KPointResult& p) { return p.converged; });
}

std::size_t BandStructure::band_count() const {
  std::size_t bands = 0;
  for (const auto& p : points) bands = std::max(bands, p.omega_sq.size());
  return bands;
}

double normalized_frequency(double omega_sq) { return std::sqrt(std::max(omega_sq, 0.0)) / kTwoPi; }

double gap_ratio(double omega_low, double omega_up) {
  return (omega_up - omega_low) / ((omega_up + omega_low) / 2.0);
}

namespace {

std::optional<GapInfo> gap_above(const BandStructure& bands, int below) {
  double low = -1.0;
  double up = std::numeric_limits<double>::infinity();
  for (const auto& p : bands.points) {
    if (static_cast<int>(p.omega_sq.size()) <= below) return std::nullopt;
    low = std::max(low, normalized_frequency(p.omega_sq[below - 1]));
    up = std::min(up, normalized_frequency(p.omega_sq[below]));
  }
  if (bands.points.empty() || !(up > low) || up + low <= 0.0) return std::nullopt;
  return GapInfo{below, low, up, gap_ratio(low, up)};
}

}  // namespace

std::optional<GapInfo> find_gap(const BandStructure& bands, std::optional<int> below_band) {
  if (below_band) {
    if (*below_band < 1) throw ConfigError("gap band index must be >= 1");
    return gap_above(bands, *below_band);
  }
  std::optional<GapInfo> best;
  const int count = static_cast<int>(bands.band_count());
  for (int b = 1; b < count; ++b) {
    const auto g = gap_above(bands, b);
    if (g && (!best || g->ratio > best->ratio)) best = g;
  }
  return best;
}

DeltaMetrics delta_metrics(const BandStructure& bands, const BandStructure& reference) {
  if (bands.points.size() != reference.points.size()) {
    throw ContractViolation("delta_metrics: band structures have different k-paths");
  }
  DeltaMetrics d;
  std::size_t count = 0;
  for (std::size_t i = 0; i < bands.points.size(); ++i) {
    const auto& a = bands.points[i].omega_sq;
    const auto& b = reference.points[i].omega_sq;
    if (a.size() != b.size()) throw ContractViolation("delta_metrics: band counts differ");
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double w2 = normalized_frequency(b[j]);
      if (w2 == 0.0) continue;
      const double rel = std::abs(normalized_frequency(a[j]) - w2) / w2;
      d.max = std::max(d.max, rel);
      d.mean += rel;
      ++count;
    }
  }
  if (count > 0) d.mean /= static_cast<double>(count);
  return d;
}

BandStructure run_sweep(const RunConfig& config) { return run_sweep(config, config.permittivity.mode); }

BandStructure run_sweep(const RunConfig& config, PermittivityMode mode) {
  const GridSpec grid = GridSpec::make(config.n);
  const LatticeSpec lattice = build_lattice(config.lattice);
  const PermittivityOperator permittivity(config.permittivity.tensor(),
                                          rasterize_indicators(config.geometry, grid, lattice), mode);

  BandStructure out;
  out.kpath = config.build_path();
  out.mode = mode;
  out.points.resize(out.kpath.points.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= out.points.size()) return;
      try {
        SolverConfig cfg = config.solver;
        cfg.seed = config.solver.seed + i;
        const WaveVector& k = out.kpath.points[i];
        EigenResult r = solve_at(grid, lattice, k, permittivity, cfg);
        KPointResult& p = out.points[i];
        p.index = i;
        p.label = out.kpath.label_at(i);
        p.k = k;
        p.omega_sq = std::move(r.omega_sq);
        p.residuals = std::move(r.residuals);
        p.iterations = r.iterations;
        p.converged = r.converged;
        p.warnings = std::move(r.warnings);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(out.points.size());
        return;
      }
    }
  };

  const int workers = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(resolve_workers(config)), out.points.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  out.gap = find_gap(out, config.gap_below_band);
  return out;
}

Comparison run_comparison(const RunConfig& config) {
  Comparison c;
  c.trivial = run_sweep(config, PermittivityMode::Trivial);
  c.crossdof = run_sweep(config, PermittivityMode::CrossDoF);
  c.delta = delta_metrics(c.trivial, c.crossdof);
  c.trivial.delta = c.delta;
  c.crossdof.delta = c.delta;
  return c;
}

}  // namespace kcpc
