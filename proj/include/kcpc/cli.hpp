#pragma once

#include "kcpc/geometry.hpp"
#include "kcpc/lattice.hpp"
#include "kcpc/permittivity.hpp"
#include "kcpc/solver.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace kcpc {

struct PermittivitySpec {
  PermittivityMode mode = PermittivityMode::CrossDoF;
  double eps_lattice = 13.0;
  double beta = 0.875;
  /// Explicit eps1; when set, eps_lattice and beta are ignored.
  std::optional<Eigen::Matrix3cd> eps1;

  PermittivityTensor tensor() const;
};

struct KPathSpec {
  /// Named anchors such as "SC:Γ" or "L" (resolved against the run's lattice).
  std::vector<std::string> anchors;
  /// Explicit anchor vectors, used when `anchors` is empty.
  std::vector<WaveVector> points;
  int segments_per_edge = 1;
};

struct OutputSpec {
  std::string csv;
  std::string json;
  std::string svg;
};

struct RunConfig {
  LatticeFamily lattice = LatticeFamily::SC;
  GeometrySpec geometry = GeometrySpec::make(GeometryKind::Vacuum);
  int n = 16;
  PermittivitySpec permittivity;
  SolverConfig solver;
  KPathSpec kpath;
  OutputSpec outputs;
  /// 1-based band index below the gap; automatic detection when empty.
  std::optional<int> gap_below_band;
  bool compare_modes = false;
  int workers = 1;
  /// The configuration document after overrides, echoed into the JSON output.
  nlohmann::json document;

  KPath build_path() const;
};

/**
 * Builds a RunConfig from a JSON document. Every key is checked; unknown keys,
 * wrong types and invalid values throw ConfigError naming the key.
 */
RunConfig parse_config(const nlohmann::json& doc);

/// Applies "dotted.key=value"; the value is read as JSON when it parses, otherwise as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Reads the file (IoError when unreadable, ConfigError on bad JSON), applies overrides and parses.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// KCPC_WORKERS when set, otherwise config.workers; at least 1.
int resolve_workers(const RunConfig& config);

struct KPointResult {
  std::size_t index = 0;
  std::string label;
  WaveVector k;
  std::vector<double> omega_sq;
  std::vector<double> residuals;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

struct GapInfo {
  int below_band = 0;  // 1-based
  double omega_low = 0.0;  // normalized frequencies
  double omega_up = 0.0;
  double ratio = 0.0;
};

struct DeltaMetrics {
  double max = 0.0;
  double mean = 0.0;
};

struct BandStructure {
  KPath kpath;
  PermittivityMode mode = PermittivityMode::CrossDoF;
  std::vector<KPointResult> points;
  std::optional<GapInfo> gap;
  std::optional<DeltaMetrics> delta;

  bool all_converged() const;
  std::size_t band_count() const;
};

/// sqrt(omega^2) / (2 pi), with negative round-off clamped to zero.
double normalized_frequency(double omega_sq);
/// (up - low) / ((up + low) / 2).
double gap_ratio(double omega_low, double omega_up);

/**
 * Gap above band `below_band` (1-based) over the whole path, or the band pair
 * with the largest positive ratio when not given. Empty when the bands overlap.
 */
std::optional<GapInfo> find_gap(const BandStructure& bands, std::optional<int> below_band);

/// Maximum and mean of |w1 - w2| / |w2| over all k and bands, w2 being the reference.
DeltaMetrics delta_metrics(const BandStructure& bands, const BandStructure& reference);

/// Solves every k-point of the path with the configured permittivity mode.
BandStructure run_sweep(const RunConfig& config);
BandStructure run_sweep(const RunConfig& config, PermittivityMode mode);

struct Comparison {
  BandStructure trivial;
  BandStructure crossdof;  // reference
  DeltaMetrics delta;
};

Comparison run_comparison(const RunConfig& config);

std::string format_csv(const BandStructure& bands);
nlohmann::json to_json(const BandStructure& bands);
BandStructure band_structure_from_json(const nlohmann::json& doc);
/// Result document: version, configuration echo and band data.
nlohmann::json result_document(const BandStructure& bands, const RunConfig& config,
                               const BandStructure* trivial = nullptr);
std::string format_svg(const BandStructure& bands);

/// Writes the outputs named in the config. Throws IoError naming the path on failure.
void write_outputs(const BandStructure& bands, const RunConfig& config, const BandStructure* trivial = nullptr);

std::string version_string();

}  // namespace kcpc
