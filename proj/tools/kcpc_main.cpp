#include "kcpc/cli.hpp"
#include "kcpc/error.hpp"
#include "kcpc/oracle.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <sstream>

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kConfig = 2, kNotConverged = 3, kIo = 4 };

// "0.5pi" and plain radians are both accepted.
double parse_component(const std::string& text) {
  std::string s = text;
  double scale = 1.0;
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
    scale = kcpc::kPi;
    s.resize(s.size() - 2);
    if (s.empty() || s == "+" || s == "-") s += "1";
  }
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw kcpc::ConfigError("bad wave-vector component '" + text + "'");
  return scale * v;
}

kcpc::WaveVector parse_k(const std::string& text) {
  std::stringstream in(text);
  std::string part;
  std::vector<double> c;
  while (std::getline(in, part, ',')) c.push_back(parse_component(part));
  if (c.size() != 3) throw kcpc::ConfigError("--k needs three comma-separated components");
  return kcpc::WaveVector(c[0], c[1], c[2]);
}

void print_summary(const kcpc::BandStructure& b, std::ostream& os) {
  int iterations = 0;
  std::size_t unconverged = 0;
  for (const auto& p : b.points) {
    iterations += p.iterations;
    if (!p.converged) ++unconverged;
  }
  os << "mode " << kcpc::to_string(b.mode) << ": " << b.points.size() << " k-points, " << b.band_count()
     << " bands, " << iterations << " iterations";
  if (unconverged) os << ", " << unconverged << " not converged";
  os << '\n';
  if (b.gap) {
    os << "  gap above band " << b.gap->below_band << ": " << b.gap->omega_low << " .. " << b.gap->omega_up
       << " (ratio " << b.gap->ratio << ")\n";
  } else {
    os << "  no complete gap\n";
  }
}

int bands_command(const std::string& path, const std::vector<std::string>& overrides, bool compare) {
  kcpc::RunConfig cfg = kcpc::load_config(path, overrides);
  if (compare || cfg.compare_modes) {
    const kcpc::Comparison c = kcpc::run_comparison(cfg);
    print_summary(c.trivial, std::cerr);
    print_summary(c.crossdof, std::cerr);
    std::cerr << "delta_omega max " << c.delta.max << " mean " << c.delta.mean << '\n';
    kcpc::write_outputs(c.crossdof, cfg, &c.trivial);
    if (cfg.outputs.csv.empty()) std::cout << kcpc::format_csv(c.crossdof);
    return c.trivial.all_converged() && c.crossdof.all_converged() ? kOk : kNotConverged;
  }
  const kcpc::BandStructure b = kcpc::run_sweep(cfg);
  print_summary(b, std::cerr);
  kcpc::write_outputs(b, cfg);
  if (cfg.outputs.csv.empty()) std::cout << kcpc::format_csv(b);
  return b.all_converged() ? kOk : kNotConverged;
}

int verify_command(const std::string& name, int n, const std::string& k_text) {
  const kcpc::WaveVector k = parse_k(k_text);
  std::vector<std::string> names = name == "all" ? kcpc::oracle::case_names() : std::vector<std::string>{name};
  bool all = true;
  for (const auto& c : names) {
    const auto report = kcpc::oracle::run_case(c, n, k);
    std::cout << (report.pass ? "PASS " : "FAIL ") << report.name;
    for (std::size_t i = 0; i < report.deviations.size(); ++i) {
      std::cout << ' ' << report.deviations[i].first << '=' << report.deviations[i].second;
      if (i < report.tolerances.size()) std::cout << "(tol " << report.tolerances[i].second << ')';
    }
    std::cout << '\n';
    all = all && report.pass;
  }
  return all ? kOk : kInternal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Band structures of photonic crystals in pseudochiral media"};
  app.set_version_flag("--version", kcpc::version_string());
  app.require_subcommand(1);

  auto* bands = app.add_subcommand("bands", "Band-structure sweeps along a k-path");
  bands->require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  auto* run = bands->add_subcommand("run", "Solve the configured permittivity mode");
  run->add_option("config", config_path, "JSON configuration file")->required();
  run->add_option("--set", overrides, "Override a config key, e.g. solver.tol=1e-6");
  auto* compare = bands->add_subcommand("compare", "Solve with Trivial and CrossDoF and report the difference");
  compare->add_option("config", config_path, "JSON configuration file")->required();
  compare->add_option("--set", overrides, "Override a config key");

  auto* oracle = app.add_subcommand("oracle", "Dense reference checks on small grids");
  oracle->require_subcommand(1);
  auto* verify = oracle->add_subcommand("verify", "Compare operators against dense assembly");
  std::string case_name;
  int n = 6;
  std::string k_text = "0.3,-1.2,2.1";
  std::string case_help = "Check name (all";
  for (const auto& c : kcpc::oracle::case_names()) case_help += ", " + c;
  case_help += ")";
  verify->add_option("--case", case_name, case_help)->required();
  verify->add_option("--n", n, "Grid size N (4..10)");
  verify->add_option("--k", k_text, "Wave vector kx,ky,kz in radians; a 'pi' suffix multiplies by pi");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (run->parsed()) return bands_command(config_path, overrides, false);
    if (compare->parsed()) return bands_command(config_path, overrides, true);
    if (verify->parsed()) return verify_command(case_name, n, k_text);
  } catch (const kcpc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const kcpc::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}
