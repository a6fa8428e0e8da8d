#include "kcpc/cli.hpp"
#include "kcpc/error.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace kcpc;
using nlohmann::json;

namespace {

json base_config() {
  return json::parse(R"({
    "lattice": "SC",
    "geometry": {"kind": "VACUUM"},
    "grid": {"n": 8},
    "solver": {"num_eigenpairs": 4, "tol": 1e-9},
    "kpath": {"anchors": ["Γ", "L"], "segments_per_edge": 3}
  })");
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("kcpc_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

BandStructure synthetic(std::size_t points, std::size_t bands) {
  BandStructure b;
  b.kpath = build_kpath(std::vector<WaveVector>{{0, 0, 0}, {kPi, 0, 0}}, static_cast<int>(points - 1));
  b.kpath.anchors[0].label = "Γ";
  b.kpath.anchors[1].label = "A&<\"B\">";
  for (std::size_t i = 0; i < points; ++i) {
    KPointResult p;
    p.index = i;
    p.label = b.kpath.label_at(i);
    p.k = b.kpath.points[i];
    for (std::size_t j = 0; j < bands; ++j) {
      p.omega_sq.push_back(0.1 * std::sqrt(2.0) * (j + 1) * (j + 1) + 1.0 / 3.0 * i);
      p.residuals.push_back(1e-7 / (j + 1));
    }
    p.iterations = 10 + static_cast<int>(i);
    p.converged = i != 1;
    b.points.push_back(p);
  }
  return b;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse_config(base_config());
  CHECK(cfg.lattice == LatticeFamily::SC);
  CHECK(cfg.n == 8);
  CHECK(cfg.solver.num_eigenpairs == 4);
  CHECK(cfg.permittivity.mode == PermittivityMode::CrossDoF);
  CHECK(cfg.build_path().points.size() == 4);

  SUBCASE("unknown keys are rejected") {
    for (const char* path : {"/bogus", "/solver/tolerance", "/grid/m", "/geometry/radius", "/kpath/step"}) {
      json doc = base_config();
      doc[json::json_pointer(path)] = 1;
      CHECK_THROWS_AS(parse_config(doc), ConfigError);
    }
  }
  SUBCASE("bad values") {
    json doc = base_config();
    doc["grid"]["n"] = 3;
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
    doc = base_config();
    doc["solver"]["tol"] = "small";
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
    doc = base_config();
    doc["permittivity"] = {{"mode", "diagonal"}, {"beta", 0.5}};
    CHECK_NOTHROW(parse_config(doc));  // the mismatch surfaces when the operator is built
    doc = base_config();
    doc.erase("lattice");
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
    doc = base_config();
    doc["kpath"]["points"] = json::array({json::array({0, 0, 0})});
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
    doc = base_config();
    doc["gap"] = {{"below_band", 4}};
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
  }
  SUBCASE("explicit points in units of pi and a complex tensor") {
    json doc = base_config();
    doc["kpath"] = {{"points", {{0, 0, 0}, {1, 1, 1}}}, {"units", "pi"}, {"segments_per_edge", 2}};
    doc["permittivity"] = json::object();
    doc["permittivity"]["eps1"] = json::parse(R"([[0.5, [0, -0.1], 0], [[0, 0.1], 0.5, 0], [0, 0, 0.25]])");
    const auto c = parse_config(doc);
    CHECK(c.build_path().points.back().k == Eigen::Vector3d(kPi, kPi, kPi));
    CHECK(c.permittivity.tensor()(0, 1) == cd(0, -0.1));
    doc["permittivity"]["eps1"][1][0] = json::array({0, 0.2});
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
  }
  SUBCASE("single explicit point") {
    json doc = base_config();
    doc["kpath"] = {{"points", {{0.1, 0.2, 0.3}}}};
    const auto path = parse_config(doc).build_path();
    CHECK(path.points.size() == 1);
  }
}

TEST_CASE("overrides") {
  json doc = base_config();
  apply_override(doc, "solver.tol=1e-6");
  apply_override(doc, "permittivity.mode=trivial");
  apply_override(doc, "output.csv=/tmp/x.csv");
  apply_override(doc, "kpath.anchors=[\"Γ\",\"M\"]");
  const auto cfg = parse_config(doc);
  CHECK(cfg.solver.tol == 1e-6);
  CHECK(cfg.permittivity.mode == PermittivityMode::Trivial);
  CHECK(cfg.outputs.csv == "/tmp/x.csv");
  CHECK(cfg.kpath.anchors.back() == "M");
  CHECK_THROWS_AS(apply_override(doc, "novalue"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "solver..tol=1"), ConfigError);
}

TEST_CASE("config files") {
  const auto dir = scratch_dir("config");
  const auto path = dir / "run.json";
  std::ofstream(path) << base_config().dump();
  const auto cfg = load_config(path.string(), {"grid.n=6"});
  CHECK(cfg.n == 6);
  CHECK(cfg.document["grid"]["n"] == 6);
  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK_THROWS_AS(load_config((dir / "broken.json").string()), ConfigError);
  try {
    load_config((dir / "missing.json").string());
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("missing.json") != std::string::npos);
  }
}

TEST_CASE("shipped configs parse and do not write over themselves") {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(KCPC_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    const auto cfg = load_config(entry.path().string());
    for (const auto& out : {cfg.outputs.csv, cfg.outputs.json, cfg.outputs.svg}) {
      CHECK(out != entry.path().filename().string());
    }
    ++count;
  }
  CHECK(count >= 5);
}

TEST_CASE("gap ratio and detection") {
  CHECK(gap_ratio(2, 3) == doctest::Approx(0.4));
  CHECK(normalized_frequency(4 * kPi * kPi) == doctest::Approx(1.0));
  CHECK(normalized_frequency(-1e-14) == 0.0);

  BandStructure b;
  auto add = [&](std::vector<double> f) {
    KPointResult p;
    for (double x : f) p.omega_sq.push_back(std::pow(kTwoPi * x, 2));
    b.points.push_back(p);
  };
  add({0.1, 0.30, 0.40, 0.40});
  add({0.2, 0.35, 0.41, 0.60});
  add({0.25, 0.38, 0.39, 0.62});
  const auto gap = find_gap(b, std::nullopt);
  REQUIRE(gap);
  CHECK(gap->below_band == 1);
  CHECK(gap->omega_low == doctest::Approx(0.25));
  CHECK(gap->omega_up == doctest::Approx(0.30));
  CHECK(gap->ratio == doctest::Approx(gap_ratio(0.25, 0.30)));
  CHECK_FALSE(find_gap(b, 3));
  CHECK(find_gap(b, 2)->omega_up == doctest::Approx(0.39));
}

TEST_CASE("relative frequency differences") {
  BandStructure a = synthetic(3, 2), ref = synthetic(3, 2);
  CHECK(delta_metrics(a, ref).max == 0.0);
  const double w = normalized_frequency(ref.points[1].omega_sq[0]);
  a.points[1].omega_sq[0] = std::pow(kTwoPi * w * 1.01, 2);
  const auto d = delta_metrics(a, ref);
  CHECK(d.max == doctest::Approx(0.01).epsilon(1e-10));
  CHECK(d.mean == doctest::Approx(0.01 / 6).epsilon(1e-10));
  ref.points.pop_back();
  CHECK_THROWS_AS(delta_metrics(a, ref), ContractViolation);
}

TEST_CASE("output formats") {
  const auto b = synthetic(3, 2);
  SUBCASE("csv rows") {
    const auto csv = format_csv(b);
    std::stringstream s(csv);
    std::string line;
    std::getline(s, line);
    CHECK(line == "k_index,label,k1,k2,k3,band,omega_sq,freq_norm,residual,iterations,converged");
    int rows = 0;
    while (std::getline(s, line)) ++rows;
    CHECK(rows == 6);
    CHECK(csv.find("\n1,,") != std::string::npos);
    CHECK(csv.find(",false\n") != std::string::npos);
  }
  SUBCASE("json round trip is bit exact") {
    BandStructure with = b;
    with.gap = GapInfo{1, 0.1 / 3, std::sqrt(0.2), 0.123456789012345};
    with.delta = DeltaMetrics{1.0 / 7, 1.0 / 11};
    with.points[0].warnings = {"something odd"};
    const auto text = to_json(with).dump();
    const auto back = band_structure_from_json(json::parse(text));
    REQUIRE(back.points.size() == with.points.size());
    for (std::size_t i = 0; i < back.points.size(); ++i) {
      CHECK(back.points[i].omega_sq == with.points[i].omega_sq);
      CHECK(back.points[i].residuals == with.points[i].residuals);
      CHECK(back.points[i].k == with.points[i].k);
      CHECK(back.points[i].iterations == with.points[i].iterations);
      CHECK(back.points[i].converged == with.points[i].converged);
      CHECK(back.points[i].label == with.points[i].label);
    }
    CHECK(back.points[0].warnings == with.points[0].warnings);
    CHECK(back.gap->omega_up == with.gap->omega_up);
    CHECK(back.gap->ratio == with.gap->ratio);
    CHECK(back.delta->max == with.delta->max);
    CHECK(format_csv(back) == format_csv(with));
    CHECK_THROWS_AS(band_structure_from_json(json::parse("{\"mode\": \"crossdof\"}")), ConfigError);
  }
  SUBCASE("svg") {
    BandStructure with = b;
    with.gap = GapInfo{1, 0.1, 0.12, 0.18};
    const auto svg = format_svg(with);
    auto count = [&](const std::string& needle) {
      std::size_t c = 0;
      for (auto p = svg.find(needle); p != std::string::npos; p = svg.find(needle, p + 1)) ++c;
      return c;
    };
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(count("<svg") == 1);
    CHECK(count("</svg>") == 1);
    CHECK(count("<polyline") == 2);
    CHECK(count("class=\"gap\"") == 1);
    CHECK(svg.find("A&amp;&lt;&quot;B&quot;&gt;") != std::string::npos);
    CHECK(svg.find("A&<") == std::string::npos);
    CHECK(count("<") == count(">"));
  }
}

TEST_CASE("vacuum sweep") {
  auto cfg = parse_config(base_config());
  const auto bands = run_sweep(cfg);
  REQUIRE(bands.points.size() == 4);
  CHECK(bands.all_converged());
  CHECK(bands.points.front().label == "Γ");
  CHECK(bands.points.back().label == "L");
  const auto sc = build_lattice(LatticeFamily::SC);
  const auto grid = GridSpec::make(8);
  double wmax = 0;
  for (const auto& p : bands.points) {
    // Transverse vacuum modes come in pairs at |kappa|^2.
    const auto s = build_symbols(grid, p.k, sc, 1.0);
    std::vector<double> t;
    for (std::size_t m = 0; m < s.modes(); ++m) {
      if (s.kappa_sq(m) > s.kernel_threshold()) t.insert(t.end(), {s.kappa_sq(m), s.kappa_sq(m)});
    }
    std::sort(t.begin(), t.end());
    for (std::size_t j = 0; j < 4; ++j) CHECK(p.omega_sq[j] == doctest::Approx(t[j]).epsilon(1e-8));
    wmax = std::max(wmax, p.omega_sq.back());
  }
  // Adjacent k-points: |d omega^2 / dk| <= 2 |kappa| |d kappa / dk| <= 2 sqrt(max omega^2) up to the D0 factor.
  // Gamma is skipped: its zero modes are deflated, so its sorted bands start higher.
  const double c = 4 * std::sqrt(wmax);
  for (std::size_t i = 2; i < bands.points.size(); ++i) {
    const double dk = (bands.points[i].k.k - bands.points[i - 1].k.k).norm();
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(std::abs(bands.points[i].omega_sq[j] - bands.points[i - 1].omega_sq[j]) <= c * dk);
    }
  }
}

TEST_CASE("sweeps are reproducible and worker-count independent") {
  json doc = base_config();
  doc["geometry"] = {{"kind", "SC_CURV"}};
  doc["solver"] = {{"num_eigenpairs", 3}, {"tol", 1e-6}, {"initial_guess", "random"}, {"seed", 5}};
  auto cfg = parse_config(doc);
  const auto a = format_csv(run_sweep(cfg));
  const auto b = format_csv(run_sweep(cfg));
  CHECK(a == b);
  cfg.workers = 3;
  CHECK(format_csv(run_sweep(cfg)) == a);
}

TEST_CASE("mode comparison and written outputs") {
  json doc = base_config();
  doc["geometry"] = {{"kind", "SC_CURV"}};
  doc["grid"]["n"] = 6;
  doc["solver"] = {{"num_eigenpairs", 3}, {"tol", 1e-6}};
  doc["kpath"] = {{"anchors", {"M", "N"}}};
  const auto dir = scratch_dir("outputs");
  doc["output"] = {{"csv", (dir / "bands.csv").string()},
                   {"json", (dir / "bands.json").string()},
                   {"svg", (dir / "bands.svg").string()}};
  const auto cfg = parse_config(doc);
  const auto c = run_comparison(cfg);
  CHECK(c.trivial.mode == PermittivityMode::Trivial);
  CHECK(c.crossdof.mode == PermittivityMode::CrossDoF);
  CHECK(c.delta.max > 0.0);
  CHECK(c.delta.max < 0.1);
  CHECK(c.delta.mean <= c.delta.max);
  write_outputs(c.crossdof, cfg, &c.trivial);
  CHECK(slurp(dir / "bands.csv") == format_csv(c.crossdof));
  CHECK(slurp(dir / "bands.trivial.csv") == format_csv(c.trivial));
  const auto j = json::parse(slurp(dir / "bands.json"));
  CHECK(j["version"] == version_string());
  CHECK(j["config"] == cfg.document);
  CHECK(j.contains("trivial"));
  CHECK(band_structure_from_json(j["bands"]).points.size() == 2);
  CHECK(slurp(dir / "bands.svg").find("<polyline") != std::string::npos);

  auto bad = cfg;
  bad.outputs.csv = (dir / "no_such_dir" / "x.csv").string();
  try {
    write_outputs(c.crossdof, bad);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("no_such_dir") != std::string::npos);
  }
}

TEST_CASE("worker count from the environment") {
  auto cfg = parse_config(base_config());
  cfg.workers = 2;
  ::unsetenv("KCPC_WORKERS");
  CHECK(resolve_workers(cfg) == 2);
  ::setenv("KCPC_WORKERS", "5", 1);
  CHECK(resolve_workers(cfg) == 5);
  ::setenv("KCPC_WORKERS", "zero", 1);
  CHECK_THROWS_AS(resolve_workers(cfg), ConfigError);
  ::unsetenv("KCPC_WORKERS");
}
