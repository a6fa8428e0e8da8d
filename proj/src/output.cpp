#include "kcpc/cli.hpp"

#include "kcpc/error.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifndef KCPC_VERSION
#define KCPC_VERSION "0.0.0"
#endif

namespace kcpc {

using nlohmann::json;

std::string version_string() { return KCPC_VERSION; }

namespace {

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

json vec(const WaveVector& k) { return json::array({k[0], k[1], k[2]}); }

WaveVector vec_from(const json& v) { return WaveVector(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()); }

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  out.close();
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string trivial_path(const std::string& csv) {
  const std::filesystem::path p(csv);
  return (p.parent_path() / (p.stem().string() + ".trivial" + p.extension().string())).string();
}

}  // namespace

std::string format_csv(const BandStructure& bands) {
  std::string out = "k_index,label,k1,k2,k3,band,omega_sq,freq_norm,residual,iterations,converged\n";
  for (const auto& p : bands.points) {
    for (std::size_t b = 0; b < p.omega_sq.size(); ++b) {
      out += std::to_string(p.index) + ',' + csv_field(p.label) + ',' + num(p.k[0]) + ',' + num(p.k[1]) + ',' +
             num(p.k[2]) + ',' + std::to_string(b + 1) + ',' + num(p.omega_sq[b]) + ',' +
             num(normalized_frequency(p.omega_sq[b])) + ',' +
             num(b < p.residuals.size() ? p.residuals[b] : 0.0) + ',' + std::to_string(p.iterations) + ',' +
             (p.converged ? "true" : "false") + '\n';
    }
  }
  return out;
}

json to_json(const BandStructure& bands) {
  json doc;
  doc["mode"] = to_string(bands.mode);
  json anchors = json::array();
  for (std::size_t a = 0; a < bands.kpath.anchors.size(); ++a) {
    anchors.push_back({{"label", bands.kpath.anchors[a].label},
                       {"k", vec(bands.kpath.anchors[a].k)},
                       {"index", a < bands.kpath.anchor_indices.size() ? bands.kpath.anchor_indices[a] : 0}});
  }
  doc["kpath"] = {{"segments_per_edge", bands.kpath.segments_per_edge}, {"anchors", anchors}};
  json points = json::array();
  for (const auto& p : bands.points) {
    json freq = json::array();
    for (double w : p.omega_sq) freq.push_back(normalized_frequency(w));
    points.push_back({{"index", p.index},
                      {"label", p.label},
                      {"k", vec(p.k)},
                      {"omega_sq", p.omega_sq},
                      {"freq_norm", freq},
                      {"residuals", p.residuals},
                      {"iterations", p.iterations},
                      {"converged", p.converged},
                      {"warnings", p.warnings}});
  }
  doc["points"] = points;
  doc["gap"] = bands.gap ? json{{"below_band", bands.gap->below_band},
                                {"omega_low", bands.gap->omega_low},
                                {"omega_up", bands.gap->omega_up},
                                {"ratio", bands.gap->ratio}}
                         : json(nullptr);
  doc["delta"] = bands.delta ? json{{"max", bands.delta->max}, {"mean", bands.delta->mean}} : json(nullptr);
  return doc;
}

BandStructure band_structure_from_json(const json& doc) {
  try {
    BandStructure b;
    b.mode = parse_permittivity_mode(doc.at("mode").get<std::string>());
    const json& kp = doc.at("kpath");
    b.kpath.segments_per_edge = kp.at("segments_per_edge").get<int>();
    for (const auto& a : kp.at("anchors")) {
      b.kpath.anchors.push_back({a.at("label").get<std::string>(), vec_from(a.at("k"))});
      b.kpath.anchor_indices.push_back(a.at("index").get<std::size_t>());
    }
    for (const auto& pj : doc.at("points")) {
      KPointResult p;
      p.index = pj.at("index").get<std::size_t>();
      p.label = pj.at("label").get<std::string>();
      p.k = vec_from(pj.at("k"));
      p.omega_sq = pj.at("omega_sq").get<std::vector<double>>();
      p.residuals = pj.at("residuals").get<std::vector<double>>();
      p.iterations = pj.at("iterations").get<int>();
      p.converged = pj.at("converged").get<bool>();
      p.warnings = pj.at("warnings").get<std::vector<std::string>>();
      b.kpath.points.push_back(p.k);
      b.points.push_back(std::move(p));
    }
    if (!doc.at("gap").is_null()) {
      const json& g = doc.at("gap");
      b.gap = GapInfo{g.at("below_band").get<int>(), g.at("omega_low").get<double>(),
                      g.at("omega_up").get<double>(), g.at("ratio").get<double>()};
    }
    if (!doc.at("delta").is_null()) {
      b.delta = DeltaMetrics{doc.at("delta").at("max").get<double>(), doc.at("delta").at("mean").get<double>()};
    }
    return b;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed band-structure document: ") + e.what());
  }
}

json result_document(const BandStructure& bands, const RunConfig& config, const BandStructure* trivial) {
  json doc;
  doc["version"] = version_string();
  doc["config"] = config.document;
  doc["bands"] = to_json(bands);
  if (trivial) doc["trivial"] = to_json(*trivial);
  return doc;
}

std::string format_svg(const BandStructure& bands) {
  constexpr double width = 720, height = 480, left = 60, right = 20, top = 20, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;
  const std::size_t npts = bands.points.size();
  double fmax = 0.0;
  for (const auto& p : bands.points) {
    for (double w : p.omega_sq) fmax = std::max(fmax, normalized_frequency(w));
  }
  if (fmax <= 0.0) fmax = 1.0;
  fmax *= 1.05;
  auto x_of = [&](std::size_t i) { return left + (npts > 1 ? pw * static_cast<double>(i) / (npts - 1) : pw / 2); };
  auto y_of = [&](double f) { return top + ph * (1.0 - f / fmax); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  s << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  if (bands.gap) {
    const double y0 = y_of(bands.gap->omega_up), y1 = y_of(bands.gap->omega_low);
    s << "<rect class=\"gap\" x=\"" << left << "\" y=\"" << num(y0) << "\" width=\"" << pw << "\" height=\""
      << num(y1 - y0) << "\" fill=\"#f4c542\" fill-opacity=\"0.35\"/>\n";
  }
  s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (std::size_t a = 0; a < bands.kpath.anchor_indices.size() && a < bands.kpath.anchors.size(); ++a) {
    const double x = x_of(bands.kpath.anchor_indices[a]);
    s << "<line x1=\"" << num(x) << "\" y1=\"" << top << "\" x2=\"" << num(x) << "\" y2=\"" << top + ph
      << "\" stroke=\"#999\" stroke-dasharray=\"3,3\"/>\n";
    s << "<text x=\"" << num(x) << "\" y=\"" << top + ph + 20 << "\" text-anchor=\"middle\" font-size=\"14\">"
      << xml_escape(bands.kpath.anchors[a].label) << "</text>\n";
  }
  for (int t = 0; t <= 4; ++t) {
    const double f = fmax * t / 4.0;
    s << "<text x=\"" << left - 6 << "\" y=\"" << num(y_of(f) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
      << num(std::round(f * 1000.0) / 1000.0) << "</text>\n";
  }
  s << "<text x=\"16\" y=\"" << top + ph / 2 << "\" font-size=\"13\" transform=\"rotate(-90 16 " << top + ph / 2
    << ")\" text-anchor=\"middle\">" << xml_escape("ω a / 2πc") << "</text>\n";
  const std::size_t nb = bands.band_count();
  for (std::size_t b = 0; b < nb; ++b) {
    s << "<polyline class=\"band\" fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < npts; ++i) {
      if (b >= bands.points[i].omega_sq.size()) continue;
      if (!first) s << ' ';
      s << num(x_of(i)) << ',' << num(y_of(normalized_frequency(bands.points[i].omega_sq[b])));
      first = false;
    }
    s << "\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void write_outputs(const BandStructure& bands, const RunConfig& config, const BandStructure* trivial) {
  if (!config.outputs.csv.empty()) {
    write_file(config.outputs.csv, format_csv(bands));
    if (trivial) write_file(trivial_path(config.outputs.csv), format_csv(*trivial));
  }
  if (!config.outputs.json.empty()) {
    write_file(config.outputs.json, result_document(bands, config, trivial).dump(2) + "\n");
  }
  if (!config.outputs.svg.empty()) write_file(config.outputs.svg, format_svg(bands));
}

}  // namespace kcpc
