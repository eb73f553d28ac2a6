#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "prescreen/error.hpp"
#include "prescreen/io.hpp"

// SVG heatmaps from a HeatmapGrid CSV export.
//
// One file per (model, instruction, N). Columns are X (percent
// non-passing), rows are T, smallest T at the top. Each populated cell shows
// its mean R² to two decimals. Empty cells are hatched grey with no label.
//
// Color scale (fixed): R² is clamped to [0, 1] and interpolated linearly
// between five stops
//   0.00 #440154, 0.25 #3b528b, 0.50 #21918c, 0.75 #5ec962, 1.00 #fde725
// so R² <= 0 is dark purple and R² = 1 is yellow.

namespace prescreen::render {

inline constexpr const char* kHeatmapHeader = "model,instruction,N,T,X,mean_r2,reps_ok,reps_failed";

struct HeatmapRow {
  std::string model;
  std::string instruction;
  int n = 0;
  double t = 0.0;
  double x = 0.0;
  std::optional<double> mean_r2;
  std::string t_text;
  std::string x_text;
};

struct HeatmapCsv {
  std::vector<std::string> provenance;  // leading '#' lines, without the '#'
  std::vector<HeatmapRow> rows;
};

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double number(const std::string& s, int line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::logic_error&) {
  }
  throw Error("render.SchemaMismatch", "line " + std::to_string(line_no) + ": bad number '" + s + "'");
}

struct Rgb {
  double r, g, b;
};

inline constexpr std::array<Rgb, 5> kStops{{
    {0x44, 0x01, 0x54},
    {0x3b, 0x52, 0x8b},
    {0x21, 0x91, 0x8c},
    {0x5e, 0xc9, 0x62},
    {0xfd, 0xe7, 0x25},
}};

inline std::string hex(const Rgb& c) {
  char buf[8];
  auto clamp = [](double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 255.0))); };
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", clamp(c.r), clamp(c.g), clamp(c.b));
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// Fill color for a cell value.
inline std::string color_for(double r2) {
  const double v = std::clamp(r2, 0.0, 1.0) * 4.0;
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(v), 3);
  const double f = v - static_cast<double>(i);
  const auto& a = detail::kStops[i];
  const auto& b = detail::kStops[i + 1];
  return detail::hex({a.r + (b.r - a.r) * f, a.g + (b.g - a.g) * f, a.b + (b.b - a.b) * f});
}

inline HeatmapCsv parse_heatmap_csv(const std::string& text) {
  HeatmapCsv csv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line.front() == '#') {
        csv.provenance.push_back(line.substr(1));
        continue;
      }
      if (line != kHeatmapHeader)
        throw Error("render.SchemaMismatch", "expected header '" + std::string(kHeatmapHeader) + "'");
      header = true;
      continue;
    }
    const auto f = detail::split(line, ',');
    if (f.size() != 8) throw Error("render.SchemaMismatch", "line " + std::to_string(line_no) + ": expected 8 fields");
    HeatmapRow r;
    r.model = f[0];
    r.instruction = f[1];
    const double n = detail::number(f[2], line_no);
    if (n < 1 || n != std::floor(n)) throw Error("render.SchemaMismatch", "line " + std::to_string(line_no) + ": bad N");
    r.n = static_cast<int>(n);
    r.t = detail::number(f[3], line_no);
    r.x = detail::number(f[4], line_no);
    r.t_text = f[3];
    r.x_text = f[4];
    if (!f[5].empty()) r.mean_r2 = detail::number(f[5], line_no);
    detail::number(f[6], line_no);
    detail::number(f[7], line_no);
    csv.rows.push_back(std::move(r));
  }
  if (!header) throw Error("render.SchemaMismatch", "missing header");
  return csv;
}

struct SvgFile {
  std::string name;
  std::string content;
};

/// Renders every (model, instruction, N) panel, in order of first appearance.
inline std::vector<SvgFile> render_svgs(const HeatmapCsv& csv) {
  using Key = std::tuple<std::string, std::string, int>;
  std::vector<Key> order;
  std::map<Key, std::vector<const HeatmapRow*>> groups;
  for (const auto& r : csv.rows) {
    Key k{r.model, r.instruction, r.n};
    auto [it, fresh] = groups.try_emplace(k);
    if (fresh) order.push_back(k);
    it->second.push_back(&r);
  }

  constexpr int kCellW = 46, kCellH = 26, kLeft = 64, kTop = 56, kBottom = 44, kRight = 16;
  std::vector<SvgFile> files;
  for (const auto& key : order) {
    const auto& rows = groups.at(key);
    std::map<double, std::string> ts, xs;
    for (const auto* r : rows) {
      ts.emplace(r->t, r->t_text);
      xs.emplace(r->x, r->x_text);
    }
    std::map<std::pair<double, double>, const HeatmapRow*> cell;
    for (const auto* r : rows) cell[{r->t, r->x}] = r;

    const int width = kLeft + static_cast<int>(xs.size()) * kCellW + kRight;
    const int height = kTop + static_cast<int>(ts.size()) * kCellH + kBottom;
    const auto& [model, instruction, n] = key;

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    for (auto p : csv.provenance) {
      for (auto pos = p.find("--"); pos != std::string::npos; pos = p.find("--")) p.replace(pos, 2, "- -");
      svg << "<!--" << detail::xml_escape(p) << " -->\n";
    }
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" "
           "patternTransform=\"rotate(45)\"><rect width=\"6\" height=\"6\" fill=\"#e0e0e0\"/>"
           "<line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#9e9e9e\" stroke-width=\"2\"/></pattern></defs>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
        << detail::xml_escape(model) << " " << detail::xml_escape(instruction) << " N=" << n << "</text>\n";
    svg << "<text x=\"" << kLeft + static_cast<int>(xs.size()) * kCellW / 2 << "\" y=\"" << kTop - 22
        << "\" text-anchor=\"middle\">X (% non-passing)</text>\n";
    svg << "<text x=\"14\" y=\"" << kTop + static_cast<int>(ts.size()) * kCellH / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << kTop + static_cast<int>(ts.size()) * kCellH / 2
        << ")\">T</text>\n";

    int col = 0;
    for (const auto& [x, label] : xs) {
      svg << "<text x=\"" << kLeft + col * kCellW + kCellW / 2 << "\" y=\"" << kTop - 6
          << "\" text-anchor=\"middle\">" << detail::xml_escape(label) << "</text>\n";
      ++col;
    }
    int row = 0;
    for (const auto& [t, t_label] : ts) {
      const int y = kTop + row * kCellH;
      svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + kCellH / 2 + 4 << "\" text-anchor=\"end\">"
          << detail::xml_escape(t_label) << "</text>\n";
      col = 0;
      for (const auto& [x, x_label] : xs) {
        const int cx = kLeft + col * kCellW;
        const auto it = cell.find({t, x});
        const HeatmapRow* r = it == cell.end() ? nullptr : it->second;
        if (r == nullptr || !r->mean_r2) {
          svg << "<rect x=\"" << cx << "\" y=\"" << y << "\" width=\"" << kCellW << "\" height=\"" << kCellH
              << "\" fill=\"url(#hatch)\" stroke=\"#ffffff\"/>\n";
        } else {
          const double v = *r->mean_r2;
          char text[32];
          std::snprintf(text, sizeof text, "%.2f", v);
          const char* ink = v < 0.6 ? "#ffffff" : "#000000";
          svg << "<rect x=\"" << cx << "\" y=\"" << y << "\" width=\"" << kCellW << "\" height=\"" << kCellH
              << "\" fill=\"" << color_for(v) << "\" stroke=\"#ffffff\"/>\n";
          svg << "<text x=\"" << cx + kCellW / 2 << "\" y=\"" << y + kCellH / 2 + 4
              << "\" text-anchor=\"middle\" fill=\"" << ink << "\">" << text << "</text>\n";
        }
        ++col;
      }
      ++row;
    }
    svg << "</svg>\n";

    std::ostringstream name;
    name << "heatmap_" << model << "_" << instruction << "_N" << n << ".svg";
    files.push_back({name.str(), svg.str()});
  }
  return files;
}

/// Reads a HeatmapGrid CSV and writes one SVG per panel into `out_dir`.
/// Returns the written paths.
inline std::vector<std::filesystem::path> render_heatmap(const std::string& grid_csv, const std::string& out_dir) {
  const auto csv = parse_heatmap_csv(io::read_file(grid_csv));
  std::vector<std::filesystem::path> written;
  for (const auto& f : render_svgs(csv)) {
    const auto path = std::filesystem::path(out_dir) / f.name;
    io::atomic_write(path, f.content);
    written.push_back(path);
  }
  return written;
}

}  // namespace prescreen::render
