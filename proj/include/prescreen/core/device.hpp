#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "prescreen/core/types.hpp"
#include "prescreen/error.hpp"

namespace prescreen::core {

/// Resolution -> physical scale rows, as read from `width_px,height_px,ppi,scale_factor`.
class DeviceTable {
public:
  DeviceTable() = default;
  explicit DeviceTable(std::vector<DeviceProfile> rows) : rows_(std::move(rows)) {
    for (const auto& r : rows_) validate(r);
  }

  static DeviceTable parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error("core.DeviceTable", "empty device table");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "width_px,height_px,ppi,scale_factor")
      throw Error("core.DeviceTable", "unexpected header '" + line + "'");
    std::vector<DeviceProfile> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string w, h, ppi, scale, extra;
      if (!std::getline(ss, w, ',') || !std::getline(ss, h, ',') || !std::getline(ss, ppi, ',') ||
          !std::getline(ss, scale, ',') || std::getline(ss, extra, ','))
        throw Error("core.DeviceTable", "line " + std::to_string(line_no) + ": expected 4 fields");
      try {
        rows.push_back({{std::stoi(w), std::stoi(h)}, std::stod(ppi), std::stoi(scale)});
      } catch (const std::logic_error&) {
        throw Error("core.DeviceTable", "line " + std::to_string(line_no) + ": non-numeric field");
      }
    }
    return DeviceTable(std::move(rows));
  }

  static DeviceTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("core.Unreadable", "cannot open device table " + path);
    return parse_csv(in);
  }

  /// Orientation-insensitive lookup. Throws core.NoMatch or core.AmbiguousMatch.
  DeviceProfile lookup(Resolution r) const {
    const DeviceProfile* found = nullptr;
    int matches = 0;
    for (const auto& row : rows_) {
      const auto& rr = row.logical_resolution;
      const bool same = rr.width_px == r.width_px && rr.height_px == r.height_px;
      const bool swapped = rr.width_px == r.height_px && rr.height_px == r.width_px;
      if (same || swapped) {
        ++matches;
        found = &row;
      }
    }
    const std::string res = std::to_string(r.width_px) + "x" + std::to_string(r.height_px);
    if (matches == 0) throw Error("core.NoMatch", "no device row for resolution " + res);
    if (matches > 1) throw Error("core.AmbiguousMatch", std::to_string(matches) + " device rows match " + res);
    return *found;
  }

  const std::vector<DeviceProfile>& rows() const noexcept { return rows_; }

  std::string to_csv() const {
    std::ostringstream out;
    out << "width_px,height_px,ppi,scale_factor\n";
    for (const auto& r : rows_)
      out << r.logical_resolution.width_px << ',' << r.logical_resolution.height_px << ',' << r.ppi << ','
          << r.scale_factor << '\n';
    return out.str();
  }

private:
  static void validate(const DeviceProfile& p) {
    if (!(p.ppi > 0.0)) throw Error("core.DeviceTable", "nonpositive ppi");
    if (p.scale_factor < 1 || p.scale_factor > 3) throw Error("core.DeviceTable", "scale_factor must be 1, 2 or 3");
    if (p.logical_resolution.width_px <= 0 || p.logical_resolution.height_px <= 0)
      throw Error("core.DeviceTable", "nonpositive resolution");
  }

  std::vector<DeviceProfile> rows_;
};

inline DeviceProfile lookup_device(Resolution r, const DeviceTable& table) { return table.lookup(r); }

inline double px_to_mm(double length_px, const DeviceProfile& profile) {
  if (!(length_px >= 0.0)) throw Error("core.NegativeLength", "px_to_mm requires length >= 0");
  return length_px * 25.4 * profile.scale_factor / profile.ppi;
}

inline double mm_to_px(double length_mm, const DeviceProfile& profile) {
  return length_mm * profile.ppi / (25.4 * profile.scale_factor);
}

/// iPhone logical resolutions with their panel density, matching data/devices.csv.
/// 414x896 is deliberately present twice (two panels share it), so sessions
/// reporting it cannot be resolved.
inline DeviceTable builtin_iphone_table() {
  return DeviceTable({
      {{375, 667}, 326, 2},  // 6/6s/7/8/SE2/SE3
      {{414, 736}, 401, 3},  // 6+/7+/8+
      {{375, 812}, 458, 3},  // X/XS/11 Pro
      {{414, 896}, 326, 2},  // XR/11
      {{414, 896}, 458, 3},  // XS Max/11 Pro Max
      {{360, 780}, 476, 3},  // 12 mini/13 mini
      {{390, 844}, 460, 3},  // 12/12 Pro/13/13 Pro/14
      {{428, 926}, 458, 3},  // 12 Pro Max/13 Pro Max/14 Plus
      {{393, 852}, 460, 3},  // 14 Pro/15/15 Pro/16
      {{430, 932}, 460, 3},  // 14 Pro Max/15 Plus/15 Pro Max/16 Plus
      {{402, 874}, 460, 3},  // 16 Pro
      {{440, 956}, 460, 3},  // 16 Pro Max
  });
}

}  // namespace prescreen::core
