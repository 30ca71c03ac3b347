#pragma once

// Plain-text tables and binary intensity maps.
//
// Tables are comma-separated with '#'-prefixed "key: value" metadata lines
// ahead of the column header. Maps are a fixed little-endian layout:
//
//   char[8]  "BHWGMAP1"
//   u64      nz, nx
//   f64      x_min_um, x_max_um, z_min_mm, z_max_mm
//   char[16] config hash (hex)
//   f64      nz * nx intensities, row-major (z then x)

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bhwg/bpm.hpp"
#include "bhwg/config.hpp"
#include "bhwg/waveguide_optics.hpp"

namespace bhwg {

inline std::string fmt_double(double v, int digits = 17) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

struct Table {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  const std::string* find_meta(const std::string& key) const {
    for (const auto& [k, v] : meta)
      if (k == key) return &v;
    return nullptr;
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw std::out_of_range("table has no column '" + name + "'");
  }

  std::vector<double> col(const std::string& name) const {
    const auto c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
  }
};

inline void write_table(std::ostream& os, const Table& t, int digits = 17) {
  for (const auto& [k, v] : t.meta) os << "# " << k << ": " << v << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& r : t.rows) {
    if (r.size() != t.columns.size()) throw std::logic_error("write_table: ragged row");
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << fmt_double(r[i], digits);
    os << '\n';
  }
}

inline void write_table(const std::string& path, const Table& t, int digits = 17) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  write_table(f, t, digits);
  if (!f) throw std::runtime_error("write failed: " + path);
}

inline Table read_table(std::istream& is, const std::string& origin = "<table>") {
  Table t;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon != std::string::npos) t.meta.emplace_back(trim(line.substr(1, colon - 1)), trim(line.substr(colon + 1)));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (t.columns.empty()) {
      t.columns = std::move(cells);
      continue;
    }
    if (cells.size() != t.columns.size())
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(t.columns.size()) + " fields");
    std::vector<double> row;
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != c.size() || c.empty())
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty()) throw std::runtime_error(origin + ": no column header");
  return t;
}

inline Table read_table(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  return read_table(f, path);
}

/// Columns l, x_um, d_um, dn, kappa_per_mm, V_per_mm. d and kappa are nan where undefined.
inline Table design_table(const ArrayDesign& d, const std::string& config_hash) {
  Table t;
  t.meta = {{"table", "array design"},
            {"config_hash", config_hash},
            {"units", "x_um um; d_um um (x_l - x_{l-1}); dn dimensionless; kappa_per_mm mm^-1 (l,l+1); V_per_mm mm^-1"},
            {"N", std::to_string(d.params.N)},
            {"J_per_mm", fmt_double(d.params.J)},
            {"U_per_mm", fmt_double(d.params.U)},
            {"refinement", to_string(d.report.used)}};
  t.columns = {"l", "x_um", "d_um", "dn", "kappa_per_mm", "V_per_mm"};
  const auto& L = d.layout;
  for (std::size_t l = 0; l < L.channels(); ++l) {
    t.rows.push_back({double(l), L.positions[l], l ? L.positions[l] - L.positions[l - 1] : std::nan(""),
                      L.contrasts[l], l < d.realized.kappa.size() ? d.realized.kappa[l] : std::nan(""),
                      d.realized.V[l]});
  }
  return t;
}

/// Rebuilds the layout stored in a design table; re-validates it.
inline ArrayLayout layout_from_table(const Table& t, const ChannelProfile& ch, const MaterialContext& mat) {
  ArrayLayout L;
  L.channel = ch;
  L.material = mat;
  L.positions = t.col("x_um");
  L.contrasts = t.col("dn");
  const auto l = t.col("l");
  for (std::size_t i = 0; i < l.size(); ++i)
    if (l[i] != double(i)) throw std::runtime_error("design table: site indices out of order");
  const auto d = t.col("d_um");
  for (std::size_t i = 1; i < d.size(); ++i)
    if (std::abs(d[i] - (L.positions[i] - L.positions[i - 1])) > 1e-9)
      throw std::runtime_error("design table: spacing column inconsistent with positions");
  L.validate();
  return L;
}

inline Table profile_table(const ArrayLayout& L, double x_min, double x_max, std::size_t samples,
                           const std::string& config_hash) {
  Table t;
  t.meta = {{"table", "index profile"}, {"config_hash", config_hash}, {"units", "x_um um; dn = n(x) - n_s dimensionless"}};
  t.columns = {"x_um", "dn"};
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = x_min + (x_max - x_min) * double(i) / double(samples - 1);
    t.rows.push_back({x, index_profile(L, x)});
  }
  return t;
}

inline constexpr char kMapMagic[8] = {'B', 'H', 'W', 'G', 'M', 'A', 'P', '1'};

namespace detail {
template <class T>
void put_le(std::ostream& os, T v) {
  std::uint64_t bits;
  static_assert(sizeof(T) == 8);
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

template <class T>
T get_le(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("intensity map: truncated file");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t(b[i]) << (8 * i);
  T v;
  std::memcpy(&v, &bits, 8);
  return v;
}
}  // namespace detail

inline void write_map(const std::string& path, const IntensityMap& m, const std::string& config_hash) {
  if (m.data.size() != m.nz * m.nx) throw std::logic_error("write_map: data size mismatch");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.write(kMapMagic, 8);
  detail::put_le<std::uint64_t>(f, m.nz);
  detail::put_le<std::uint64_t>(f, m.nx);
  detail::put_le(f, m.x_min);
  detail::put_le(f, m.x_max);
  detail::put_le(f, m.z_min);
  detail::put_le(f, m.z_max);
  std::string h = config_hash;
  h.resize(16, ' ');
  f.write(h.data(), 16);
  for (double v : m.data) detail::put_le(f, v);
  if (!f) throw std::runtime_error("write failed: " + path);
}

struct StoredMap {
  IntensityMap map;
  std::string config_hash;
};

inline StoredMap read_map(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  char magic[8];
  if (!f.read(magic, 8) || std::memcmp(magic, kMapMagic, 8) != 0)
    throw std::runtime_error(path + ": not an intensity map");
  StoredMap s;
  s.map.nz = detail::get_le<std::uint64_t>(f);
  s.map.nx = detail::get_le<std::uint64_t>(f);
  s.map.x_min = detail::get_le<double>(f);
  s.map.x_max = detail::get_le<double>(f);
  s.map.z_min = detail::get_le<double>(f);
  s.map.z_max = detail::get_le<double>(f);
  char h[16];
  if (!f.read(h, 16)) throw std::runtime_error(path + ": truncated header");
  s.config_hash = trim(std::string_view(h, 16));
  s.map.data.resize(s.map.nz * s.map.nx);
  for (auto& v : s.map.data) v = detail::get_le<double>(f);
  return s;
}

/// Character-ramp rendering, z down the page, x across, `cols` wide.
inline std::string ascii_preview(const IntensityMap& m, std::size_t cols = 96, std::size_t max_rows = 101) {
  static constexpr char ramp[] = " .:-=+*#%@";
  constexpr std::size_t levels = sizeof(ramp) - 1;
  std::ostringstream os;
  if (m.nz == 0 || m.nx == 0) return {};
  const double peak = *std::max_element(m.data.begin(), m.data.end());
  const std::size_t rows = std::min(m.nz, max_rows);
  cols = std::min(cols, m.nx);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t iz = rows > 1 ? r * (m.nz - 1) / (rows - 1) : 0;
    char label[32];
    std::snprintf(label, sizeof label, "%8.2f |", m.z_min + (m.z_max - m.z_min) * double(iz) / double(std::max<std::size_t>(m.nz - 1, 1)));
    os << label;
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t a = c * m.nx / cols, b = (c + 1) * m.nx / cols;
      double v = 0.0;
      for (std::size_t i = a; i < b; ++i) v = std::max(v, m.data[iz * m.nx + i]);
      const double s = peak > 0.0 ? std::sqrt(v / peak) : 0.0;
      os << ramp[std::min(levels - 1, static_cast<std::size_t>(s * double(levels)))];
    }
    os << "|\n";
  }
  return os.str();
}

}  // namespace bhwg
