#pragma once

// Flat key = value experiment configuration.
//
//   # comment
//   J_per_mm = 0.0781
//   U_per_mm = 0, 0.0174, 0.1043
//
// Units live in the key names. Unknown keys are rejected so that typos
// cannot silently fall back to defaults.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bhwg {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct ConfigKey {
  const char* name;
  const char* fallback;
  const char* help;
};

inline const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> keys = {
      {"N", "9", "particle number"},
      {"J_per_mm", "0.0781", "hopping rate"},
      {"U_per_mm", "0, 0.0174, 0.1043", "interaction strengths, one run each"},
      {"lambda_um", "0.633", "vacuum wavelength"},
      {"n_s", "1.45", "substrate index"},
      {"channel_w_um", "2", "channel half-width"},
      {"channel_Dx_um", "0.3", "diffusion length"},
      {"dn_ref", "0.002", "reference index contrast"},
      {"d_ref_um", "8", "reference spacing"},
      {"fit_d_min_um", "6.5", "coupling fit range start"},
      {"fit_d_max_um", "9.5", "coupling fit range end"},
      {"fit_samples", "7", "coupling fit sample count"},
      {"design_refinement", "automatic", "first_order | coefficients | spectral | automatic"},
      {"mode_dx_um", "0.02", "mode solver grid step"},
      {"mode_margin_um", "25", "mode solver window beyond outer channels"},
      {"launch_site", "0", "excited waveguide"},
      {"tb_dz_mm", "0.2", "tight-binding sample interval"},
      {"z_end_mm", "100", "propagation length"},
      {"bpm_margin_um", "20", "BPM window beyond outer channel edges"},
      {"bpm_nx", "2048", "BPM transverse samples (power of two)"},
      {"bpm_dz_um", "0.5", "BPM step"},
      {"absorber_width_um", "10", "absorbing layer width"},
      {"absorber_strength_per_um", "0.02", "peak absorber loss rate"},
      {"trace_interval_mm", "0.2", "trace cadence"},
      {"map_interval_mm", "1", "intensity map cadence"},
      {"two_boson_J_per_mm", "0.0781", "two-boson hopping rate"},
      {"two_boson_U_over_J", "0, 4, 8", "two-boson interaction ratios"},
      {"two_boson_t_end_mm", "200", "two-boson time span"},
      {"two_boson_dt_mm", "0.1", "two-boson sample interval"},
      {"period_tolerance", "0.05", "BPM period acceptance, relative"},
      {"modal_tolerance", "0.1", "BPM modal-power acceptance at the revival, per site"},
  };
  return keys;
}

class Config {
 public:
  Config() {
    for (const auto& k : config_schema()) values_[k.name] = k.fallback;
  }

  static Config parse(std::istream& in, const std::string& origin = "<config>") {
    Config c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto t = trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
      try {
        c.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
      } catch (const std::exception& e) {
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config " + path);
    return parse(f, path);
  }

  void set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) throw std::invalid_argument("unknown config key '" + key + "'");
    values_[key] = value;
  }

  /// Applies "key=value".
  void override_with(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("override must be key=value, got '" + assignment + "'");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
  }

  const std::string& raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw std::invalid_argument("unknown config key '" + key + "'");
    return it->second;
  }

  double number(const std::string& key) const {
    const auto& s = raw(key);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || trim(s.substr(used)).size())
      throw std::invalid_argument("config key '" + key + "': '" + s + "' is not a number");
    return v;
  }

  long integer(const std::string& key) const {
    const double v = number(key);
    if (v != double(static_cast<long>(v))) throw std::invalid_argument("config key '" + key + "' must be an integer");
    return static_cast<long>(v);
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(raw(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto t = trim(item);
      if (t.empty()) continue;
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(t, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != t.size()) throw std::invalid_argument("config key '" + key + "': '" + t + "' is not a number");
      out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("config key '" + key + "' is empty");
    return out;
  }

  /// Canonical text: every key in sorted order, values whitespace-trimmed.
  std::string canonical() const {
    std::string s;
    for (const auto& [k, v] : values_) s += k + "=" + v + "\n";
    return s;
  }

  std::string hash() const { return hex64(fnv1a64(canonical())); }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace bhwg
