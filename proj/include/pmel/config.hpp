#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pmel/errors.hpp"

namespace pmel {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace detail

// Flat typed key-value configuration with a closed schema: every key has
// a default, unknown sections or keys are rejected by name, and the
// resolved state can be echoed as INI text that parses back to itself.
class ExperimentConfig {
 public:
  using Table = std::map<std::string, std::map<std::string, std::string>>;

  static const Table& schema_defaults() {
    static const Table defaults = {
        {"problem",
         {{"m", "2"},
          {"K", "2"},
          {"dim", "1"},
          {"cells", "128"},
          {"u0", "bump"},
          {"u0_amp", "1"},
          {"u0_center_x", "0.5"},
          {"u0_center_y", "0.5"},
          {"u0_width", "0.25"},
          {"u0_freq", "1"},
          {"u0_value", "0"},
          {"modes", "sinusoidal(amp=1,freq=1)"}}},
        {"solver",
         {{"dt", "0.001"},
          {"newton_tol", "1e-10"},
          {"newton_max_iter", "30"},
          {"regularization", "0"}}},
        {"experiment",
         {{"driver", "solve"},
          {"horizon", "0.5"},
          {"eps", "0"},
          {"seed", "42"},
          {"control", "zero"},
          {"control_steps", "16"},
          {"control_energy", "0.5"},
          {"control_seed", "7"},
          {"eps_list", "0.1,0.01,0.001"},
          {"n_list", "4,16,64"},
          {"samples", "32"},
          {"study", "small-noise"},
          {"osc_amp", "1"},
          {"lambda", "50"},
          {"lambda_rounds", "3"},
          {"misfit_tol", "0.01"},
          {"max_iters", "80"},
          {"step_init", "0.25"},
          {"target", "uncontrolled"},
          {"target_energy", "0.5"},
          {"target_seed", "7"},
          {"u_lo", "-50"},
          {"u_hi", "50"},
          {"nu", "501"},
          {"nx", "32"}}},
        {"output",
         {{"directory", "out"},
          {"field_format", "csv"},
          {"write_fields", "false"}}}};
    return defaults;
  }

  ExperimentConfig() : values_(schema_defaults()) {}

  static ExperimentConfig from_string(const std::string& text,
                                      const std::vector<std::string>& overrides = {}) {
    ExperimentConfig cfg;
    cfg.parse_ini(text);
    cfg.apply_overrides(overrides);
    return cfg;
  }

  static ExperimentConfig from_file(const std::string& path,
                                    const std::vector<std::string>& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return from_string(os.str(), overrides);
  }

  const std::string& get(const std::string& section, const std::string& key) const {
    const auto sit = values_.find(section);
    if (sit == values_.end()) throw ConfigError("unknown config section [" + section + "]");
    const auto kit = sit->second.find(key);
    if (kit == sit->second.end()) {
      throw ConfigError("unknown config key " + section + "." + key);
    }
    return kit->second;
  }

  void set(const std::string& section, const std::string& key, const std::string& value) {
    const auto sit = values_.find(section);
    if (sit == values_.end()) throw ConfigError("unknown config section [" + section + "]");
    const auto kit = sit->second.find(key);
    if (kit == sit->second.end()) {
      throw ConfigError("unknown config key " + section + "." + key);
    }
    kit->second = detail::trim(value);
  }

  double get_double(const std::string& section, const std::string& key) const {
    return parse_double(get(section, key), section + "." + key);
  }

  int get_int(const std::string& section, const std::string& key) const {
    const std::string& v = get(section, key);
    char* end = nullptr;
    const long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0') {
      throw ConfigError("config value " + section + "." + key + " = '" + v +
                        "' is not an integer");
    }
    return static_cast<int>(x);
  }

  std::uint64_t get_seed(const std::string& section, const std::string& key) const {
    const std::string& v = get(section, key);
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0') {
      throw ConfigError("config value " + section + "." + key + " = '" + v +
                        "' is not a seed");
    }
    return static_cast<std::uint64_t>(x);
  }

  bool get_bool(const std::string& section, const std::string& key) const {
    const std::string& v = get(section, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config value " + section + "." + key + " = '" + v + "' is not a bool");
  }

  std::vector<double> get_double_list(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    for (const std::string& piece : split(get(section, key), ',')) {
      out.push_back(parse_double(piece, section + "." + key));
    }
    return out;
  }

  std::vector<int> get_int_list(const std::string& section, const std::string& key) const {
    std::vector<int> out;
    for (const std::string& piece : split(get(section, key), ',')) {
      char* end = nullptr;
      const long x = std::strtol(piece.c_str(), &end, 10);
      if (end == piece.c_str() || *end != '\0') {
        throw ConfigError("config value " + section + "." + key + " has non-integer entry '" +
                          piece + "'");
      }
      out.push_back(static_cast<int>(x));
    }
    return out;
  }

  // Canonical INI echo of the fully resolved state (defaults plus file
  // plus overrides); parsing it back reproduces this object.
  std::string resolved_ini() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [section, keys] : values_) {
      if (!first) os << "\n";
      first = false;
      os << "[" << section << "]\n";
      for (const auto& [key, value] : keys) os << key << " = " << value << "\n";
    }
    return os.str();
  }

  const Table& table() const { return values_; }

  bool operator==(const ExperimentConfig& other) const { return values_ == other.values_; }

 private:
  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == sep) {
        out.push_back(detail::trim(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    out.push_back(detail::trim(cur));
    while (!out.empty() && out.back().empty()) out.pop_back();
    for (const std::string& piece : out) {
      if (piece.empty()) throw ConfigError("empty entry in list '" + s + "'");
    }
    return out;
  }

  static double parse_double(const std::string& v, const std::string& where) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0') {
      throw ConfigError("config value " + where + " = '" + v + "' is not a number");
    }
    return x;
  }

  void parse_ini(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::map<std::string, std::map<std::string, bool>> seen;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') {
          throw ConfigError("config line " + std::to_string(lineno) + ": malformed section '" +
                            line + "'");
        }
        section = detail::trim(line.substr(1, line.size() - 2));
        if (values_.find(section) == values_.end()) {
          throw ConfigError("unknown config section [" + section + "]");
        }
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
      }
      if (section.empty()) {
        throw ConfigError("config line " + std::to_string(lineno) + ": key outside any section");
      }
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      if (seen[section][key]) {
        throw ConfigError("duplicate config key " + section + "." + key);
      }
      seen[section][key] = true;
      set(section, key, value);
    }
  }

  // Override syntax: section.key=value.
  void apply_overrides(const std::vector<std::string>& overrides) {
    for (const std::string& ov : overrides) {
      const std::size_t eq = ov.find('=');
      const std::size_t dot = ov.find('.');
      if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
        throw ConfigError("bad override '" + ov + "', expected section.key=value");
      }
      set(detail::trim(ov.substr(0, dot)), detail::trim(ov.substr(dot + 1, eq - dot - 1)),
          detail::trim(ov.substr(eq + 1)));
    }
  }

  Table values_;
};

}  // namespace pmel
