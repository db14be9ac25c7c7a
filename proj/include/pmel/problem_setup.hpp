#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "pmel/config.hpp"
#include "pmel/control.hpp"
#include "pmel/errors.hpp"
#include "pmel/grid.hpp"
#include "pmel/noise.hpp"
#include "pmel/nonlinearity.hpp"
#include "pmel/stepper.hpp"

namespace pmel {

namespace detail {

struct ModeSpec {
  std::string name;
  std::map<std::string, double> args;
};

// Grammar: entries separated by ';', each 'name' or 'name(k=v,k=v,...)'.
inline std::vector<ModeSpec> parse_mode_specs(const std::string& text) {
  std::vector<ModeSpec> specs;
  std::string entry;
  std::vector<std::string> entries;
  for (char c : text) {
    if (c == ';') {
      entries.push_back(entry);
      entry.clear();
    } else {
      entry += c;
    }
  }
  entries.push_back(entry);
  for (std::string& raw : entries) {
    const std::string e = trim(raw);
    if (e.empty()) continue;
    ModeSpec spec;
    const std::size_t open = e.find('(');
    if (open == std::string::npos) {
      spec.name = e;
    } else {
      if (e.back() != ')') throw ConfigError("mode spec '" + e + "': missing ')'");
      spec.name = trim(e.substr(0, open));
      const std::string args = e.substr(open + 1, e.size() - open - 2);
      std::string piece;
      std::vector<std::string> pieces;
      for (char c : args) {
        if (c == ',') {
          pieces.push_back(piece);
          piece.clear();
        } else {
          piece += c;
        }
      }
      pieces.push_back(piece);
      for (std::string& p : pieces) {
        const std::string kv = trim(p);
        if (kv.empty()) continue;
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
          throw ConfigError("mode spec '" + e + "': expected key=value, got '" + kv + "'");
        }
        char* end = nullptr;
        const std::string vs = trim(kv.substr(eq + 1));
        const double v = std::strtod(vs.c_str(), &end);
        if (end == vs.c_str() || *end != '\0') {
          throw ConfigError("mode spec '" + e + "': non-numeric value '" + vs + "'");
        }
        spec.args[trim(kv.substr(0, eq))] = v;
      }
    }
    specs.push_back(std::move(spec));
  }
  if (specs.empty()) throw ConfigError("modes: at least one mode required");
  return specs;
}

inline double take_arg(ModeSpec& spec, const std::string& key, double fallback) {
  const auto it = spec.args.find(key);
  if (it == spec.args.end()) return fallback;
  const double v = it->second;
  spec.args.erase(it);
  return v;
}

}  // namespace detail

inline Nonlinearity build_nonlinearity(const ExperimentConfig& cfg) {
  return Nonlinearity::canonical(cfg.get_double("problem", "m"), cfg.get_double("problem", "K"));
}

inline NoiseFamily build_noise(const ExperimentConfig& cfg) {
  std::vector<detail::ModeSpec> specs = detail::parse_mode_specs(cfg.get("problem", "modes"));
  std::vector<ModeFn> modes;
  for (detail::ModeSpec& spec : specs) {
    if (spec.name == "constant") {
      modes.push_back(constant_mode(detail::take_arg(spec, "c", 1.0)));
    } else if (spec.name == "sinusoidal") {
      const double amp = detail::take_arg(spec, "amp", 1.0);
      const int freq = static_cast<int>(detail::take_arg(spec, "freq", 1.0));
      const int axis = static_cast<int>(detail::take_arg(spec, "axis", 0.0));
      modes.push_back(sinusoidal_in_x_mode(amp, freq, axis));
    } else if (spec.name == "clipped-linear") {
      const double slope = detail::take_arg(spec, "slope", 1.0);
      const double cap = detail::take_arg(spec, "cap", 5.0);
      modes.push_back(clipped_linear_in_u_mode(slope, cap));
    } else {
      throw ConfigError("unknown noise mode '" + spec.name +
                        "' (known: constant, sinusoidal, clipped-linear)");
    }
    if (!spec.args.empty()) {
      throw ConfigError("mode '" + spec.name + "': unknown argument '" +
                        spec.args.begin()->first + "'");
    }
  }
  return NoiseFamily(std::move(modes), cfg.get_double("problem", "K"));
}

inline PeriodicGrid build_grid(const ExperimentConfig& cfg) {
  return PeriodicGrid(cfg.get_int("problem", "dim"), cfg.get_int("problem", "cells"));
}

inline Field build_initial_state(const ExperimentConfig& cfg) {
  const PeriodicGrid grid = build_grid(cfg);
  const std::string kind = cfg.get("problem", "u0");
  if (kind == "bump") {
    return make_bump(grid, cfg.get_double("problem", "u0_amp"),
                     {cfg.get_double("problem", "u0_center_x"),
                      cfg.get_double("problem", "u0_center_y")},
                     cfg.get_double("problem", "u0_width"));
  }
  if (kind == "sine") {
    return make_sine(grid, cfg.get_double("problem", "u0_amp"),
                     cfg.get_int("problem", "u0_freq"));
  }
  if (kind == "constant") {
    return make_constant(grid, cfg.get_double("problem", "u0_value"));
  }
  if (kind == "zero") return Field(grid);
  throw ConfigError("unknown initial state kind '" + kind +
                    "' (known: bump, sine, constant, zero)");
}

inline SolverConfig build_solver_config(const ExperimentConfig& cfg) {
  SolverConfig sc;
  sc.dt = cfg.get_double("solver", "dt");
  sc.newton_tol = cfg.get_double("solver", "newton_tol");
  sc.newton_max_iter = cfg.get_int("solver", "newton_max_iter");
  const int reg = cfg.get_int("solver", "regularization");
  if (reg < 0) throw ConfigError("solver.regularization must be >= 0 (0 disables)");
  if (reg > 0) sc.regularization_index = reg;
  return sc;
}

inline Control build_control(const ExperimentConfig& cfg, std::size_t n_modes) {
  const std::string kind = cfg.get("experiment", "control");
  const double horizon = cfg.get_double("experiment", "horizon");
  const int steps = cfg.get_int("experiment", "control_steps");
  if (kind == "zero") return Control::zero(n_modes, horizon, steps);
  if (kind == "random") {
    return Control::random(n_modes, horizon, steps, cfg.get_seed("experiment", "control_seed"),
                           cfg.get_double("experiment", "control_energy"));
  }
  throw ConfigError("unknown control kind '" + kind + "' (known: zero, random)");
}

}  // namespace pmel
