#pragma once

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmel/brownian.hpp"
#include "pmel/config.hpp"
#include "pmel/field_io.hpp"
#include "pmel/hypothesis.hpp"
#include "pmel/ldp.hpp"
#include "pmel/mollify.hpp"
#include "pmel/problem_setup.hpp"
#include "pmel/skeleton.hpp"
#include "pmel/spde.hpp"
#include "pmel/version.hpp"

namespace pmel {

struct CheckOutcome {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline std::string output_directory(const ExperimentConfig& cfg) {
  const char* root = std::getenv("PMEL_OUTPUT_ROOT");
  const std::string dir = cfg.get("output", "directory");
  if (root != nullptr && *root != '\0') {
    return (std::filesystem::path(root) / dir).string();
  }
  return dir;
}

inline void save_field(const Field& f, const std::string& stem, const std::string& format,
                       const std::string& outdir) {
  if (format == "csv") {
    save_field_csv(f, (std::filesystem::path(outdir) / (stem + ".csv")).string());
  } else if (format == "binary") {
    save_field_binary(f, (std::filesystem::path(outdir) / (stem + ".bin")).string());
  } else {
    throw ConfigError("unknown output.field_format '" + format + "' (known: csv, binary)");
  }
}

inline std::vector<CheckOutcome> run_solve_driver(const ExperimentConfig& cfg,
                                                  const std::string& outdir) {
  const Nonlinearity nl = build_nonlinearity(cfg);
  const NoiseFamily g = build_noise(cfg);
  const Field u0 = build_initial_state(cfg);
  const SolverConfig scfg = build_solver_config(cfg);
  const double eps = cfg.get_double("experiment", "eps");
  const Control h = build_control(cfg, g.n_modes());

  SolveResult res = [&] {
    if (eps > 0.0) {
      const int J = steps_for(h.horizon(), scfg.dt);
      BrownianPath path(cfg.get_seed("experiment", "seed"), g.n_modes(), J, scfg.dt);
      return solve_controlled_spde(nl, g, u0, h, eps, path, scfg);
    }
    return solve_skeleton(nl, g, u0, h, scfg);
  }();

  const double m = nl.m();
  std::ostringstream csv;
  csv << "step,time,mass,drift_mass,state_min,state_max,l1_norm,lmp1_norm,"
         "newton_iterations,newton_residual\n";
  const Field& start = res.trajectory.front();
  csv << "0,0," << format_double(start.mass()) << ",0," << format_double(start.min_value())
      << "," << format_double(start.max_value()) << "," << format_double(lp_norm(start, 1.0))
      << "," << format_double(lp_norm(start, m + 1.0)) << ",0,0\n";
  double sup_lmp1 = lp_norm(start, m + 1.0);
  for (std::size_t j = 0; j < res.steps.size(); ++j) {
    const StepDiagnostics& d = res.steps[j];
    const Field& state = res.trajectory.states[j + 1];
    const double lmp1 = lp_norm(state, m + 1.0);
    sup_lmp1 = std::max(sup_lmp1, lmp1);
    csv << (j + 1) << "," << format_double(res.trajectory.times[j + 1]) << ","
        << format_double(d.mass) << "," << format_double(d.drift_mass) << ","
        << format_double(d.state_min) << "," << format_double(d.state_max) << ","
        << format_double(lp_norm(state, 1.0)) << "," << format_double(lmp1) << ","
        << d.newton_iterations << "," << format_double(d.newton_residual) << "\n";
  }
  write_file_atomic((std::filesystem::path(outdir) / "solve_summary.csv").string(), csv.str());

  if (cfg.get_bool("output", "write_fields")) {
    const std::string format = cfg.get("output", "field_format");
    save_field(res.trajectory.front(), "initial_state", format, outdir);
    save_field(res.trajectory.back(), "terminal_state", format, outdir);
  }

  std::vector<CheckOutcome> checks;
  {
    const double tol = scfg.newton_tol + 1e-12 * (1.0 + std::abs(start.mass()));
    std::ostringstream d;
    d << "max per-step defect " << format_double(res.mass_identity_defect) << " vs tol "
      << format_double(tol);
    checks.push_back({"mass_identity", res.mass_identity_defect <= tol, d.str()});
  }
  {
    const double init = lp_norm(start, m + 1.0);
    const double bound = 10.0 * init + 1.0;
    std::ostringstream d;
    d << "sup_t |u|_{m+1} = " << format_double(sup_lmp1) << " vs bound " << format_double(bound);
    checks.push_back({"energy_growth", sup_lmp1 <= bound, d.str()});
  }
  return checks;
}

inline std::vector<CheckOutcome> run_mollify_report(const ExperimentConfig& cfg,
                                                    const std::string& outdir) {
  const Nonlinearity nl = build_nonlinearity(cfg);
  const NoiseFamily g = build_noise(cfg);
  const Field u0 = build_initial_state(cfg);
  const std::vector<int> n_list = cfg.get_int_list("experiment", "n_list");
  SampleSpec spec;
  spec.dim = cfg.get_int("problem", "dim");
  spec.nx = cfg.get_int("experiment", "nx");
  spec.u_lo = cfg.get_double("experiment", "u_lo");
  spec.u_hi = cfg.get_double("experiment", "u_hi");
  spec.nu = cfg.get_int("experiment", "nu");

  std::ostringstream csv;
  csv << "n,theta_n,min_a_n,lower_bound,sup_deviation,deviation_bound,noise_distance\n";
  std::vector<CheckOutcome> checks;
  std::vector<double> dists;
  for (int n : n_list) {
    const MollifiedCoefficients mc = mollify(nl, g, u0, n);
    const int points = 10000;
    double min_an = std::numeric_limits<double>::infinity();
    double min_at = 0.0;
    double sup_dev = 0.0;
    double dev_at = 0.0;
    for (int i = 0; i <= points; ++i) {
      const double r = -n + 2.0 * n * i / static_cast<double>(points);
      const double an = mc.a_n(r);
      if (an < min_an) {
        min_an = an;
        min_at = r;
      }
      const double dev = std::abs(an - nl.a(r));
      if (dev > sup_dev) {
        sup_dev = dev;
        dev_at = r;
      }
    }
    const double dist = noise_distance(mc.g_n(), g, nl.m(), spec);
    dists.push_back(dist);
    csv << n << "," << format_double(mc.theta()) << "," << format_double(min_an) << ","
        << format_double(2.0 / n) << "," << format_double(sup_dev) << ","
        << format_double(4.0 / n) << "," << format_double(dist) << "\n";

    {
      std::ostringstream d;
      d << "min a_n = " << format_double(min_an) << " at (n=" << n << ", r=" << min_at
        << "), bound 2/n = " << format_double(2.0 / n);
      checks.push_back({"a_n_lower_bound_n" + std::to_string(n), min_an >= 2.0 / n, d.str()});
    }
    {
      std::ostringstream d;
      d << "sup |a_n - a| = " << format_double(sup_dev) << " at (n=" << n << ", r=" << dev_at
        << "), bound 4/n = " << format_double(4.0 / n);
      checks.push_back(
          {"a_n_deviation_bound_n" + std::to_string(n), sup_dev <= 4.0 / n, d.str()});
    }
  }
  {
    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < dists.size(); ++i) {
      decreasing = decreasing && dists[i + 1] <= dists[i] * (1.0 + 1e-9);
    }
    std::ostringstream d;
    for (std::size_t i = 0; i < dists.size(); ++i) {
      d << (i > 0 ? ", " : "") << "d(g_" << n_list[i] << ", g) = " << format_double(dists[i]);
    }
    checks.push_back({"noise_distance_decreasing", decreasing, d.str()});
  }
  write_file_atomic((std::filesystem::path(outdir) / "mollifier_report.csv").string(),
                    csv.str());
  return checks;
}

inline std::vector<CheckOutcome> run_check_hyp(const ExperimentConfig& cfg,
                                               const std::string& outdir) {
  const Nonlinearity nl = build_nonlinearity(cfg);
  const NoiseFamily g = build_noise(cfg);
  SampleSpec spec;
  spec.dim = cfg.get_int("problem", "dim");
  spec.nx = cfg.get_int("experiment", "nx");
  spec.u_lo = cfg.get_double("experiment", "u_lo");
  spec.u_hi = cfg.get_double("experiment", "u_hi");
  spec.nu = cfg.get_int("experiment", "nu");
  const HypothesisReport report = check_hypothesis_h(nl, g, spec);

  nlohmann::json j;
  j["pass"] = report.pass;
  j["near_zero_ratio"] = report.near_zero_ratio;
  j["near_zero_cut"] = report.near_zero_cut;
  j["clauses"] = nlohmann::json::array();
  for (const ClauseResult& c : report.clauses) {
    j["clauses"].push_back({{"name", c.name},
                            {"pass", c.pass},
                            {"worst_margin", c.worst_margin},
                            {"worst_at", c.worst_at}});
  }
  write_file_atomic((std::filesystem::path(outdir) / "hypothesis.json").string(), j.dump(2) + "\n");

  std::vector<CheckOutcome> checks;
  for (const ClauseResult& c : report.clauses) {
    std::ostringstream d;
    d << "worst margin " << format_double(c.worst_margin) << " at " << c.worst_at;
    std::string name = "hypothesis_" + c.name;
    for (char& ch : name) {
      if (ch == ' ') ch = '_';
    }
    checks.push_back({name, c.pass, d.str()});
  }
  return checks;
}

inline std::vector<CheckOutcome> run_rate_driver(const ExperimentConfig& cfg,
                                                 const std::string& outdir) {
  const Nonlinearity nl = build_nonlinearity(cfg);
  const NoiseFamily g = build_noise(cfg);
  const Field u0 = build_initial_state(cfg);
  const SolverConfig scfg = build_solver_config(cfg);
  const double horizon = cfg.get_double("experiment", "horizon");
  const int control_steps = cfg.get_int("experiment", "control_steps");
  const std::string target_kind = cfg.get("experiment", "target");

  double reference_energy = 0.0;
  Field target = u0;
  if (target_kind == "uncontrolled") {
    target = solve_skeleton(nl, g, u0, Control::zero(g.n_modes(), horizon, control_steps), scfg)
                 .trajectory.back();
  } else if (target_kind == "forward") {
    const Control h_star =
        Control::random(g.n_modes(), horizon, control_steps,
                        cfg.get_seed("experiment", "target_seed"),
                        cfg.get_double("experiment", "target_energy"));
    reference_energy = h_star.energy();
    target = solve_skeleton(nl, g, u0, h_star, scfg).trajectory.back();
  } else {
    throw ConfigError("unknown rate target '" + target_kind + "' (known: uncontrolled, forward)");
  }

  RateProblem problem(target);
  problem.horizon = horizon;
  problem.control_steps = control_steps;
  problem.penalty = cfg.get_double("experiment", "lambda");
  problem.penalty_rounds = cfg.get_int("experiment", "lambda_rounds");
  problem.misfit_tol = cfg.get_double("experiment", "misfit_tol");
  problem.max_iters = cfg.get_int("experiment", "max_iters");
  problem.step_init = cfg.get_double("experiment", "step_init");

  const RateEstimate est = estimate_rate(problem, nl, g, u0, scfg);

  nlohmann::json j;
  j["I_est"] = est.I_est;
  j["misfit"] = est.misfit;
  j["converged"] = est.converged;
  j["target"] = target_kind;
  if (target_kind == "forward") j["reference_energy"] = reference_energy;
  j["control"] = {{"modes", est.h_opt.n_modes()},
                  {"steps", est.h_opt.n_steps()},
                  {"horizon", est.h_opt.horizon()},
                  {"coefficients", est.h_opt.coefficients()}};
  j["iterations"] = nlohmann::json::array();
  for (const IterationRecord& r : est.log) {
    j["iterations"].push_back({{"round", r.round},
                               {"iter", r.iter},
                               {"objective", r.objective},
                               {"energy", r.energy},
                               {"misfit", r.misfit},
                               {"step", r.step}});
  }
  write_file_atomic((std::filesystem::path(outdir) / "rate.json").string(), j.dump(2) + "\n");

  std::ostringstream csv;
  csv << "round,iter,objective,energy,misfit,step\n";
  for (const IterationRecord& r : est.log) {
    csv << r.round << "," << r.iter << "," << format_double(r.objective) << ","
        << format_double(r.energy) << "," << format_double(r.misfit) << ","
        << format_double(r.step) << "\n";
  }
  write_file_atomic((std::filesystem::path(outdir) / "rate_log.csv").string(), csv.str());

  std::vector<CheckOutcome> checks;
  {
    std::ostringstream d;
    d << "misfit " << format_double(est.misfit) << " vs tol "
      << format_double(problem.misfit_tol);
    checks.push_back({"rate_converged", est.converged, d.str()});
  }
  if (target_kind == "uncontrolled") {
    std::ostringstream d;
    d << "I_est = " << format_double(est.I_est);
    checks.push_back({"rate_zero_target", est.I_est <= 1e-3, d.str()});
  } else {
    std::ostringstream d;
    d << "I_est = " << format_double(est.I_est) << " vs 1.1 E* = "
      << format_double(1.1 * reference_energy);
    checks.push_back({"rate_energy_bound", est.I_est <= 1.1 * reference_energy, d.str()});
  }
  return checks;
}

inline std::vector<CheckOutcome> run_ldp_verify(const ExperimentConfig& cfg,
                                                const std::string& outdir) {
  const Nonlinearity nl = build_nonlinearity(cfg);
  const NoiseFamily g = build_noise(cfg);
  const Field u0 = build_initial_state(cfg);
  const SolverConfig scfg = build_solver_config(cfg);
  const Control h = build_control(cfg, g.n_modes());
  const std::vector<double> eps_list = cfg.get_double_list("experiment", "eps_list");
  const std::string study = cfg.get("experiment", "study");

  std::vector<CheckOutcome> checks;
  if (study == "small-noise") {
    const std::vector<SmallNoiseRow> rows =
        small_noise_experiment(nl, g, u0, h, eps_list, cfg.get_int("experiment", "samples"),
                               scfg, cfg.get_seed("experiment", "seed"));
    std::ostringstream csv;
    csv << "eps,median_l1,p90_l1,samples,seed_base\n";
    for (const SmallNoiseRow& r : rows) {
      csv << format_double(r.eps) << "," << format_double(r.median_l1) << ","
          << format_double(r.p90_l1) << "," << r.samples << "," << r.seed_base << "\n";
    }
    write_file_atomic((std::filesystem::path(outdir) / "small_noise.csv").string(), csv.str());

    bool monotone = true;
    std::ostringstream d;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0) monotone = monotone && rows[i].median_l1 <= rows[i - 1].median_l1 * 1.10;
      d << (i > 0 ? ", " : "") << "median(" << format_double(rows[i].eps)
        << ") = " << format_double(rows[i].median_l1);
    }
    checks.push_back({"small_noise_medians_monotone", monotone, d.str()});
  } else if (study == "weak-continuity") {
    const std::vector<WeakContinuityRow> rows = weak_continuity_experiment(
        nl, g, u0, h, eps_list, cfg.get_double("experiment", "osc_amp"), scfg);
    std::ostringstream csv;
    csv << "eps_osc,path_distance\n";
    for (const WeakContinuityRow& r : rows) {
      csv << format_double(r.eps_osc) << "," << format_double(r.path_distance) << "\n";
    }
    write_file_atomic((std::filesystem::path(outdir) / "weak_continuity.csv").string(),
                      csv.str());

    bool monotone = true;
    std::ostringstream d;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0) monotone = monotone && rows[i].path_distance <= rows[i - 1].path_distance * 1.10;
      d << (i > 0 ? ", " : "") << "d(" << format_double(rows[i].eps_osc)
        << ") = " << format_double(rows[i].path_distance);
    }
    checks.push_back({"weak_continuity_monotone", monotone, d.str()});
    const bool quarter = rows.back().path_distance <= 0.25 * rows.front().path_distance;
    std::ostringstream dq;
    dq << "final " << format_double(rows.back().path_distance) << " vs 0.25 * first = "
       << format_double(0.25 * rows.front().path_distance);
    checks.push_back({"weak_continuity_vanishes", quarter, dq.str()});
  } else {
    throw ConfigError("unknown study '" + study + "' (known: small-noise, weak-continuity)");
  }
  return checks;
}

}  // namespace detail

// Runs one configured experiment. Exit status: 0 all checks pass, 1 a
// check failed, 2 configuration error, 3 solver failure.
inline int run(const std::string& config_path, const std::vector<std::string>& overrides,
               std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  try {
    cfg = ExperimentConfig::from_file(config_path, overrides);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }

  std::string outdir;
  std::vector<CheckOutcome> checks;
  std::string driver;
  try {
    driver = cfg.get("experiment", "driver");
    outdir = detail::output_directory(cfg);
    std::filesystem::create_directories(outdir);
    write_file_atomic((std::filesystem::path(outdir) / "config_resolved.ini").string(),
                      cfg.resolved_ini());
    if (driver == "solve") {
      checks = detail::run_solve_driver(cfg, outdir);
    } else if (driver == "rate") {
      checks = detail::run_rate_driver(cfg, outdir);
    } else if (driver == "ldp-verify") {
      checks = detail::run_ldp_verify(cfg, outdir);
    } else if (driver == "mollify-report") {
      checks = detail::run_mollify_report(cfg, outdir);
    } else if (driver == "check-hyp-h") {
      checks = detail::run_check_hyp(cfg, outdir);
    } else {
      throw ConfigError("unknown driver '" + driver +
                        "' (known: solve, rate, ldp-verify, mollify-report, check-hyp-h)");
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "solver error: " << e.what() << "\n";
    return 3;
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  bool all_pass = true;
  nlohmann::json jchecks = nlohmann::json::array();
  for (const CheckOutcome& c : checks) {
    all_pass = all_pass && c.pass;
    out << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail << "\n";
    jchecks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  out << (all_pass ? "OK" : "FAILED") << " (" << checks.size() << " checks, driver " << driver
      << ")\n";

  nlohmann::json summary;
  summary["pass"] = all_pass;
  summary["checks"] = jchecks;
  write_file_atomic((std::filesystem::path(outdir) / "checks.json").string(),
                    summary.dump(2) + "\n");

  nlohmann::json manifest;
  manifest["version"] = PMEL_VERSION;
  manifest["driver"] = driver;
  manifest["wall_time_seconds"] = wall;
  {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    manifest["generated_at"] = buf;
  }
  manifest["config_path"] = config_path;
  manifest["overrides"] = overrides;
  nlohmann::json jcfg;
  for (const auto& [section, keys] : cfg.table()) {
    for (const auto& [key, value] : keys) jcfg[section][key] = value;
  }
  manifest["config"] = jcfg;
  write_file_atomic((std::filesystem::path(outdir) / "manifest.json").string(),
                    manifest.dump(2) + "\n");

  return all_pass ? 0 : 1;
}

}  // namespace pmel
