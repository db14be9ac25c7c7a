#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pmel/brownian.hpp"
#include "pmel/control.hpp"
#include "pmel/errors.hpp"
#include "pmel/grid.hpp"
#include "pmel/linear_solver.hpp"
#include "pmel/noise.hpp"
#include "pmel/nonlinearity.hpp"
#include "pmel/skeleton.hpp"
#include "pmel/spde.hpp"
#include "pmel/stepper.hpp"

namespace pmel {

enum class MisfitKind { terminal_l1, path_l1 };

// Variational problem for the action functional: find the cheapest
// control steering the zero-noise dynamics to the target, where cost is
// the control energy and the misfit enters through a quadratic penalty
// with continuation (penalty, 10x, 100x, ...).
struct RateProblem {
  Field target;
  std::optional<Trajectory> path_target;
  double horizon = 0.25;
  int control_steps = 16;
  double penalty = 50.0;
  int penalty_rounds = 3;
  double misfit_tol = 1e-2;
  int max_iters = 80;
  double step_init = 0.25;
  MisfitKind misfit_kind = MisfitKind::terminal_l1;
  // At most this many control coefficients for finite-difference
  // gradients; larger problems use the discrete adjoint.
  int fd_coeff_limit = 64;

  explicit RateProblem(Field target_state) : target(std::move(target_state)) {}
};

struct IterationRecord {
  int round = 0;
  int iter = 0;
  double objective = 0.0;
  double energy = 0.0;
  double misfit = 0.0;
  double step = 0.0;
};

struct RateEstimate {
  double I_est = std::numeric_limits<double>::infinity();
  double misfit = std::numeric_limits<double>::infinity();
  bool converged = false;
  Control h_opt;
  std::vector<IterationRecord> log;
};

namespace detail {

struct Objective {
  double value = 0.0;
  double energy = 0.0;
  double misfit = 0.0;
};

template <typename Forward, typename Misfit>
Objective evaluate_objective(const Control& h, double lambda, const Forward& forward,
                             const Misfit& misfit_of) {
  Objective o;
  o.energy = h.energy();
  o.misfit = misfit_of(forward(h));
  o.value = o.energy + lambda * o.misfit * o.misfit;
  return o;
}

// Discrete adjoint gradient of energy + lambda misfit^2 for the
// semi-implicit scheme. The adjoint of one step is the transposed Newton
// matrix at the converged state, M^T with row i carrying -dt/dx^2 A'(v_i)
// on every neighbor and 1 + 2 dim dt/dx^2 A'(v_i) on the diagonal.
inline std::vector<double> adjoint_gradient(const Nonlinearity& nl, const NoiseFamily& g,
                                            const Control& h, const Trajectory& traj,
                                            double lambda, const RateProblem& problem,
                                            const SolverConfig& cfg) {
  const PeriodicGrid& grid = traj.front().grid();
  const std::size_t size = grid.size();
  const int n = grid.cells_per_dim();
  const int J = static_cast<int>(traj.n_states()) - 1;
  const double dt = cfg.dt;
  const double inv_dx2 = 1.0 / (grid.spacing() * grid.spacing());
  const double dV = grid.cell_volume();
  const std::size_t K = g.n_modes();

  std::vector<TorusPoint> centers(size);
  for (std::size_t i = 0; i < size; ++i) centers[i] = grid.center(i);

  // Misfit value and its state gradients.
  double mis = 0.0;
  std::vector<std::vector<double>> source(static_cast<std::size_t>(J) + 1,
                                          std::vector<double>());
  if (problem.misfit_kind == MisfitKind::terminal_l1) {
    mis = l1_distance(traj.back(), problem.target);
    std::vector<double> s(size);
    for (std::size_t i = 0; i < size; ++i) {
      const double d = traj.back()[i] - problem.target[i];
      s[i] = 2.0 * lambda * mis * dV * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
    }
    source[static_cast<std::size_t>(J)] = std::move(s);
  } else {
    const Trajectory& tgt = *problem.path_target;
    mis = l1_path_distance(traj, tgt);
    for (int j = 1; j < J; ++j) {
      const double dtj = traj.times[static_cast<std::size_t>(j) + 1] -
                         traj.times[static_cast<std::size_t>(j)];
      std::vector<double> s(size);
      for (std::size_t i = 0; i < size; ++i) {
        const double d = traj.states[static_cast<std::size_t>(j)][i] -
                         tgt.states[static_cast<std::size_t>(j)][i];
        s[i] = 2.0 * lambda * mis * dV * dtj * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
      }
      source[static_cast<std::size_t>(j)] = std::move(s);
    }
  }

  auto solve_transposed = [&](const std::vector<double>& ap, std::vector<double> rhs) {
    if (grid.dim() == 1) {
      std::vector<double> sub(size), dia(size), sup(size);
      for (std::size_t i = 0; i < size; ++i) {
        const double w = -dt * inv_dx2 * ap[i];
        sub[i] = w;
        sup[i] = w;
        dia[i] = 1.0 + 2.0 * dt * inv_dx2 * ap[i];
      }
      return solve_cyclic_tridiagonal(sub, dia, sup, rhs);
    }
    auto apply = [&](const std::vector<double>& w, std::vector<double>& out) {
      for (int i = 0; i < n; ++i) {
        for (int l = 0; l < n; ++l) {
          const std::size_t c = grid.index(i, l);
          const double nb = w[grid.index(i + 1, l)] + w[grid.index(i - 1, l)] +
                            w[grid.index(i, l + 1)] + w[grid.index(i, l - 1)];
          out[c] = w[c] - dt * inv_dx2 * ap[c] * (nb - 4.0 * w[c]);
        }
      }
    };
    std::vector<double> precond(size);
    for (std::size_t i = 0; i < size; ++i) precond[i] = 1.0 / (1.0 + 4.0 * dt * inv_dx2 * ap[i]);
    KrylovResult kr = bicgstab(apply, rhs, std::vector<double>(size, 0.0), precond, 1e-10, 400);
    if (!kr.converged) throw SolverError("adjoint linear solve stalled");
    return kr.x;
  };

  // Backward sweep: M_J^T lam^{J-1} = -source^J, then
  // M_j^T lam^{j-1} = (I + Gamma^j) lam^j - source^j.
  std::vector<std::vector<double>> lam(static_cast<std::size_t>(J));
  {
    std::vector<double> ap(size);
    for (std::size_t i = 0; i < size; ++i) {
      ap[i] = nl.A_prime(traj.states[static_cast<std::size_t>(J)][i]);
    }
    std::vector<double> rhs(size, 0.0);
    if (!source[static_cast<std::size_t>(J)].empty()) {
      for (std::size_t i = 0; i < size; ++i) rhs[i] = -source[static_cast<std::size_t>(J)][i];
    }
    lam[static_cast<std::size_t>(J) - 1] = solve_transposed(ap, std::move(rhs));
  }
  for (int j = J - 1; j >= 1; --j) {
    const Field& u = traj.states[static_cast<std::size_t>(j)];
    std::vector<double> rhs(size);
    for (std::size_t i = 0; i < size; ++i) {
      // Gamma^j_ii = d D^j_i / d u_i by central differences of the modes.
      double gamma = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const double hk = h.value(k, traj.times[static_cast<std::size_t>(j)]);
        if (hk == 0.0) continue;
        const double du = 1e-6 * (1.0 + std::abs(u[i]));
        const double gp = g.eval(k, centers[i], u[i] + du);
        const double gm = g.eval(k, centers[i], u[i] - du);
        gamma += hk * dt * (gp - gm) / (2.0 * du);
      }
      rhs[i] = (1.0 + gamma) * lam[static_cast<std::size_t>(j)][i];
      if (!source[static_cast<std::size_t>(j)].empty()) {
        rhs[i] -= source[static_cast<std::size_t>(j)][i];
      }
    }
    std::vector<double> ap(size);
    for (std::size_t i = 0; i < size; ++i) ap[i] = nl.A_prime(u[i]);
    lam[static_cast<std::size_t>(j) - 1] = solve_transposed(ap, std::move(rhs));
  }

  // Chain rule to the control coefficients: piece p of mode k collects
  // -dt <lam^j, g^k(., u^j)> over the solver steps j inside the piece.
  std::vector<double> grad(K * static_cast<std::size_t>(h.n_steps()), 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    for (int j = 0; j < J; ++j) {
      const double t = traj.times[static_cast<std::size_t>(j)];
      int p = static_cast<int>(std::floor(t / h.dt()));
      p = std::max(0, std::min(p, h.n_steps() - 1));
      double acc = 0.0;
      const Field& u = traj.states[static_cast<std::size_t>(j)];
      for (std::size_t i = 0; i < size; ++i) {
        acc += lam[static_cast<std::size_t>(j)][i] * g.eval(k, centers[i], u[i]);
      }
      grad[k * static_cast<std::size_t>(h.n_steps()) + static_cast<std::size_t>(p)] -=
          dt * acc;
    }
    for (int p = 0; p < h.n_steps(); ++p) {
      grad[k * static_cast<std::size_t>(h.n_steps()) + static_cast<std::size_t>(p)] +=
          h.coeff(k, p) * h.dt();
    }
  }
  return grad;
}

}  // namespace detail

// Minimizes energy(h) + lambda misfit(h)^2 by projected-free gradient
// descent with Armijo backtracking and penalty continuation. Exhausting
// the iteration budget reports converged = false with the best iterate,
// never an exception.
inline RateEstimate estimate_rate(const RateProblem& problem, const Nonlinearity& nl,
                                  const NoiseFamily& g, const Field& u0,
                                  const SolverConfig& cfg) {
  cfg.validate();
  if (!(problem.horizon > 0.0) || problem.control_steps < 1 || !(problem.penalty > 0.0)) {
    throw std::invalid_argument("estimate_rate: bad problem parameters");
  }
  if (!(problem.target.grid() == u0.grid())) {
    throw std::invalid_argument("estimate_rate: target grid does not match initial state");
  }
  if (problem.misfit_kind == MisfitKind::path_l1 && !problem.path_target.has_value()) {
    throw std::invalid_argument("estimate_rate: path misfit needs a path target");
  }

  auto forward = [&](const Control& h) { return solve_skeleton(nl, g, u0, h, cfg).trajectory; };
  auto misfit_of = [&](const Trajectory& traj) {
    return problem.misfit_kind == MisfitKind::terminal_l1
               ? l1_distance(traj.back(), problem.target)
               : l1_path_distance(traj, *problem.path_target);
  };

  Control h = Control::zero(g.n_modes(), problem.horizon, problem.control_steps);
  const std::size_t n_coeff = h.coefficients().size();
  const bool use_fd = static_cast<int>(n_coeff) <= problem.fd_coeff_limit;

  RateEstimate best{.I_est = std::numeric_limits<double>::infinity(),
                    .misfit = std::numeric_limits<double>::infinity(),
                    .converged = false,
                    .h_opt = h,
                    .log = {}};

  auto gradient = [&](const Control& at, double lambda, const Trajectory& traj) {
    if (!use_fd) {
      return detail::adjoint_gradient(nl, g, at, traj, lambda, problem, cfg);
    }
    std::vector<double> grad(n_coeff, 0.0);
    const std::vector<double>& c = at.coefficients();
    for (std::size_t i = 0; i < n_coeff; ++i) {
      const double delta = 1e-5 * std::max(1.0, std::abs(c[i]));
      Control hp = at;
      Control hm = at;
      std::vector<double> cp = c, cm = c;
      cp[i] += delta;
      cm[i] -= delta;
      hp.set_all(std::move(cp));
      hm.set_all(std::move(cm));
      const detail::Objective op = detail::evaluate_objective(hp, lambda, forward, misfit_of);
      const detail::Objective om = detail::evaluate_objective(hm, lambda, forward, misfit_of);
      grad[i] = (op.value - om.value) / (2.0 * delta);
    }
    return grad;
  };

  double best_final_objective = std::numeric_limits<double>::infinity();
  for (int round = 0; round < problem.penalty_rounds; ++round) {
    const double lambda = problem.penalty * std::pow(10.0, round);
    const bool final_round = round + 1 == problem.penalty_rounds;
    double step = problem.step_init;
    detail::Objective cur = detail::evaluate_objective(h, lambda, forward, misfit_of);

    for (int iter = 0; iter < problem.max_iters; ++iter) {
      if (final_round && cur.value < best_final_objective) {
        best_final_objective = cur.value;
        best.h_opt = h;
        best.misfit = cur.misfit;
        best.I_est = h.energy();
      }
      best.log.push_back({round, iter, cur.value, cur.energy, cur.misfit, step});

      Trajectory traj = forward(h);
      std::vector<double> grad = gradient(h, lambda, traj);
      double gnorm2 = 0.0;
      for (double v : grad) gnorm2 += v * v;
      if (gnorm2 < 1e-18) break;

      bool accepted = false;
      for (int back = 0; back < 24; ++back) {
        std::vector<double> trial(n_coeff);
        const std::vector<double>& c = h.coefficients();
        for (std::size_t i = 0; i < n_coeff; ++i) trial[i] = c[i] - step * grad[i];
        Control ht = h;
        ht.set_all(std::move(trial));
        const detail::Objective ot = detail::evaluate_objective(ht, lambda, forward, misfit_of);
        if (ot.value <= cur.value - 1e-4 * step * gnorm2) {
          h = ht;
          cur = ot;
          accepted = true;
          step = std::min(step * 1.5, 1e3);
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
    }
    if (final_round) {
      // The loop above records before stepping; account for the last state.
      if (cur.value < best_final_objective) {
        best_final_objective = cur.value;
        best.h_opt = h;
        best.misfit = cur.misfit;
        best.I_est = h.energy();
      }
    }
  }
  best.converged = best.misfit <= problem.misfit_tol;
  return best;
}

// Path distances of the skeleton flow under weakly vanishing
// perturbations h + amp sin(2 pi t / eps) e_1, all solved on one fine
// control partition nested in the base one.
struct WeakContinuityRow {
  double eps_osc = 0.0;
  double path_distance = 0.0;
};

inline std::vector<WeakContinuityRow> weak_continuity_experiment(
    const Nonlinearity& nl, const NoiseFamily& g, const Field& u0, const Control& h_base,
    const std::vector<double>& eps_list, double osc_amp, const SolverConfig& cfg) {
  if (eps_list.empty()) throw std::invalid_argument("weak_continuity: empty eps list");
  if (g.n_modes() < 1) throw std::invalid_argument("weak_continuity: need at least one mode");
  double eps_min = eps_list.front();
  for (double e : eps_list) {
    if (!(e > 0.0)) throw std::invalid_argument("weak_continuity: eps must be positive");
    eps_min = std::min(eps_min, e);
  }
  const double T = h_base.horizon();

  // Fine partition: nested refinement of the base control grid resolving
  // the fastest oscillation with >= 8 pieces per period.
  const int refine = std::max(1, static_cast<int>(std::ceil(h_base.dt() / (eps_min / 8.0))));
  const int n_fine = h_base.n_steps() * refine;
  const double dt_fine = T / n_fine;
  const int sub = std::max(1, static_cast<int>(std::ceil(dt_fine / cfg.dt)));
  SolverConfig run_cfg = cfg;
  run_cfg.dt = dt_fine / sub;

  Control h0 = Control::sampled(g.n_modes(), T, n_fine,
                                [&](std::size_t k, double t) { return h_base.value(k, t); });
  const Trajectory base = solve_skeleton(nl, g, u0, h0, run_cfg).trajectory;

  constexpr double two_pi = 6.283185307179586476925286766559;
  std::vector<WeakContinuityRow> rows;
  for (double eps : eps_list) {
    Control he = Control::sampled(g.n_modes(), T, n_fine, [&](std::size_t k, double t) {
      double v = h_base.value(k, t);
      if (k == 0) v += osc_amp * std::sin(two_pi * t / eps);
      return v;
    });
    const Trajectory pert = solve_skeleton(nl, g, u0, he, run_cfg).trajectory;
    rows.push_back({eps, l1_path_distance(pert, base)});
  }
  return rows;
}

// Monte Carlo distances between the controlled small-noise dynamics and
// the deterministic skeleton limit; medians and 90th percentiles per
// noise level. Sample seeds derive from (seed_base, experiment tag, eps
// index, sample index) only.
struct SmallNoiseRow {
  double eps = 0.0;
  double median_l1 = 0.0;
  double p90_l1 = 0.0;
  int samples = 0;
  std::uint64_t seed_base = 0;
};

inline std::vector<SmallNoiseRow> small_noise_experiment(const Nonlinearity& nl,
                                                         const NoiseFamily& g, const Field& u0,
                                                         const Control& h,
                                                         const std::vector<double>& eps_list,
                                                         int samples, const SolverConfig& cfg,
                                                         std::uint64_t seed_base) {
  if (eps_list.empty() || samples < 1) {
    throw std::invalid_argument("small_noise: need eps values and samples >= 1");
  }
  constexpr std::uint64_t kTag = 0x736d6e6f697365ULL;
  const Trajectory base = solve_skeleton(nl, g, u0, h, cfg).trajectory;
  const int J = detail::steps_for(h.horizon(), cfg.dt);

  std::vector<SmallNoiseRow> rows;
  for (std::size_t ei = 0; ei < eps_list.size(); ++ei) {
    std::vector<double> dists(static_cast<std::size_t>(samples));
    for (int s = 0; s < samples; ++s) {
      const std::uint64_t seed =
          derive_seed(seed_base, kTag, static_cast<std::uint64_t>(ei),
                      static_cast<std::uint64_t>(s));
      BrownianPath path(seed, g.n_modes(), J, cfg.dt);
      const Trajectory y =
          solve_controlled_spde(nl, g, u0, h, eps_list[ei], path, cfg).trajectory;
      dists[static_cast<std::size_t>(s)] = l1_path_distance(y, base);
    }
    std::sort(dists.begin(), dists.end());
    const std::size_t ns = dists.size();
    const double median = ns % 2 == 1 ? dists[ns / 2]
                                      : 0.5 * (dists[ns / 2 - 1] + dists[ns / 2]);
    const std::size_t ip90 =
        std::min(ns - 1, static_cast<std::size_t>(std::ceil(0.9 * ns)) - 1);
    rows.push_back({eps_list[ei], median, dists[ip90], samples, seed_base});
  }
  return rows;
}

}  // namespace pmel
