#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pmel/errors.hpp"
#include "pmel/grid.hpp"
#include "pmel/linear_solver.hpp"
#include "pmel/noise.hpp"
#include "pmel/nonlinearity.hpp"

namespace pmel {

struct SolverConfig {
  double dt = 1e-3;
  double newton_tol = 1e-10;
  int newton_max_iter = 30;
  // When set, solves run with the level-n regularized coefficients instead
  // of the raw ones.
  std::optional<int> regularization_index;

  void validate() const {
    if (!(dt > 0.0) || !(newton_tol > 0.0) || newton_max_iter < 1) {
      throw std::invalid_argument("SolverConfig: dt and newton_tol must be positive");
    }
  }
};

struct StepDiagnostics {
  double time = 0.0;
  double mass = 0.0;
  double drift_mass = 0.0;      // integral of the explicit drift added this step
  double newton_residual = 0.0;
  int newton_iterations = 0;
  double state_min = 0.0;
  double state_max = 0.0;
};

struct SolveResult {
  Trajectory trajectory;
  std::vector<StepDiagnostics> steps;
  // Max over steps of |mass(u_next) - mass(u) - drift_mass|; bounded by
  // the Newton tolerance on the unit torus.
  double mass_identity_defect = 0.0;
};

// Per-step, per-mode drift weights c[j][k]: step j applies the explicit
// increment sum_k g^k(x, u_j) c[j][k]. Skeleton drifts contribute
// h_k(t_j) dt, stochastic runs sqrt(eps) dW_k; building the weights once
// makes the advertised reductions between solvers literal code reuse.
class DriftSchedule {
 public:
  DriftSchedule(int n_steps, std::size_t n_modes)
      : n_steps_(n_steps), n_modes_(n_modes),
        c_(static_cast<std::size_t>(n_steps) * n_modes, 0.0) {}

  int n_steps() const { return n_steps_; }
  std::size_t n_modes() const { return n_modes_; }
  double& at(int j, std::size_t k) { return c_[static_cast<std::size_t>(j) * n_modes_ + k]; }
  double at(int j, std::size_t k) const {
    return c_[static_cast<std::size_t>(j) * n_modes_ + k];
  }

 private:
  int n_steps_;
  std::size_t n_modes_;
  std::vector<double> c_;
};

namespace detail {

// One backward Euler step of v = rhs + dt lap A(v), Newton iteration with
// residual F(v) = v - dt lap A(v) - rhs. The Jacobian I - dt L diag(A'(v))
// is cyclic tridiagonal in 1D and solved matrix-free in 2D.
template <typename Model>
void implicit_diffusion_step(const Model& model, const SolverConfig& cfg, const Field& rhs,
                             Field& v, StepDiagnostics& diag, int step_index) {
  const PeriodicGrid& g = rhs.grid();
  const int n = g.cells_per_dim();
  const double dt = cfg.dt;
  const double inv_dx2 = 1.0 / (g.spacing() * g.spacing());
  const std::size_t size = g.size();

  auto residual = [&](const Field& w, Field& out) {
    Field lap = laplacian_of_A(w, [&](double r) { return model.A(r); });
    double worst = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
      out[i] = w[i] - dt * lap[i] - rhs[i];
      worst = std::max(worst, std::abs(out[i]));
    }
    return worst;
  };

  Field F(g);
  double res = residual(v, F);
  int iter = 0;
  while (res > cfg.newton_tol) {
    if (iter >= cfg.newton_max_iter) {
      std::ostringstream os;
      os << "Newton did not converge at step " << step_index << " (t=" << diag.time
         << "): residual " << res << " > tol " << cfg.newton_tol;
      throw SolverError(os.str());
    }
    std::vector<double> ap(size);
    for (std::size_t i = 0; i < size; ++i) ap[i] = model.A_prime(v[i]);

    std::vector<double> delta;
    if (g.dim() == 1) {
      std::vector<double> sub(size), dia(size), sup(size);
      for (int i = 0; i < n; ++i) {
        const std::size_t c = g.index(i);
        sub[c] = -dt * inv_dx2 * ap[g.index(i - 1)];
        dia[c] = 1.0 + 2.0 * dt * inv_dx2 * ap[c];
        sup[c] = -dt * inv_dx2 * ap[g.index(i + 1)];
      }
      delta = solve_cyclic_tridiagonal(sub, dia, sup, F.values());
    } else {
      auto apply = [&](const std::vector<double>& w, std::vector<double>& out) {
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            const std::size_t c = g.index(i, j);
            const double nb = ap[g.index(i + 1, j)] * w[g.index(i + 1, j)] +
                              ap[g.index(i - 1, j)] * w[g.index(i - 1, j)] +
                              ap[g.index(i, j + 1)] * w[g.index(i, j + 1)] +
                              ap[g.index(i, j - 1)] * w[g.index(i, j - 1)];
            out[c] = w[c] - dt * inv_dx2 * (nb - 4.0 * ap[c] * w[c]);
          }
        }
      };
      std::vector<double> precond(size);
      for (std::size_t i = 0; i < size; ++i) {
        precond[i] = 1.0 / (1.0 + 4.0 * dt * inv_dx2 * ap[i]);
      }
      KrylovResult kr = bicgstab(apply, F.values(), std::vector<double>(size, 0.0), precond,
                                 1e-10, 400);
      if (!kr.converged) {
        std::ostringstream os;
        os << "inner linear solve stalled at step " << step_index << " (BiCGStab residual "
           << kr.residual << ")";
        throw SolverError(os.str());
      }
      delta = std::move(kr.x);
    }

    // Damped update: halve the step until the residual decreases.
    double lambda = 1.0;
    Field trial(g);
    double new_res = res;
    for (int back = 0; back < 9; ++back) {
      for (std::size_t i = 0; i < size; ++i) trial[i] = v[i] - lambda * delta[i];
      new_res = residual(trial, F);
      if (new_res < res || new_res <= cfg.newton_tol) break;
      lambda *= 0.5;
    }
    v = trial;
    res = new_res;
    ++iter;
    if (!v.all_finite()) {
      std::ostringstream os;
      os << "non-finite state during Newton at step " << step_index << " (t=" << diag.time << ")";
      throw SolverError(os.str());
    }
  }
  // A NaN residual compares false against the tolerance and would slip
  // out of the loop looking converged.
  if (!std::isfinite(res) || !v.all_finite()) {
    std::ostringstream os;
    os << "non-finite state after Newton at step " << step_index << " (t=" << diag.time << ")";
    throw SolverError(os.str());
  }
  diag.newton_residual = res;
  diag.newton_iterations = iter;
}

}  // namespace detail

// Semi-implicit march: explicit drift from the schedule, backward Euler
// diffusion. Model supplies A and A_prime (raw or regularized).
template <typename Model>
SolveResult integrate_semi_implicit(const Model& model, const NoiseFamily& g, const Field& u0,
                                    const DriftSchedule& schedule, const SolverConfig& cfg) {
  cfg.validate();
  if (!u0.all_finite()) throw std::invalid_argument("integrate: non-finite initial state");
  if (schedule.n_modes() != g.n_modes()) {
    throw std::invalid_argument("integrate: schedule mode count does not match noise family");
  }
  const PeriodicGrid& grid = u0.grid();
  const std::size_t size = grid.size();
  const int J = schedule.n_steps();
  const double dt = cfg.dt;

  std::vector<TorusPoint> centers(size);
  for (std::size_t i = 0; i < size; ++i) centers[i] = grid.center(i);

  SolveResult out;
  out.trajectory.times.reserve(static_cast<std::size_t>(J) + 1);
  out.trajectory.states.reserve(static_cast<std::size_t>(J) + 1);
  out.steps.reserve(static_cast<std::size_t>(J));
  out.trajectory.times.push_back(0.0);
  out.trajectory.states.push_back(u0);

  Field u = u0;
  for (int j = 0; j < J; ++j) {
    StepDiagnostics diag;
    diag.time = j * dt;
    const double mass_before = u.mass();

    Field rhs = u;
    double drift_mass = 0.0;
    for (std::size_t k = 0; k < g.n_modes(); ++k) {
      const double c = schedule.at(j, k);
      if (c == 0.0) continue;
      for (std::size_t i = 0; i < size; ++i) {
        const double d = c * g.eval(k, centers[i], u[i]);
        rhs[i] += d;
        drift_mass += d;
      }
    }
    drift_mass *= grid.cell_volume();

    Field v = rhs;
    detail::implicit_diffusion_step(model, cfg, rhs, v, diag, j);

    u = v;
    diag.mass = u.mass();
    diag.drift_mass = drift_mass;
    diag.state_min = u.min_value();
    diag.state_max = u.max_value();
    out.mass_identity_defect = std::max(
        out.mass_identity_defect, std::abs(diag.mass - mass_before - drift_mass));
    out.steps.push_back(diag);
    out.trajectory.times.push_back((j + 1) * dt);
    out.trajectory.states.push_back(u);
  }
  return out;
}

// Model adapters.

struct RawDiffusion {
  const Nonlinearity* nl;
  double A(double r) const { return nl->A(r); }
  double A_prime(double r) const { return nl->A_prime(r); }
};

}  // namespace pmel
