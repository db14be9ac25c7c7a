#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pmel/control.hpp"
#include "pmel/errors.hpp"
#include "pmel/grid.hpp"
#include "pmel/interp.hpp"
#include "pmel/mollify.hpp"
#include "pmel/noise.hpp"
#include "pmel/nonlinearity.hpp"
#include "pmel/stepper.hpp"

namespace pmel {

struct MollifiedDiffusion {
  const MollifiedCoefficients* mc;
  double A(double r) const { return mc->A_n(r); }
  double A_prime(double r) const { return mc->A_n_prime(r); }
};

namespace detail {

inline int steps_for(double horizon, double dt) {
  const double raw = horizon / dt;
  const int J = static_cast<int>(std::llround(raw));
  if (J < 1 || std::abs(J - raw) > 1e-9 * std::max(1.0, raw)) {
    std::ostringstream os;
    os << "dt=" << dt << " does not divide the horizon " << horizon;
    throw std::invalid_argument(os.str());
  }
  return J;
}

// Explicit-drift stability guard for unregularized solves: the control
// partition must not be finer than dt, and dt K sqrt(M) sqrt(#modes) must
// stay below 1/2 so one explicit substep cannot double the state.
inline void check_stability_guard(const SolverConfig& cfg, const NoiseFamily& g,
                                  const Control& h) {
  if (cfg.regularization_index.has_value()) return;
  if (cfg.dt > h.dt() * (1.0 + 1e-12)) {
    throw std::invalid_argument("solver dt must not exceed the control partition width");
  }
  const double load = cfg.dt * g.K() * std::sqrt(h.sq_norm()) *
                      std::sqrt(static_cast<double>(g.n_modes()));
  if (load > 0.5) {
    std::ostringstream os;
    os << "stability guard violated: dt*K*sqrt(M)*sqrt(modes) = " << load << " > 0.5";
    throw std::invalid_argument(os.str());
  }
}

inline DriftSchedule control_schedule(const Control& h, int n_steps, double dt) {
  DriftSchedule s(n_steps, h.n_modes());
  for (int j = 0; j < n_steps; ++j) {
    const double t = j * dt;
    for (std::size_t k = 0; k < h.n_modes(); ++k) s.at(j, k) = h.value(k, t) * dt;
  }
  return s;
}

template <typename Fn>
auto with_diffusion_model(const Nonlinearity& nl, const std::optional<MollifiedCoefficients>& mc,
                          Fn&& fn) {
  if (mc.has_value()) return fn(MollifiedDiffusion{&*mc});
  return fn(RawDiffusion{&nl});
}

}  // namespace detail

// Controlled deterministic evolution du = lap A(u) dt + sum_k g^k(x,u)
// h_k(t) dt on [0, h.horizon()]. With a regularization index set, the
// whole data triple is replaced by its level-n counterpart (A_n, g_n,
// u0_n).
inline SolveResult solve_skeleton(const Nonlinearity& nl, const NoiseFamily& g, const Field& u0,
                                  const Control& h, const SolverConfig& cfg) {
  cfg.validate();
  if (h.n_modes() != g.n_modes()) {
    throw std::invalid_argument("solve_skeleton: control and noise mode counts differ");
  }
  detail::check_stability_guard(cfg, g, h);
  const int J = detail::steps_for(h.horizon(), cfg.dt);

  std::optional<MollifiedCoefficients> mc;
  if (cfg.regularization_index.has_value()) {
    mc.emplace(mollify(nl, g, u0, *cfg.regularization_index));
  }
  const NoiseFamily& noise = mc.has_value() ? mc->g_n() : g;
  const Field& start = mc.has_value() ? mc->u0_n() : u0;
  const DriftSchedule sched = detail::control_schedule(h, J, cfg.dt);
  return detail::with_diffusion_model(nl, mc, [&](auto model) {
    return integrate_semi_implicit(model, noise, start, sched, cfg);
  });
}

// Entropy function eta with derivatives; when `linear_slope` is set the
// flux primitive integral eta'(s) A'(s) ds is slope * A exactly, which the
// residual uses to avoid tabulation error in the equality regime.
struct Entropy {
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  std::optional<double> linear_slope;
};

inline Entropy linear_entropy(double slope = 1.0) {
  return Entropy{[slope](double r) { return slope * r; },
                 [slope](double) { return slope; },
                 [](double) { return 0.0; },
                 slope};
}

inline Entropy quadratic_entropy() {
  return Entropy{[](double r) { return 0.5 * r * r; },
                 [](double r) { return r; },
                 [](double) { return 1.0; },
                 std::nullopt};
}

// Smooth convex surrogate for |r|.
inline Entropy smooth_abs_entropy(double delta) {
  return Entropy{[delta](double r) { return std::sqrt(r * r + delta * delta) - delta; },
                 [delta](double r) { return r / std::sqrt(r * r + delta * delta); },
                 [delta](double r) {
                   const double s = std::sqrt(r * r + delta * delta);
                   return delta * delta / (s * s * s);
                 },
                 std::nullopt};
}

using SpaceTimeFn = std::function<double(const TorusPoint&, double)>;

struct EntropyTerms {
  double time_term = 0.0;
  double init_term = 0.0;
  double flux_term = 0.0;
  double dissipation_term = 0.0;
  double drift_term = 0.0;
  // Negated entropy production: <= 0 up to discretization for entropy
  // solutions, and |residual| at the Newton-defect scale for linear eta.
  double residual = 0.0;
};

namespace detail {

inline double model_psi(const RawDiffusion& m, double u) { return m.nl->Psi(u); }
inline double model_psi(const MollifiedDiffusion& m, double u) { return m.mc->Psi_n(u); }

template <typename Model>
EntropyTerms entropy_residual_impl(const Trajectory& traj, const Model& model,
                                   const NoiseFamily& g, const Control& h, const Entropy& eta,
                                   const SpaceTimeFn& phi) {
  if (traj.n_states() < 2) throw std::invalid_argument("entropy_residual: empty trajectory");
  const PeriodicGrid& grid = traj.front().grid();
  const std::size_t size = grid.size();
  const std::size_t J = traj.n_states() - 1;
  const double dV = grid.cell_volume();
  const double dx = grid.spacing();

  std::vector<TorusPoint> centers(size);
  for (std::size_t i = 0; i < size; ++i) centers[i] = grid.center(i);

  // Sampled test function, one field per time level; phi(., T) must vanish.
  std::vector<Field> phis;
  phis.reserve(J + 1);
  for (std::size_t j = 0; j <= J; ++j) {
    Field p(grid);
    for (std::size_t i = 0; i < size; ++i) p[i] = phi(centers[i], traj.times[j]);
    phis.push_back(std::move(p));
  }
  for (std::size_t i = 0; i < size; ++i) {
    if (std::abs(phis[J][i]) > 1e-12) {
      throw std::invalid_argument("entropy_residual: test function must vanish at t = T");
    }
  }

  // Flux primitive q(u) = integral_0^u eta'(s) A'(s) ds and Psi for the
  // dissipation term; tabulated unless eta is linear.
  double lo = traj.front().min_value();
  double hi = traj.front().max_value();
  for (const Field& f : traj.states) {
    lo = std::min(lo, f.min_value());
    hi = std::max(hi, f.max_value());
  }
  lo -= 1.0;
  hi += 1.0;
  std::function<double(double)> q;
  if (eta.linear_slope.has_value()) {
    const double slope = *eta.linear_slope;
    q = [&model, slope](double u) { return slope * model.A(u); };
  } else {
    const int nq = 4096;
    std::vector<double> xs(static_cast<std::size_t>(nq) + 1),
        qs(static_cast<std::size_t>(nq) + 1, 0.0);
    const double hq = (hi - lo) / nq;
    for (int i = 0; i <= nq; ++i) xs[static_cast<std::size_t>(i)] = lo + hq * i;
    auto integrand = [&](double s) { return eta.d1(s) * model.A_prime(s); };
    for (int i = 0; i < nq; ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      qs[ii + 1] = qs[ii] + simpson_panel(hq, integrand(xs[ii]),
                                          integrand(0.5 * (xs[ii] + xs[ii + 1])),
                                          integrand(xs[ii + 1]));
    }
    q = MonotoneCubic(std::move(xs), std::move(qs));
  }

  auto inner = [&](const Field& a, const Field& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < size; ++i) s += a[i] * b[i];
    return s * dV;
  };
  auto eta_of = [&](const Field& f) {
    Field out(grid);
    for (std::size_t i = 0; i < size; ++i) out[i] = eta.value(f[i]);
    return out;
  };

  EntropyTerms terms;
  const double dt = traj.times[1] - traj.times[0];

  for (std::size_t j = 1; j <= J; ++j) {
    Field dphi(grid);
    for (std::size_t i = 0; i < size; ++i) dphi[i] = phis[j][i] - phis[j - 1][i];
    terms.time_term += inner(eta_of(traj.states[j]), dphi);
  }
  terms.init_term = inner(eta_of(traj.states[0]), phis[0]);

  const int n = grid.cells_per_dim();
  for (std::size_t j = 0; j < J; ++j) {
    const Field& u_next = traj.states[j + 1];

    Field qu(grid);
    for (std::size_t i = 0; i < size; ++i) qu[i] = q(u_next[i]);
    terms.flux_term += dt * inner(qu, laplacian(phis[j]));

    if (!eta.linear_slope.has_value()) {
      // |grad Psi(u)|^2 per cell as the mean of squared face gradients.
      Field psi(grid);
      for (std::size_t i = 0; i < size; ++i) psi[i] = model_psi(model, u_next[i]);
      Field diss(grid);
      if (grid.dim() == 1) {
        for (int i = 0; i < n; ++i) {
          const double gr = (psi[grid.index(i + 1)] - psi[grid.index(i)]) / dx;
          const double gl = (psi[grid.index(i)] - psi[grid.index(i - 1)]) / dx;
          diss[grid.index(i)] = 0.5 * (gr * gr + gl * gl);
        }
      } else {
        for (int i = 0; i < n; ++i) {
          for (int l = 0; l < n; ++l) {
            const std::size_t c = grid.index(i, l);
            const double ge = (psi[grid.index(i + 1, l)] - psi[c]) / dx;
            const double gw = (psi[c] - psi[grid.index(i - 1, l)]) / dx;
            const double gn2 = (psi[grid.index(i, l + 1)] - psi[c]) / dx;
            const double gs = (psi[c] - psi[grid.index(i, l - 1)]) / dx;
            diss[c] = 0.5 * (ge * ge + gw * gw) + 0.5 * (gn2 * gn2 + gs * gs);
          }
        }
      }
      double acc = 0.0;
      for (std::size_t i = 0; i < size; ++i) {
        acc += eta.d2(u_next[i]) * diss[i] * phis[j][i];
      }
      terms.dissipation_term -= dt * acc * dV;
    }

    const Field& u_cur = traj.states[j];
    double acc = 0.0;
    for (std::size_t k = 0; k < g.n_modes(); ++k) {
      const double hk = h.value(k, traj.times[j]);
      if (hk == 0.0) continue;
      for (std::size_t i = 0; i < size; ++i) {
        acc += g.eval(k, centers[i], u_cur[i]) * hk * eta.d1(u_next[i]) * phis[j][i];
      }
    }
    terms.drift_term += dt * acc * dV;
  }

  terms.residual = -(terms.time_term + terms.init_term + terms.flux_term +
                     terms.dissipation_term + terms.drift_term);
  return terms;
}

}  // namespace detail

// Distributional defect of the trajectory against the entropy inequality
// for (eta, phi): zero (up to Newton defects) for linear eta, <= O(dx+dt)
// from above for convex eta on entropy-consistent runs. The drift terms
// are rebuilt from (g, h), which must be the pair the run actually used.
inline EntropyTerms entropy_residual(const Trajectory& traj, const Nonlinearity& nl,
                                     const NoiseFamily& g, const Control& h, const Entropy& eta,
                                     const SpaceTimeFn& phi) {
  return detail::entropy_residual_impl(traj, RawDiffusion{&nl}, g, h, eta, phi);
}

inline EntropyTerms entropy_residual(const Trajectory& traj, const MollifiedCoefficients& mc,
                                     const Control& h, const Entropy& eta,
                                     const SpaceTimeFn& phi) {
  return detail::entropy_residual_impl(traj, MollifiedDiffusion{&mc}, mc.g_n(), h, eta, phi);
}

struct CauchyRow {
  int n_coarse = 0;
  int n_fine = 0;
  double distance = 0.0;
};

// Distances between consecutive regularization levels of the controlled
// problem, d(n_i, n_{i+1}) = |u_{n_i} - u_{n_{i+1}}|_{L1 in space and time}.
inline std::vector<CauchyRow> approximation_cauchy_study(const Nonlinearity& nl,
                                                         const NoiseFamily& g, const Field& u0,
                                                         const Control& h,
                                                         const std::vector<int>& n_list,
                                                         const SolverConfig& cfg) {
  if (n_list.size() < 2) {
    throw std::invalid_argument("approximation_cauchy_study: need at least two levels");
  }
  std::vector<Trajectory> runs;
  runs.reserve(n_list.size());
  for (int n : n_list) {
    SolverConfig level_cfg = cfg;
    level_cfg.regularization_index = n;
    runs.push_back(solve_skeleton(nl, g, u0, h, level_cfg).trajectory);
  }
  std::vector<CauchyRow> rows;
  for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
    rows.push_back({n_list[i], n_list[i + 1], l1_path_distance(runs[i], runs[i + 1])});
  }
  return rows;
}

}  // namespace pmel
