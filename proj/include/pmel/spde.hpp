#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>

#include "pmel/brownian.hpp"
#include "pmel/control.hpp"
#include "pmel/mollify.hpp"
#include "pmel/skeleton.hpp"
#include "pmel/stepper.hpp"

namespace pmel {

// Semi-implicit Euler-Maruyama for
//   du = lap A(u) dt + sum_k g^k(x,u) h_k(t) dt + sqrt(eps) sum_k g^k(x,u) dbeta_k,
// diffusion implicit, drift and noise explicit (Ito: coefficients frozen
// at the left endpoint). The drift schedule is assembled once per step,
// so eps = 0 takes literally the skeleton code path and h = 0 with the
// same path reproduces solve_spde bit for bit.
inline SolveResult solve_controlled_spde(const Nonlinearity& nl, const NoiseFamily& g,
                                         const Field& u0, const Control& h, double eps,
                                         const BrownianPath& path, const SolverConfig& cfg) {
  cfg.validate();
  if (!(eps >= 0.0)) throw std::invalid_argument("solve_controlled_spde: eps must be >= 0");
  if (h.n_modes() != g.n_modes() || path.n_modes() != g.n_modes()) {
    throw std::invalid_argument("solve_controlled_spde: mode counts disagree");
  }
  if (std::abs(path.dt() - cfg.dt) > 1e-12 * cfg.dt) {
    throw std::invalid_argument("solve_controlled_spde: Brownian partition must equal dt");
  }
  detail::check_stability_guard(cfg, g, h);
  const int J = detail::steps_for(h.horizon(), cfg.dt);
  if (path.n_steps() < J) {
    throw std::invalid_argument("solve_controlled_spde: Brownian path shorter than horizon");
  }

  std::optional<MollifiedCoefficients> mc;
  if (cfg.regularization_index.has_value()) {
    mc.emplace(mollify(nl, g, u0, *cfg.regularization_index));
  }
  const NoiseFamily& noise = mc.has_value() ? mc->g_n() : g;
  const Field& start = mc.has_value() ? mc->u0_n() : u0;

  DriftSchedule sched(J, g.n_modes());
  const double sqrt_eps = std::sqrt(eps);
  for (int j = 0; j < J; ++j) {
    const double t = j * cfg.dt;
    for (std::size_t k = 0; k < g.n_modes(); ++k) {
      double c = h.value(k, t) * cfg.dt;
      if (eps > 0.0) c += sqrt_eps * path.increment(k, j);
      sched.at(j, k) = c;
    }
  }
  return detail::with_diffusion_model(nl, mc, [&](auto model) {
    return integrate_semi_implicit(model, noise, start, sched, cfg);
  });
}

inline SolveResult solve_spde(const Nonlinearity& nl, const NoiseFamily& g, const Field& u0,
                              double eps, const BrownianPath& path, const SolverConfig& cfg) {
  const double horizon = path.n_steps() * path.dt();
  return solve_controlled_spde(nl, g, u0, Control::zero(g.n_modes(), horizon, path.n_steps()),
                               eps, path, cfg);
}

}  // namespace pmel
