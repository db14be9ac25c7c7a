#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pmel/rng.hpp"

namespace pmel {

// Piecewise-constant deterministic control h: [0, T] -> R^K on a uniform
// partition, right-continuous at piece boundaries. The squared U-norm is
// sum_k integral h_k^2 dt = 2 * energy.
class Control {
 public:
  Control(std::size_t n_modes, double horizon, int n_steps)
      : n_modes_(n_modes), T_(horizon), n_steps_(n_steps),
        v_(n_modes * static_cast<std::size_t>(n_steps), 0.0) {
    if (!(horizon > 0.0) || n_steps < 1) {
      throw std::invalid_argument("Control: horizon must be positive, n_steps >= 1");
    }
    energy_ = 0.0;
  }

  std::size_t n_modes() const { return n_modes_; }
  double horizon() const { return T_; }
  int n_steps() const { return n_steps_; }
  double dt() const { return T_ / n_steps_; }

  double coeff(std::size_t k, int j) const {
    return v_[k * static_cast<std::size_t>(n_steps_) + static_cast<std::size_t>(j)];
  }

  void set_coeff(std::size_t k, int j, double value) {
    v_[k * static_cast<std::size_t>(n_steps_) + static_cast<std::size_t>(j)] = value;
    energy_ = recompute_energy();
  }

  void set_all(std::vector<double> values) {
    if (values.size() != v_.size()) throw std::invalid_argument("Control: bad coefficient count");
    v_ = std::move(values);
    energy_ = recompute_energy();
  }

  const std::vector<double>& coefficients() const { return v_; }

  // Sample of mode k at time t (the piece containing t, taking the right
  // piece at boundaries); t outside [0, T] clamps to the boundary pieces.
  double value(std::size_t k, double t) const {
    int j = static_cast<int>(std::floor(t / dt()));
    j = std::max(0, std::min(j, n_steps_ - 1));
    return coeff(k, j);
  }

  // Energy (1/2) sum_k integral_0^T h_k(t)^2 dt; cached, with
  // recompute_energy() available as the consistency oracle.
  double energy() const { return energy_; }

  double recompute_energy() const {
    double s = 0.0;
    for (double c : v_) s += c * c;
    return 0.5 * s * dt();
  }

  double sq_norm() const { return 2.0 * energy(); }

  // Membership in the radius-M ball of the Cameron-Martin space.
  bool in_ball(double M) const { return sq_norm() <= M * (1.0 + 1e-12); }

  static Control zero(std::size_t n_modes, double horizon, int n_steps) {
    return Control(n_modes, horizon, n_steps);
  }

  // Gaussian coefficients rescaled to the exact target energy.
  static Control random(std::size_t n_modes, double horizon, int n_steps, std::uint64_t seed,
                        double target_energy) {
    Control h(n_modes, horizon, n_steps);
    std::vector<double> vals(h.v_.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
      vals[i] = standard_normal(derive_seed(seed, 0x6374726cULL, i));
    }
    double s = 0.0;
    for (double c : vals) s += c * c;
    const double current = 0.5 * s * h.dt();
    const double scale = current > 0.0 ? std::sqrt(target_energy / current) : 0.0;
    for (double& c : vals) c *= scale;
    h.set_all(std::move(vals));
    return h;
  }

  // Samples a time function into piecewise-constant coefficients on this
  // control's partition (left endpoints).
  static Control sampled(std::size_t n_modes, double horizon, int n_steps,
                         const std::function<double(std::size_t, double)>& f) {
    Control h(n_modes, horizon, n_steps);
    std::vector<double> vals(h.v_.size());
    for (std::size_t k = 0; k < n_modes; ++k) {
      for (int j = 0; j < n_steps; ++j) {
        vals[k * static_cast<std::size_t>(n_steps) + static_cast<std::size_t>(j)] =
            f(k, j * h.dt());
      }
    }
    h.set_all(std::move(vals));
    return h;
  }

 private:
  std::size_t n_modes_;
  double T_;
  int n_steps_;
  std::vector<double> v_;
  double energy_ = 0.0;
};

}  // namespace pmel
