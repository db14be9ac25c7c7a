#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pmel/rng.hpp"

namespace pmel {

// Increments of K independent Brownian motions on a uniform partition of
// [0, T]. Each increment is a pure function of (seed, mode, step), drawn
// N(0, dt) at construction; identical seeds give bitwise identical paths.
class BrownianPath {
 public:
  BrownianPath(std::uint64_t seed, std::size_t n_modes, int n_steps, double dt)
      : seed_(seed), n_modes_(n_modes), n_steps_(n_steps), dt_(dt),
        inc_(n_modes * static_cast<std::size_t>(n_steps)) {
    if (!(dt > 0.0) || n_steps < 1) {
      throw std::invalid_argument("BrownianPath: need dt > 0 and n_steps >= 1");
    }
    const double sqrt_dt = std::sqrt(dt);
    for (std::size_t k = 0; k < n_modes_; ++k) {
      for (int j = 0; j < n_steps_; ++j) {
        inc_[k * static_cast<std::size_t>(n_steps_) + static_cast<std::size_t>(j)] =
            sqrt_dt * normal_for(seed_, k, static_cast<std::uint64_t>(j));
      }
    }
  }

  std::uint64_t seed() const { return seed_; }
  std::size_t n_modes() const { return n_modes_; }
  int n_steps() const { return n_steps_; }
  double dt() const { return dt_; }

  double increment(std::size_t k, int j) const {
    return inc_[k * static_cast<std::size_t>(n_steps_) + static_cast<std::size_t>(j)];
  }

  // beta_k(t_j), the partial sum of increments up to step j.
  double value(std::size_t k, int j) const {
    double s = 0.0;
    for (int i = 0; i < j; ++i) s += increment(k, i);
    return s;
  }

 private:
  std::uint64_t seed_;
  std::size_t n_modes_;
  int n_steps_;
  double dt_;
  std::vector<double> inc_;
};

}  // namespace pmel
