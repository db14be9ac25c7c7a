#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pmel/grid.hpp"

namespace pmel {

using ModeFn = std::function<double(const TorusPoint&, double)>;

// Finite family of noise coefficients g^k(x, u) on the torus, sharing one
// constant K for the growth and Lipschitz bounds.
class NoiseFamily {
 public:
  NoiseFamily(std::vector<ModeFn> modes, double K) : modes_(std::move(modes)), K_(K) {
    if (!(std::isfinite(K) && K >= 1.0)) {
      throw std::invalid_argument("NoiseFamily: K must be finite and >= 1");
    }
    for (const ModeFn& m : modes_) {
      if (!m) throw std::invalid_argument("NoiseFamily: empty mode function");
    }
  }

  std::size_t n_modes() const { return modes_.size(); }
  double K() const { return K_; }

  double eval(std::size_t k, const TorusPoint& x, double u) const { return modes_[k](x, u); }

  // G(x, u)^2 = sum_k g^k(x, u)^2.
  double l2_norm_sq(const TorusPoint& x, double u) const {
    double s = 0.0;
    for (const ModeFn& m : modes_) {
      const double v = m(x, u);
      s += v * v;
    }
    return s;
  }

 private:
  std::vector<ModeFn> modes_;
  double K_;
};

// Built-in modes.

inline ModeFn constant_mode(double c) {
  return [c](const TorusPoint&, double) { return c; };
}

inline ModeFn sinusoidal_in_x_mode(double amp, int freq, int axis = 0) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  return [amp, freq, axis](const TorusPoint& x, double) {
    return amp * std::sin(two_pi * freq * (axis == 0 ? x.x0 : x.x1));
  };
}

inline ModeFn clipped_linear_in_u_mode(double slope, double cap) {
  return [slope, cap](const TorusPoint&, double u) {
    return std::clamp(slope * u, -cap, cap);
  };
}

// Sampling lattice for coefficient checks: a tensor grid of nx points per
// torus axis and nu state values spanning [u_lo, u_hi].
struct SampleSpec {
  int dim = 1;
  int nx = 32;
  double u_lo = -50.0;
  double u_hi = 50.0;
  int nu = 501;

  std::vector<TorusPoint> x_points() const {
    std::vector<TorusPoint> pts;
    if (dim == 1) {
      pts.reserve(static_cast<std::size_t>(nx));
      for (int i = 0; i < nx; ++i) pts.push_back({static_cast<double>(i) / nx, 0.0});
    } else {
      pts.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(nx));
      for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < nx; ++j) {
          pts.push_back({static_cast<double>(i) / nx, static_cast<double>(j) / nx});
        }
      }
    }
    return pts;
  }

  std::vector<double> u_points() const {
    std::vector<double> us(static_cast<std::size_t>(nu));
    for (int i = 0; i < nu; ++i) {
      us[static_cast<std::size_t>(i)] = u_lo + (u_hi - u_lo) * i / (nu - 1.0);
    }
    return us;
  }

  void validate() const {
    if (dim != 1 && dim != 2) throw std::invalid_argument("SampleSpec: dim must be 1 or 2");
    if (nx < 2 || nu < 3) throw std::invalid_argument("SampleSpec: too few sample points");
    if (!(std::isfinite(u_lo) && std::isfinite(u_hi) && u_hi > u_lo)) {
      throw std::invalid_argument("SampleSpec: bad state range");
    }
  }
};

// Weighted sup distance between two noise families,
//   d(g, g~) = sup_{x,u} sum_k |g^k - g~^k|^2 / (1 + |u|)^(m+1),
// approximated over the sampling lattice. Missing modes count as zero.
inline double noise_distance(const NoiseFamily& g, const NoiseFamily& g2, double m,
                             const SampleSpec& spec) {
  spec.validate();
  if (!(m > 1.0)) throw std::invalid_argument("noise_distance: m must be > 1");
  const std::size_t kmax = std::max(g.n_modes(), g2.n_modes());
  double worst = 0.0;
  for (const TorusPoint& x : spec.x_points()) {
    for (double u : spec.u_points()) {
      double s = 0.0;
      for (std::size_t k = 0; k < kmax; ++k) {
        const double gv = k < g.n_modes() ? g.eval(k, x, u) : 0.0;
        const double hv = k < g2.n_modes() ? g2.eval(k, x, u) : 0.0;
        s += (gv - hv) * (gv - hv);
      }
      worst = std::max(worst, s / std::pow(1.0 + std::abs(u), m + 1.0));
    }
  }
  return worst;
}

}  // namespace pmel
