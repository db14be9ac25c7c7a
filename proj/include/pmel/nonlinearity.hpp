#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pmel/interp.hpp"
#include "pmel/quadrature.hpp"

namespace pmel {

// Porous-medium nonlinearity A together with the derived functions
//   a(r)   = sqrt(A'(r)),
//   Psi(r) = integral_0^r a(s) ds,
//   Psi_f  = integral_0^r f(s) a(s) ds.
//
// Two kinds: the canonical power law A(r) = |r|^(m-1) r with closed-form
// derived functions, and a custom kind built from samples of an odd,
// strictly increasing A (monotone cubic interpolation; derivatives by
// central differences on the interpolant).
class Nonlinearity {
 public:
  static Nonlinearity canonical(double m, double K) {
    Nonlinearity nl(m, K);
    nl.canonical_ = true;
    return nl;
  }

  // `r` must be a symmetric, strictly increasing grid and `A_samples` odd
  // and strictly increasing on it.
  static Nonlinearity custom(double m, double K, std::vector<double> r,
                             std::vector<double> A_samples) {
    Nonlinearity nl(m, K);
    nl.canonical_ = false;
    nl.build_tables(std::move(r), std::move(A_samples));
    return nl;
  }

  double m() const { return m_; }
  double K() const { return K_; }
  bool is_canonical() const { return canonical_; }

  double A(double r) const {
    if (canonical_) return std::copysign(std::pow(std::abs(r), m_), r);
    return odd_eval(A_interp_, r);
  }

  double A_prime(double r) const {
    if (canonical_) return m_ * std::pow(std::abs(r), m_ - 1.0);
    const double ar = a(r);
    return ar * ar;
  }

  double a(double r) const {
    if (canonical_) {
      const double x = std::abs(r);
      if (exponent_ == 0.5) return sqrt_m_ * std::sqrt(x);
      if (exponent_ == 1.0) return sqrt_m_ * x;
      return sqrt_m_ * std::pow(x, exponent_);
    }
    return even_eval(a_interp_, r);
  }

  double a_prime(double r) const {
    if (canonical_) {
      if (r == 0.0) return exponent_ > 1.0 ? 0.0 : sqrt_m_ * exponent_;
      return std::copysign(sqrt_m_ * exponent_ * std::pow(std::abs(r), exponent_ - 1.0), r);
    }
    const double d = 0.5 * fd_step_;
    return (a(r + d) - a(r - d)) / (2.0 * d);
  }

  double Psi(double r) const {
    if (canonical_) {
      return psi_scale_ * std::pow(std::abs(r), exponent_) * r;
    }
    return odd_eval(Psi_interp_, r);
  }

  // Psi_f(r) = integral_0^r f(s) a(s) ds by adaptive quadrature.
  template <typename F>
  double Psi_f(const F& f, double r, double abs_tol = 1e-10) const {
    return integrate([&](double s) { return f(s) * a(s); }, 0.0, r, abs_tol, "Psi_f");
  }

 private:
  Nonlinearity(double m, double K) : m_(m), K_(K) {
    if (!(std::isfinite(m) && m > 1.0)) {
      throw std::invalid_argument("Nonlinearity: m must be finite and > 1, got " +
                                  std::to_string(m));
    }
    if (!(std::isfinite(K) && K >= 1.0)) {
      throw std::invalid_argument("Nonlinearity: K must be finite and >= 1, got " +
                                  std::to_string(K));
    }
    exponent_ = 0.5 * (m_ - 1.0);
    sqrt_m_ = std::sqrt(m_);
    psi_scale_ = 2.0 * sqrt_m_ / (m_ + 1.0);
  }

  void build_tables(std::vector<double> r, std::vector<double> A_samples) {
    const std::size_t n = r.size();
    if (n < 5 || A_samples.size() != n) {
      throw std::invalid_argument("Nonlinearity::custom: need >= 5 matching samples");
    }
    double amax = 0.0;
    for (double v : A_samples) amax = std::max(amax, std::abs(v));
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(r[i] + r[n - 1 - i]) > 1e-12 * (std::abs(r[n - 1]) + 1.0)) {
        throw std::invalid_argument("Nonlinearity::custom: sample grid must be symmetric");
      }
      if (std::abs(A_samples[i] + A_samples[n - 1 - i]) > 1e-9 * (amax + 1.0)) {
        throw std::invalid_argument("Nonlinearity::custom: A samples must be odd");
      }
      if (i + 1 < n && !(A_samples[i + 1] > A_samples[i])) {
        throw std::invalid_argument("Nonlinearity::custom: A samples must be strictly increasing");
      }
    }
    A_interp_ = MonotoneCubic(r, A_samples);

    // a = sqrt(A') with A' from central differences on the sample grid.
    std::vector<double> a_vals(n);
    for (std::size_t i = 0; i < n; ++i) {
      double d;
      if (i == 0) {
        d = (A_samples[1] - A_samples[0]) / (r[1] - r[0]);
      } else if (i + 1 == n) {
        d = (A_samples[n - 1] - A_samples[n - 2]) / (r[n - 1] - r[n - 2]);
      } else {
        d = (A_samples[i + 1] - A_samples[i - 1]) / (r[i + 1] - r[i - 1]);
      }
      a_vals[i] = std::sqrt(std::max(d, 0.0));
    }
    a_interp_ = MonotoneCubic(r, a_vals);

    double min_h = r[1] - r[0];
    for (std::size_t i = 1; i + 1 < n; ++i) min_h = std::min(min_h, r[i + 1] - r[i]);
    fd_step_ = min_h;

    // Cumulative Psi on the sample grid, Simpson per interval.
    std::vector<double> psi_vals(n, 0.0);
    std::size_t zero_idx = 0;
    double best = std::abs(r[0]);
    for (std::size_t i = 1; i < n; ++i) {
      if (std::abs(r[i]) < best) {
        best = std::abs(r[i]);
        zero_idx = i;
      }
    }
    for (std::size_t i = zero_idx; i + 1 < n; ++i) {
      const double h = r[i + 1] - r[i];
      psi_vals[i + 1] = psi_vals[i] + simpson_panel(h, even_eval(a_interp_, r[i]),
                                                    even_eval(a_interp_, 0.5 * (r[i] + r[i + 1])),
                                                    even_eval(a_interp_, r[i + 1]));
    }
    for (std::size_t i = zero_idx; i > 0; --i) {
      const double h = r[i] - r[i - 1];
      psi_vals[i - 1] = psi_vals[i] - simpson_panel(h, even_eval(a_interp_, r[i]),
                                                    even_eval(a_interp_, 0.5 * (r[i] + r[i - 1])),
                                                    even_eval(a_interp_, r[i - 1]));
    }
    const double psi0 = psi_vals[zero_idx] + (0.0 - r[zero_idx]) * even_eval(a_interp_, 0.0);
    for (double& v : psi_vals) v -= psi0;
    Psi_interp_ = MonotoneCubic(r, psi_vals);
  }

  // Evaluates an interpolant of an odd function, extending linearly with the
  // boundary secant slope outside the sampled range.
  double odd_eval(const MonotoneCubic& interp, double r) const {
    const double hi = interp.x_max();
    if (r > hi) return interp(hi) + (r - hi) * interp.derivative(hi);
    if (r < -hi) return -interp(hi) - (-r - hi) * interp.derivative(hi);
    return interp(r);
  }

  double even_eval(const MonotoneCubic& interp, double r) const {
    const double hi = interp.x_max();
    const double x = std::min(std::abs(r), hi) * (r < 0.0 ? -1.0 : 1.0);
    if (r > hi || r < -hi) return interp(r > 0.0 ? hi : -hi);
    return interp(x);
  }

  double m_ = 2.0;
  double K_ = 1.0;
  double exponent_ = 0.5;
  double sqrt_m_ = 1.0;
  double psi_scale_ = 1.0;
  bool canonical_ = true;
  double fd_step_ = 1e-4;
  MonotoneCubic A_interp_, a_interp_, Psi_interp_;
};

}  // namespace pmel
