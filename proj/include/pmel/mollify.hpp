#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pmel/errors.hpp"
#include "pmel/grid.hpp"
#include "pmel/noise.hpp"
#include "pmel/nonlinearity.hpp"
#include "pmel/quadrature.hpp"

namespace pmel {

namespace detail {

// Standard C-infinity bump on (-1, 1), unnormalized.
inline double bump(double t) {
  const double t2 = t * t;
  return t2 < 1.0 ? std::exp(-1.0 / (1.0 - t2)) : 0.0;
}

// Quadrature nodes/weights for convolution against the normalized bump
// kernel of the given radius. Weights are nonnegative and sum to one, so
// convolving a constant reproduces it exactly and convex-combination
// bounds survive discretization untouched.
struct KernelNodes {
  std::vector<double> offset;
  std::vector<double> weight;
};

inline KernelNodes bump_kernel_nodes(double radius, int panels = 64) {
  KernelNodes k;
  const int n = panels;  // composite Simpson, n even
  const double h = 2.0 / n;
  double total = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double t = -1.0 + h * j;
    const double simpson_w = (j == 0 || j == n) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    const double w = simpson_w * bump(t);
    if (w > 0.0) {
      k.offset.push_back(radius * t);
      k.weight.push_back(w);
      total += w;
    }
  }
  for (double& w : k.weight) w /= total;
  return k;
}

// True when |a(r) - a(z)| <= 1/n for all |r| <= 3n, |z - r| <= 3 theta,
// sampled at spacing min(theta, 1/n)/4. a is even, so scanning r >= 0
// with a sliding window max/min covers all sign combinations.
inline bool modulus_ok(const Nonlinearity& nl, int n, double theta) {
  const double tol = 1.0 / n;
  const double s = std::min(theta, 1.0 / n) / 4.0;
  const double r_hi = 3.0 * n + 3.0 * theta;
  const std::size_t last = static_cast<std::size_t>(std::ceil(r_hi / s));
  const std::size_t centers = static_cast<std::size_t>(std::floor(3.0 * n / s));
  const std::size_t w = static_cast<std::size_t>(std::floor(3.0 * theta / s));

  std::deque<std::pair<std::size_t, double>> maxq, minq;
  auto value = [&](std::size_t j) { return nl.a(static_cast<double>(j) * s); };
  auto push = [&](std::size_t j) {
    const double v = value(j);
    while (!maxq.empty() && maxq.back().second <= v) maxq.pop_back();
    maxq.emplace_back(j, v);
    while (!minq.empty() && minq.back().second >= v) minq.pop_back();
    minq.emplace_back(j, v);
  };

  std::size_t next = 0;
  for (std::size_t i = 0; i <= centers; ++i) {
    const std::size_t right = std::min(i + w, last);
    while (next <= right) push(next++);
    const std::size_t left = i >= w ? i - w : 0;
    while (maxq.front().first < left) maxq.pop_front();
    while (minq.front().first < left) minq.pop_front();
    const double vi = value(i);
    if (maxq.front().second - vi > tol || vi - minq.front().second > tol) return false;
  }
  return true;
}

// Largest theta in (0, 1] passing the modulus test, to relative
// tolerance 1e-3, found by geometric bracketing plus bisection. The
// passing set is an interval down from 0, so bisection is sound.
inline double theta_search(const Nonlinearity& nl, int n) {
  if (modulus_ok(nl, n, 1.0)) return 1.0;
  double hi = 1.0;
  double lo = 0.5;
  while (!modulus_ok(nl, n, lo)) {
    hi = lo;
    lo *= 0.5;
    if (lo < 1e-10) {
      throw SolverError("mollify: no admissible smoothing scale above 1e-10 for n=" +
                        std::to_string(n));
    }
  }
  while (hi - lo > 1e-3 * lo) {
    const double mid = 0.5 * (hi + lo);
    (modulus_ok(nl, n, mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace detail

// Regularized coefficient bundle at level n:
//   a_n   = bump_theta * (2/n + a(3 theta v |.| ^ 3n))     (even, >= 2/n),
//   A_n   = integral of a_n^2 from 0                        (odd, strictly increasing),
//   Psi_n = integral of a_n from 0,
//   g_n   = bump_(1/n) convolution of g in (x, u) with u clamped to [-n, n],
//   u0_n  = bump_(1/n) grid convolution of u0 clamped to [-n, n].
//
// a_n is evaluated by direct kernel quadrature against the base a, which
// keeps the lower bound 2/n and the deviation bound sup_{|r|<=n}
// |a_n - a| <= 3/n exact convex-combination facts rather than
// interpolation approximations. A_n and Psi_n use cumulative tables whose
// per-interval quadratic completion matches the table construction, so
// increments stay strictly positive.
class MollifiedCoefficients {
 public:
  int n() const { return n_; }
  double theta() const { return theta_; }
  const NoiseFamily& g_n() const { return gn_; }
  const Field& u0_n() const { return u0n_; }

  double a_n(double r) const {
    const double x = std::abs(r);
    double acc = 2.0 / n_;
    for (std::size_t j = 0; j < kernel_.offset.size(); ++j) {
      acc += kernel_.weight[j] * base_.a(clamp_arg(std::abs(x - kernel_.offset[j])));
    }
    return acc;
  }

  double A_n_prime(double r) const {
    const double v = a_n(r);
    return v * v;
  }

  double A_n(double r) const { return cumulative(r, true); }
  double Psi_n(double r) const { return cumulative(r, false); }

  friend MollifiedCoefficients mollify(const Nonlinearity& nl, const NoiseFamily& g,
                                       const Field& u0, int n);

 private:
  MollifiedCoefficients(int n, double theta, const Nonlinearity& base, NoiseFamily gn, Field u0n)
      : n_(n), theta_(theta), base_(base), gn_(std::move(gn)), u0n_(std::move(u0n)) {}

  double clamp_arg(double x) const { return std::clamp(x, 3.0 * theta_, 3.0 * n_); }

  // Integral of a_n (or a_n^2) from 0 to r. Inside the table the partial
  // interval integrates the quadratic through the stored endpoint and
  // midpoint values; past the table a_n is constant, so the tail is
  // linear.
  double cumulative(double r, bool squared) const {
    const double x = std::abs(r);
    const std::vector<double>& F = squared ? FA_ : FP_;
    double out;
    if (x >= xs_.back()) {
      const double edge = squared ? ys_.back() * ys_.back() : ys_.back();
      out = F.back() + (x - xs_.back()) * edge;
    } else {
      const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
      const std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
      const double h = xs_[i + 1] - xs_[i];
      const double t = x - xs_[i];
      auto val = [&](double y) { return squared ? y * y : y; };
      const double f0 = val(ys_[i]);
      const double fm = val(ym_[i]);
      const double f1 = val(ys_[i + 1]);
      const double b = (4.0 * fm - 3.0 * f0 - f1) / h;
      const double c = (2.0 * f0 + 2.0 * f1 - 4.0 * fm) / (h * h);
      out = F[i] + t * (f0 + t * (0.5 * b + t * c / 3.0));
    }
    return std::copysign(out, r);
  }

  int n_;
  double theta_;
  Nonlinearity base_;
  NoiseFamily gn_;
  Field u0n_;
  detail::KernelNodes kernel_;
  std::vector<double> xs_, ys_, ym_, FA_, FP_;
};

inline MollifiedCoefficients mollify(const Nonlinearity& nl, const NoiseFamily& g,
                                     const Field& u0, int n) {
  if (n < 1) throw std::invalid_argument("mollify: n must be >= 1");
  const double theta = detail::theta_search(nl, n);
  const int dim = u0.grid().dim();

  // Mollified noise: tensor bump convolution in (x, u) at radius 1/n.
  const detail::KernelNodes xk = detail::bump_kernel_nodes(1.0 / n, 16);
  std::vector<ModeFn> modes;
  modes.reserve(g.n_modes());
  for (std::size_t k = 0; k < g.n_modes(); ++k) {
    modes.push_back([g, k, xk, dim, n](const TorusPoint& x, double u) {
      auto wrap = [](double t) { return t - std::floor(t); };
      double acc = 0.0;
      for (std::size_t ju = 0; ju < xk.offset.size(); ++ju) {
        const double uu = std::clamp(u - xk.offset[ju], -static_cast<double>(n),
                                     static_cast<double>(n));
        const double wu = xk.weight[ju];
        for (std::size_t j0 = 0; j0 < xk.offset.size(); ++j0) {
          const double w0 = wu * xk.weight[j0];
          if (dim == 1) {
            acc += w0 * g.eval(k, {wrap(x.x0 - xk.offset[j0]), 0.0}, uu);
          } else {
            for (std::size_t j1 = 0; j1 < xk.offset.size(); ++j1) {
              acc += w0 * xk.weight[j1] *
                     g.eval(k, {wrap(x.x0 - xk.offset[j0]), wrap(x.x1 - xk.offset[j1])}, uu);
            }
          }
        }
      }
      return acc;
    });
  }
  NoiseFamily gn(std::move(modes), g.K());

  // Mollified initial state: clamp to [-n, n], then separable circular
  // convolution with the bump sampled at cell centers. Weights normalize
  // to one, so constants and the total mass are preserved exactly.
  Field u0n(u0.grid());
  {
    const PeriodicGrid& grid = u0.grid();
    const double dx = grid.spacing();
    const double radius = 1.0 / n;
    const int rc = static_cast<int>(std::floor(radius / dx));
    std::vector<double> w(static_cast<std::size_t>(2 * rc + 1));
    double total = 0.0;
    for (int j = -rc; j <= rc; ++j) {
      const double v = detail::bump(j * dx / radius);
      w[static_cast<std::size_t>(j + rc)] = v;
      total += v;
    }
    for (double& v : w) v /= total;

    std::vector<double> clamped(u0.size());
    for (std::size_t i = 0; i < u0.size(); ++i) {
      clamped[i] = std::clamp(u0[i], -static_cast<double>(n), static_cast<double>(n));
    }
    const int cells = grid.cells_per_dim();
    auto convolve_axis = [&](const std::vector<double>& in, int axis) {
      std::vector<double> out(in.size(), 0.0);
      if (dim == 1) {
        for (int i = 0; i < cells; ++i) {
          double acc = 0.0;
          for (int j = -rc; j <= rc; ++j) {
            acc += w[static_cast<std::size_t>(j + rc)] * in[grid.index(i - j)];
          }
          out[static_cast<std::size_t>(i)] = acc;
        }
      } else {
        for (int i = 0; i < cells; ++i) {
          for (int l = 0; l < cells; ++l) {
            double acc = 0.0;
            for (int j = -rc; j <= rc; ++j) {
              acc += w[static_cast<std::size_t>(j + rc)] *
                     (axis == 0 ? in[grid.index(i - j, l)] : in[grid.index(i, l - j)]);
            }
            out[grid.index(i, l)] = acc;
          }
        }
      }
      return out;
    };
    std::vector<double> vals = convolve_axis(clamped, 0);
    if (dim == 2) vals = convolve_axis(vals, 1);
    u0n = Field(grid, std::move(vals));
  }

  MollifiedCoefficients mc(n, theta, nl, std::move(gn), std::move(u0n));
  mc.kernel_ = detail::bump_kernel_nodes(theta, 64);

  // Graded table for the cumulative integrals: fine (theta/4) near the
  // mollified kinks at 0 and 3n, coarse in between where a_n is as smooth
  // as a.
  {
    std::vector<double> xs;
    const double fine = theta / 4.0;
    const double lo_end = std::min(8.0 * theta, 3.0 * static_cast<double>(n));
    for (double x = 0.0; x < lo_end; x += fine) xs.push_back(x);
    const double mid_start = lo_end;
    const double mid_end = std::max(mid_start, 3.0 * n - 8.0 * theta);
    const int mid_count = 4096;
    for (int i = 0; i <= mid_count; ++i) {
      xs.push_back(mid_start + (mid_end - mid_start) * i / static_cast<double>(mid_count));
    }
    for (double x = mid_end; x <= 3.0 * n + 4.0 * theta; x += fine) xs.push_back(x);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end(),
                         [&](double p, double q) { return q - p < 0.25 * fine; }),
             xs.end());

    const std::size_t count = xs.size();
    mc.xs_ = std::move(xs);
    mc.ys_.resize(count);
    mc.ym_.assign(count, 0.0);
    mc.FA_.assign(count, 0.0);
    mc.FP_.assign(count, 0.0);
    for (std::size_t i = 0; i < count; ++i) mc.ys_[i] = mc.a_n(mc.xs_[i]);
    for (std::size_t i = 0; i + 1 < count; ++i) {
      const double h = mc.xs_[i + 1] - mc.xs_[i];
      const double ym = mc.a_n(0.5 * (mc.xs_[i] + mc.xs_[i + 1]));
      mc.ym_[i] = ym;
      mc.FA_[i + 1] = mc.FA_[i] + simpson_panel(h, mc.ys_[i] * mc.ys_[i], ym * ym,
                                                mc.ys_[i + 1] * mc.ys_[i + 1]);
      mc.FP_[i + 1] = mc.FP_[i] + simpson_panel(h, mc.ys_[i], ym, mc.ys_[i + 1]);
    }
  }
  return mc;
}

}  // namespace pmel
