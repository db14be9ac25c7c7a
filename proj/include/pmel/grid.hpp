#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pmel {

// Point on the unit torus; x1 is ignored in one dimension.
struct TorusPoint {
  double x0 = 0.0;
  double x1 = 0.0;
};

inline double torus_distance(const TorusPoint& a, const TorusPoint& b, int dim) {
  auto axis = [](double p, double q) {
    double d = std::abs(p - q);
    d -= std::floor(d);
    return std::min(d, 1.0 - d);
  };
  const double d0 = axis(a.x0, b.x0);
  if (dim == 1) return d0;
  const double d1 = axis(a.x1, b.x1);
  return std::hypot(d0, d1);
}

// Uniform cell-centered grid on the periodic unit torus in 1 or 2
// dimensions: cells_per_dim cells of width 1/cells_per_dim per axis,
// centers at (i + 1/2) * spacing.
class PeriodicGrid {
 public:
  PeriodicGrid(int dim, int cells_per_dim) : dim_(dim), cells_(cells_per_dim) {
    if (dim != 1 && dim != 2) {
      throw std::invalid_argument("PeriodicGrid: dim must be 1 or 2, got " + std::to_string(dim));
    }
    if (cells_per_dim < 3) {
      throw std::invalid_argument("PeriodicGrid: need at least 3 cells per dimension");
    }
  }

  int dim() const { return dim_; }
  int cells_per_dim() const { return cells_; }
  std::size_t size() const {
    return dim_ == 1 ? static_cast<std::size_t>(cells_)
                     : static_cast<std::size_t>(cells_) * static_cast<std::size_t>(cells_);
  }
  double spacing() const { return 1.0 / cells_; }
  double cell_volume() const { return dim_ == 1 ? spacing() : spacing() * spacing(); }

  // Row-major flat index with periodic wrap of the per-axis indices.
  std::size_t index(int i, int j = 0) const {
    auto wrap = [this](int k) {
      k %= cells_;
      return k < 0 ? k + cells_ : k;
    };
    if (dim_ == 1) return static_cast<std::size_t>(wrap(i));
    return static_cast<std::size_t>(wrap(i)) * static_cast<std::size_t>(cells_) +
           static_cast<std::size_t>(wrap(j));
  }

  TorusPoint center(std::size_t flat) const {
    const double dx = spacing();
    if (dim_ == 1) return {(static_cast<double>(flat) + 0.5) * dx, 0.0};
    const std::size_t n = static_cast<std::size_t>(cells_);
    return {(static_cast<double>(flat / n) + 0.5) * dx, (static_cast<double>(flat % n) + 0.5) * dx};
  }

  bool operator==(const PeriodicGrid& other) const = default;

 private:
  int dim_;
  int cells_;
};

// Cell-averaged scalar field. Values are kept finite: constructing from
// data validates, and solvers re-check after every step.
class Field {
 public:
  explicit Field(const PeriodicGrid& grid, double fill = 0.0)
      : grid_(grid), v_(grid.size(), fill) {}

  Field(const PeriodicGrid& grid, std::vector<double> values)
      : grid_(grid), v_(std::move(values)) {
    if (v_.size() != grid_.size()) {
      throw std::invalid_argument("Field: value count does not match grid size");
    }
    if (!all_finite()) throw std::invalid_argument("Field: non-finite value");
  }

  const PeriodicGrid& grid() const { return grid_; }
  std::size_t size() const { return v_.size(); }
  double operator[](std::size_t i) const { return v_[i]; }
  double& operator[](std::size_t i) { return v_[i]; }
  const std::vector<double>& values() const { return v_; }
  std::vector<double>& values() { return v_; }

  double mass() const {
    double s = 0.0;
    for (double x : v_) s += x;
    return s * grid_.cell_volume();
  }

  double min_value() const { return *std::min_element(v_.begin(), v_.end()); }
  double max_value() const { return *std::max_element(v_.begin(), v_.end()); }

  bool all_finite() const {
    for (double x : v_) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  }

 private:
  PeriodicGrid grid_;
  std::vector<double> v_;
};

// Discrete Laplacian of A(u) in conservative flux form: the divergence of
// face fluxes (A(u_nbr) - A(u_cell)) / dx, so the cell sum telescopes to
// zero up to rounding.
template <typename F>
Field laplacian_of_A(const Field& u, const F& A) {
  const PeriodicGrid& g = u.grid();
  const int n = g.cells_per_dim();
  const double inv_dx2 = 1.0 / (g.spacing() * g.spacing());
  std::vector<double> w(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = A(u[i]);
  Field out(g);
  if (g.dim() == 1) {
    for (int i = 0; i < n; ++i) {
      const double flux_r = w[g.index(i + 1)] - w[g.index(i)];
      const double flux_l = w[g.index(i)] - w[g.index(i - 1)];
      out[g.index(i)] = (flux_r - flux_l) * inv_dx2;
    }
  } else {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double c = w[g.index(i, j)];
        const double fe = w[g.index(i + 1, j)] - c;
        const double fw = c - w[g.index(i - 1, j)];
        const double fn = w[g.index(i, j + 1)] - c;
        const double fs = c - w[g.index(i, j - 1)];
        out[g.index(i, j)] = (fe - fw + fn - fs) * inv_dx2;
      }
    }
  }
  return out;
}

inline Field laplacian(const Field& u) {
  return laplacian_of_A(u, [](double r) { return r; });
}

// L^p norm of a cell field, (sum |u_i|^p dV)^(1/p); p = infinity gives the
// max norm. Requires p >= 1.
inline double lp_norm(const Field& u, double p) {
  if (p == std::numeric_limits<double>::infinity()) {
    double m = 0.0;
    for (double x : u.values()) m = std::max(m, std::abs(x));
    return m;
  }
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1 or infinity");
  double s = 0.0;
  if (p == 1.0) {
    for (double x : u.values()) s += std::abs(x);
  } else if (p == 2.0) {
    for (double x : u.values()) s += x * x;
  } else {
    for (double x : u.values()) s += std::pow(std::abs(x), p);
  }
  s *= u.grid().cell_volume();
  if (p == 1.0) return s;
  if (p == 2.0) return std::sqrt(s);
  return std::pow(s, 1.0 / p);
}

inline double l1_distance(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument("l1_distance: grids differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s * a.grid().cell_volume();
}

// Time-indexed sequence of fields on a fixed grid.
struct Trajectory {
  std::vector<double> times;
  std::vector<Field> states;

  std::size_t n_states() const { return states.size(); }
  const Field& front() const { return states.front(); }
  const Field& back() const { return states.back(); }
  double horizon() const { return times.empty() ? 0.0 : times.back() - times.front(); }
};

// L^1-in-space, L^1-in-time distance between two trajectories sharing a
// grid and a time partition, by the left-endpoint rule.
inline double l1_path_distance(const Trajectory& a, const Trajectory& b) {
  if (a.n_states() != b.n_states() || a.n_states() < 2) {
    throw std::invalid_argument("l1_path_distance: trajectories must share a time grid");
  }
  for (std::size_t j = 0; j < a.times.size(); ++j) {
    if (std::abs(a.times[j] - b.times[j]) > 1e-12 * (1.0 + std::abs(a.times[j]))) {
      throw std::invalid_argument("l1_path_distance: time grids differ at step " +
                                  std::to_string(j));
    }
  }
  if (!(a.states.front().grid() == b.states.front().grid())) {
    throw std::invalid_argument("l1_path_distance: spatial grids differ");
  }
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < a.n_states(); ++j) {
    s += l1_distance(a.states[j], b.states[j]) * (a.times[j + 1] - a.times[j]);
  }
  return s;
}

// Smooth compactly supported bump of height `amp` centered at `center`
// with radius `width` (in torus distance).
inline Field make_bump(const PeriodicGrid& g, double amp, TorusPoint center, double width) {
  Field f(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double s = torus_distance(g.center(i), center, g.dim()) / width;
    f[i] = s < 1.0 ? amp * std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0;
  }
  return f;
}

inline Field make_sine(const PeriodicGrid& g, double amp, int freq, int axis = 0) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  Field f(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const TorusPoint p = g.center(i);
    f[i] = amp * std::sin(two_pi * freq * (axis == 0 ? p.x0 : p.x1));
  }
  return f;
}

inline Field make_constant(const PeriodicGrid& g, double c) { return Field(g, c); }

}  // namespace pmel
