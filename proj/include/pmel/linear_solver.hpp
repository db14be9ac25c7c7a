#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmel/errors.hpp"

namespace pmel {

// Tridiagonal solve (Thomas algorithm). Row i reads
//   sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i],
// with sub[0] and sup[n-1] ignored. Destroys its inputs.
inline std::vector<double> solve_tridiagonal(std::vector<double> sub, std::vector<double> diag,
                                             std::vector<double> sup, std::vector<double> rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    if (diag[i - 1] == 0.0) throw SolverError("tridiagonal solve: zero pivot");
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  if (diag[n - 1] == 0.0) throw SolverError("tridiagonal solve: zero pivot");
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
  }
  return rhs;
}

// Periodic (cyclic) tridiagonal solve via Sherman-Morrison: row i couples
// x[(i-1) mod n], x[i], x[(i+1) mod n]; sub[0] and sup[n-1] are the wrap
// entries. Requires n >= 3.
inline std::vector<double> solve_cyclic_tridiagonal(const std::vector<double>& sub,
                                                    const std::vector<double>& diag,
                                                    const std::vector<double>& sup,
                                                    const std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  if (n < 3) throw std::invalid_argument("solve_cyclic_tridiagonal: need n >= 3");
  const double alpha = sub[0];
  const double beta = sup[n - 1];
  const double gamma = -diag[0];

  std::vector<double> d(diag);
  d[0] = diag[0] - gamma;
  d[n - 1] = diag[n - 1] - alpha * beta / gamma;
  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = beta;

  std::vector<double> y = solve_tridiagonal(sub, d, sup, rhs);
  std::vector<double> z = solve_tridiagonal(sub, d, sup, u);
  const double vy = y[0] + alpha / gamma * y[n - 1];
  const double vz = z[0] + alpha / gamma * z[n - 1];
  const double factor = vy / (1.0 + vz);
  for (std::size_t i = 0; i < n; ++i) y[i] -= factor * z[i];
  return y;
}

struct KrylovResult {
  std::vector<double> x;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

// Matrix-free BiCGStab with Jacobi preconditioning for the 2D implicit
// diffusion systems; `apply` computes A x, `precond` holds 1/diag(A).
inline KrylovResult bicgstab(const std::function<void(const std::vector<double>&,
                                                      std::vector<double>&)>& apply,
                             const std::vector<double>& rhs, const std::vector<double>& x0,
                             const std::vector<double>& precond, double rel_tol, int max_iter) {
  const std::size_t n = rhs.size();
  KrylovResult out;
  out.x = x0;
  std::vector<double> r(n), r0(n), p(n, 0.0), v(n, 0.0), s(n), t(n), phat(n), shat(n);
  apply(out.x, v);
  double rhs_norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = rhs[i] - v[i];
    rhs_norm += rhs[i] * rhs[i];
  }
  rhs_norm = std::sqrt(rhs_norm);
  const double stop = rel_tol * (rhs_norm > 0.0 ? rhs_norm : 1.0);
  r0 = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  std::fill(v.begin(), v.end(), 0.0);

  auto norm = [&](const std::vector<double>& w) {
    double s2 = 0.0;
    for (double x : w) s2 += x * x;
    return std::sqrt(s2);
  };
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) s2 += a[i] * b[i];
    return s2;
  };

  out.residual = norm(r);
  if (out.residual <= stop) {
    out.converged = true;
    return out;
  }
  for (int it = 0; it < max_iter; ++it) {
    const double rho_new = dot(r0, r);
    if (rho_new == 0.0) break;
    if (it == 0) {
      p = r;
    } else {
      const double beta = (rho_new / rho) * (alpha / omega);
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    }
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) phat[i] = precond[i] * p[i];
    apply(phat, v);
    alpha = rho / dot(r0, v);
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    if (norm(s) <= stop) {
      for (std::size_t i = 0; i < n; ++i) out.x[i] += alpha * phat[i];
      out.converged = true;
      out.iterations = it + 1;
      apply(out.x, t);
      for (std::size_t i = 0; i < n; ++i) t[i] = rhs[i] - t[i];
      out.residual = norm(t);
      return out;
    }
    for (std::size_t i = 0; i < n; ++i) shat[i] = precond[i] * s[i];
    apply(shat, t);
    const double tt = dot(t, t);
    if (tt == 0.0) break;
    omega = dot(t, s) / tt;
    for (std::size_t i = 0; i < n; ++i) {
      out.x[i] += alpha * phat[i] + omega * shat[i];
      r[i] = s[i] - omega * t[i];
    }
    out.iterations = it + 1;
    out.residual = norm(r);
    if (out.residual <= stop) {
      out.converged = true;
      return out;
    }
    if (omega == 0.0) break;
  }
  return out;
}

}  // namespace pmel
