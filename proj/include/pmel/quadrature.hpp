#pragma once

#include <cmath>
#include <string>

#include "pmel/errors.hpp"

namespace pmel {

namespace detail {

template <typename F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth, const std::string& context) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double h = b - a;
  const double left = (h / 12.0) * (fa + 4.0 * flm + fm);
  const double right = (h / 12.0) * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol || h <= 1e-14 * (std::abs(a) + std::abs(b) + 1.0)) {
    return left + right + delta / 15.0;
  }
  if (depth <= 0) {
    throw QuadratureError("adaptive Simpson did not converge on [" + std::to_string(a) + ", " +
                          std::to_string(b) + "] while computing " + context);
  }
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, context) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, context);
}

}  // namespace detail

// Adaptive Simpson quadrature with absolute tolerance. `context` names the
// integral in the error message if the refinement budget runs out.
template <typename F>
double integrate(const F& f, double a, double b, double abs_tol = 1e-8,
                 const std::string& context = "integral", int max_depth = 48) {
  if (a == b) return 0.0;
  if (b < a) return -integrate(f, b, a, abs_tol, context, max_depth);
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = ((b - a) / 6.0) * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, max_depth, context);
}

// Composite Simpson over one interval using precomputed endpoint and
// midpoint values. Positive integrands give strictly positive results.
inline double simpson_panel(double h, double f_lo, double f_mid, double f_hi) {
  return (h / 6.0) * (f_lo + 4.0 * f_mid + f_hi);
}

}  // namespace pmel
