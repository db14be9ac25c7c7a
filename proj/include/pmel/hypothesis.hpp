#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "pmel/grid.hpp"
#include "pmel/noise.hpp"
#include "pmel/nonlinearity.hpp"

namespace pmel {

struct ClauseResult {
  std::string name;
  bool pass = true;
  // Smallest slack (bound minus quantity) seen; negative means violated.
  double worst_margin = std::numeric_limits<double>::infinity();
  std::string worst_at;

  void record(double margin, const std::string& where) {
    if (margin < worst_margin) {
      worst_margin = margin;
      worst_at = where;
    }
    if (margin < 0.0) pass = false;
  }
};

struct HypothesisReport {
  bool pass = true;
  std::vector<ClauseResult> clauses;
  // Max of |a'(r)| / (K |r|^((m-3)/2)) observed on 0 < |r| < r_cut. For
  // m < 3 the bound is not numerically decidable near zero, so this is
  // informational only and never fails the report.
  double near_zero_ratio = 0.0;
  double near_zero_cut = 1e-3;

  std::string to_string() const {
    std::ostringstream os;
    os << (pass ? "PASS" : "FAIL") << "\n";
    for (const ClauseResult& c : clauses) {
      os << "  [" << (c.pass ? "ok" : "VIOLATED") << "] " << c.name
         << "  worst margin " << c.worst_margin << " at " << c.worst_at << "\n";
    }
    os << "  near-zero |a'| ratio (|r| < " << near_zero_cut << ", informational): "
       << near_zero_ratio << "\n";
    return os.str();
  }
};

namespace detail {

inline std::string fmt_r(double r) {
  std::ostringstream os;
  os << "r=" << r;
  return os.str();
}

}  // namespace detail

// Checks the structural conditions on (A, a, Psi, g) over a sampling
// lattice:
//   1. |a(0)| <= K and |a'(r)| <= K |r|^((m-3)/2) for |r| >= r_cut;
//   2. K a(r) >= 1 for |r| >= 1, and the two-point coercivity
//      K |Psi(r) - Psi(s)| >= |r - s| when |r| v |s| >= 1,
//      K |Psi(r) - Psi(s)| >= |r - s|^((m+1)/2) otherwise;
//   3. sum_k g^k(x,u)^2 <= K^2 (1 + |u|)^2;
//   4. (sum_k |g^k(x,u) - g^k(y,v)|^2)^(1/2) <= K (d(x,y) + |u - v|).
// Throws std::invalid_argument for malformed inputs (that is a usage
// error, not a failed clause).
inline HypothesisReport check_hypothesis_h(const Nonlinearity& nl, const NoiseFamily& g,
                                           const SampleSpec& spec) {
  spec.validate();
  const double K = nl.K();
  const double m = nl.m();
  constexpr double r_cut = 1e-3;
  const double r_max = std::max(std::abs(spec.u_lo), std::abs(spec.u_hi));

  HypothesisReport report;
  report.near_zero_cut = r_cut;
  ClauseResult c1{"derivative bounds on a"};
  ClauseResult c2{"coercivity of a and Psi"};
  ClauseResult c3{"noise growth"};
  ClauseResult c4{"noise Lipschitz"};

  c1.record(K - std::abs(nl.a(0.0)), detail::fmt_r(0.0));

  // Log-spaced |r| samples catch power-law violations better than uniform
  // ones near the origin; add uniform coverage at scale >= 1.
  std::vector<double> radii;
  for (int i = 0; i <= 200; ++i) {
    radii.push_back(r_cut * std::pow(r_max / r_cut, i / 200.0));
  }
  for (int i = 1; i <= 400; ++i) {
    radii.push_back(r_max * i / 400.0);
  }
  for (double r : radii) {
    for (double sgn : {1.0, -1.0}) {
      const double rr = sgn * r;
      const double bound = K * std::pow(std::abs(rr), 0.5 * (m - 3.0));
      c1.record(bound - std::abs(nl.a_prime(rr)), detail::fmt_r(rr));
      if (std::abs(rr) >= 1.0) c2.record(K * nl.a(rr) - 1.0, detail::fmt_r(rr));
    }
  }
  for (int i = 0; i < 60; ++i) {
    const double r = r_cut * std::pow(1e-3, 1.0 - i / 60.0);
    const double bound = K * std::pow(r, 0.5 * (m - 3.0));
    report.near_zero_ratio = std::max(report.near_zero_ratio, std::abs(nl.a_prime(r)) / bound);
  }

  // Two-point Psi coercivity over a coarser pair lattice.
  {
    const int np = 81;
    std::vector<double> pts(np);
    for (int i = 0; i < np; ++i) pts[static_cast<std::size_t>(i)] = -r_max + 2.0 * r_max * i / (np - 1.0);
    for (int i = 0; i < np; ++i) {
      for (int j = i + 1; j < np; ++j) {
        const double r = pts[static_cast<std::size_t>(i)];
        const double s = pts[static_cast<std::size_t>(j)];
        const double lhs = K * std::abs(nl.Psi(r) - nl.Psi(s));
        const double rhs = std::max(std::abs(r), std::abs(s)) >= 1.0
                               ? std::abs(r - s)
                               : std::pow(std::abs(r - s), 0.5 * (m + 1.0));
        std::ostringstream os;
        os << "(r=" << r << ", s=" << s << ")";
        c2.record(lhs - rhs, os.str());
      }
    }
  }

  // Noise growth over the full lattice.
  const std::vector<TorusPoint> xs = spec.x_points();
  const std::vector<double> us = spec.u_points();
  for (const TorusPoint& x : xs) {
    for (double u : us) {
      const double bound = K * (1.0 + std::abs(u));
      const double got = std::sqrt(g.l2_norm_sq(x, u));
      std::ostringstream os;
      os << "(x=" << x.x0 << (spec.dim == 2 ? "," + std::to_string(x.x1) : "") << ", u=" << u
         << ")";
      c3.record(bound - got, os.str());
    }
  }

  // Noise Lipschitz over a subsampled pair lattice; full pairing would be
  // quartic in the lattice size.
  {
    auto thin = [](std::size_t n, std::size_t target) {
      return std::max<std::size_t>(1, n / target);
    };
    const std::size_t sx = thin(xs.size(), 12);
    const std::size_t su = thin(us.size(), 25);
    std::vector<TorusPoint> xs2;
    std::vector<double> us2;
    for (std::size_t i = 0; i < xs.size(); i += sx) xs2.push_back(xs[i]);
    for (std::size_t i = 0; i < us.size(); i += su) us2.push_back(us[i]);
    for (std::size_t xi = 0; xi < xs2.size(); ++xi) {
      for (std::size_t yi = xi; yi < xs2.size(); ++yi) {
        const double dx = torus_distance(xs2[xi], xs2[yi], spec.dim);
        for (std::size_t ui = 0; ui < us2.size(); ++ui) {
          for (std::size_t vi = (yi == xi ? ui + 1 : 0); vi < us2.size(); ++vi) {
            double s = 0.0;
            for (std::size_t k = 0; k < g.n_modes(); ++k) {
              const double d = g.eval(k, xs2[xi], us2[ui]) - g.eval(k, xs2[yi], us2[vi]);
              s += d * d;
            }
            const double bound = K * (dx + std::abs(us2[ui] - us2[vi]));
            std::ostringstream os;
            os << "(x=" << xs2[xi].x0 << ", u=" << us2[ui] << ") vs (y=" << xs2[yi].x0
               << ", v=" << us2[vi] << ")";
            c4.record(bound - std::sqrt(s), os.str());
          }
        }
      }
    }
  }

  report.clauses = {c1, c2, c3, c4};
  for (const ClauseResult& c : report.clauses) report.pass = report.pass && c.pass;
  return report;
}

}  // namespace pmel
