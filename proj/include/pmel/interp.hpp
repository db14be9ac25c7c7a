#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pmel {

// Monotone cubic Hermite interpolant (Fritsch-Carlson slope limiting).
// Data monotone on a subinterval stays monotone there after interpolation;
// evaluation outside [x_front, x_back] clamps to the endpoint values.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;

  MonotoneCubic(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) {
      throw std::invalid_argument("MonotoneCubic needs >= 2 nodes and matching y");
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!(x_[i + 1] > x_[i])) {
        throw std::invalid_argument("MonotoneCubic nodes must be strictly increasing");
      }
    }
    d_.assign(n, 0.0);
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    if (n == 2) {
      d_[0] = d_[1] = delta[0];
    } else {
      for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
          d_[i] = 0.0;
        } else {
          const double w1 = 2.0 * h[i] + h[i - 1];
          const double w2 = h[i] + 2.0 * h[i - 1];
          d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
      }
      d_[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
      d_[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    }
  }

  double operator()(double x) const {
    if (x <= x_.front()) return y_.front();
    if (x >= x_.back()) return y_.back();
    const std::size_t i = locate(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * y_[i] + h * h10 * d_[i] + h01 * y_[i + 1] + h * h11 * d_[i + 1];
  }

  double derivative(double x) const {
    if (x <= x_.front()) return d_.front();
    if (x >= x_.back()) return d_.back();
    const std::size_t i = locate(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t;
    const double dh00 = (6.0 * t2 - 6.0 * t) / h;
    const double dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    const double dh01 = (-6.0 * t2 + 6.0 * t) / h;
    const double dh11 = 3.0 * t2 - 2.0 * t;
    return dh00 * y_[i] + dh10 * d_[i] + dh01 * y_[i + 1] + dh11 * d_[i + 1];
  }

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  const std::vector<double>& nodes() const { return x_; }
  const std::vector<double>& values() const { return y_; }

 private:
  // Three-point one-sided slope estimate, limited so the end interval
  // cannot overshoot (Fritsch-Carlson end conditions).
  static double edge_slope(double h0, double h1, double delta0, double delta1) {
    double d = ((2.0 * h0 + h1) * delta0 - h0 * delta1) / (h0 + h1);
    if (d * delta0 <= 0.0) {
      d = 0.0;
    } else if (delta0 * delta1 <= 0.0 && std::abs(d) > 3.0 * std::abs(delta0)) {
      d = 3.0 * delta0;
    }
    return d;
  }

  std::size_t locate(double x) const {
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t idx = static_cast<std::size_t>(it - x_.begin());
    return std::min(std::max<std::size_t>(idx, 1) - 1, x_.size() - 2);
  }

  std::vector<double> x_, y_, d_;
};

}  // namespace pmel
