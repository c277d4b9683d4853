#include "phasetomo/spline.hpp"

#include <algorithm>
#include <cmath>

#include "phasetomo/error.hpp"

namespace phasetomo {

NaturalCubicSpline::NaturalCubicSpline(std::span<const double> x, std::span<const double> y)
    : x_(x.begin(), x.end()), y_(y.begin(), y.end()) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw InputError("spline needs at least two (x, y) pairs of equal length");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x_[i]) || !std::isfinite(y_[i])) throw InputError("spline knots must be finite");
    if (i > 0 && !(x_[i] > x_[i - 1])) throw InputError("spline knots must be strictly increasing");
  }

  // Tridiagonal system for the interior second derivatives (Thomas algorithm).
  m_.assign(n, 0.0);
  if (n > 2) {
    std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1];
      const double h1 = x_[i + 1] - x_[i];
      const double lower = h0;
      diag[i] = 2.0 * (h0 + h1);
      upper[i] = h1;
      rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
      if (i > 1) {
        const double w = lower / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
      }
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
      if (i == 1) break;
    }
  }

  const double step = (x_.back() - x_.front()) / static_cast<double>(n - 1);
  uniform_ = true;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs((x_[i] - x_[i - 1]) - step) > 1e-9 * step) {
      uniform_ = false;
      break;
    }
  }
  inv_step_ = 1.0 / step;
}

std::size_t NaturalCubicSpline::locate(double t) const {
  const std::size_t last = x_.size() - 2;
  if (uniform_) {
    auto i = static_cast<std::ptrdiff_t>((t - x_.front()) * inv_step_);
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(last));
    // Guard against rounding at knot boundaries.
    if (t < x_[i] && i > 0) --i;
    if (t > x_[i + 1] && static_cast<std::size_t>(i) < last) ++i;
    return static_cast<std::size_t>(i);
  }
  const auto it = std::upper_bound(x_.begin(), x_.end(), t);
  const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - x_.begin()) - 1));
  return std::min(i, last);
}

NaturalCubicSpline::Sample NaturalCubicSpline::eval(double t) const {
  const std::size_t i = locate(t);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - t) / h;
  const double b = (t - x_[i]) / h;
  const double value = a * y_[i] + b * y_[i + 1] +
                       ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * (h * h) / 6.0;
  const double derivative = (y_[i + 1] - y_[i]) / h +
                            (-(3.0 * a * a - 1.0) * m_[i] + (3.0 * b * b - 1.0) * m_[i + 1]) * h / 6.0;
  return {value, derivative};
}

}  // namespace phasetomo
