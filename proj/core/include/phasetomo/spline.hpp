#pragma once

#include <span>
#include <vector>

namespace phasetomo {

/// Natural cubic spline (zero second derivative at both ends) through
/// strictly increasing knots. Value and first derivative come from the same
/// piecewise cubic, so the derivative is continuous everywhere inside the
/// knot range.
class NaturalCubicSpline {
 public:
  NaturalCubicSpline() = default;
  NaturalCubicSpline(std::span<const double> x, std::span<const double> y);

  struct Sample {
    double value;
    double derivative;
  };

  /// Requires front() <= t <= back().
  Sample eval(double t) const;

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }
  bool contains(double t) const { return !x_.empty() && t >= x_.front() && t <= x_.back(); }
  bool empty() const { return x_.empty(); }

  const std::vector<double>& knots() const { return x_; }
  const std::vector<double>& values() const { return y_; }

 private:
  std::size_t locate(double t) const;

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;  // second derivatives at the knots
  bool uniform_ = false;
  double inv_step_ = 0.0;
};

}  // namespace phasetomo
