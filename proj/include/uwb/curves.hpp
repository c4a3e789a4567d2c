#pragma once

#include <cstddef>
#include <vector>

#include "uwb/errors.hpp"

namespace uwb {

/// C1 piecewise-cubic interpolant (Catmull-Rom tangents) through control
/// points with strictly increasing abscissae. Evaluation outside the control
/// range holds the endpoint value. Used for ground-truth corruption profiles
/// in the simulator.
class CubicCurve {
 public:
  CubicCurve() = default;

  CubicCurve(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() != y_.size() || x_.size() < 2)
      raise(ErrorCode::config_error, "CubicCurve needs >= 2 control points");
    for (std::size_t i = 1; i < x_.size(); ++i)
      if (!(x_[i] > x_[i - 1]))
        raise(ErrorCode::config_error, "CubicCurve abscissae must increase");
    tangents();
  }

  bool empty() const { return x_.empty(); }

  double operator()(double x) const {
    if (x_.empty()) return 0.0;
    if (x <= x_.front()) return y_.front();
    if (x >= x_.back()) return y_.back();
    std::size_t hi = 1;
    while (x_[hi] < x) ++hi;
    const std::size_t lo = hi - 1;
    const double h = x_[hi] - x_[lo];
    const double t = (x - x_[lo]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * y_[lo] + h10 * h * m_[lo] + h01 * y_[hi] + h11 * h * m_[hi];
  }

  double min_x() const { return x_.front(); }
  double max_x() const { return x_.back(); }

 private:
  void tangents() {
    const std::size_t n = x_.size();
    m_.resize(n);
    m_[0] = (y_[1] - y_[0]) / (x_[1] - x_[0]);
    m_[n - 1] = (y_[n - 1] - y_[n - 2]) / (x_[n - 1] - x_[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i)
      m_[i] = (y_[i + 1] - y_[i - 1]) / (x_[i + 1] - x_[i - 1]);
  }

  std::vector<double> x_, y_, m_;
};

}  // namespace uwb
