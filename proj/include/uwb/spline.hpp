#pragma once

#include <span>
#include <vector>

namespace uwb {

/// Clamped cubic B-spline with fitted coefficients. Evaluation clamps the
/// argument to the fitted domain, so queries outside it return the endpoint
/// value.
struct SplineModel {
  std::vector<double> knots;  ///< clamped knot vector, degree 3
  std::vector<double> coefs;  ///< size knots.size() - 4

  bool empty() const { return coefs.empty(); }
  double domain_lo() const { return knots.front(); }
  double domain_hi() const { return knots.back(); }
  double eval(double x) const;
};

struct PenalizedFitConfig {
  int quantile_knots = 15;             ///< interior knots at data quantiles
  int cv_folds = 5;                    ///< deterministic fold = index mod folds
  std::vector<double> lambda_grid;     ///< empty -> 10^{-4..4}, half-decade
};

/// Penalized ("P-spline") least-squares fit: cubic B-spline basis on
/// quantile knots, second-difference coefficient penalty, smoothing weight
/// chosen by k-fold cross-validation over the grid.
SplineModel fit_penalized_spline(std::span<const double> x,
                                 std::span<const double> y,
                                 const PenalizedFitConfig& cfg);

}  // namespace uwb
