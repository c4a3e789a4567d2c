#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "uwb/delaycal.hpp"
#include "uwb/sim.hpp"
#include "uwb/spline.hpp"

namespace uwb::powercal {

/// Lifting map: 10^((fpp - alpha)/10). Strictly increasing, maps alpha to 1.
double lift(double fpp_dbm, double alpha_dbm);

/// Average FPP of the two recorded receptions, in dBm. Averaging happens
/// before lifting: the regressor is lift(avg(p2, p4)), not the mean of the
/// individual lifted values.
double avg_fpp(double p2_dbm, double p4_dbm);

/// One training point: range bias after antenna-delay correction, keyed by
/// the lifted average FPP of its transaction.
struct BiasSample {
  double lifted_fpp = 0.0;
  double bias_m = 0.0;
};

struct PowerFitConfig {
  std::size_t min_samples = 500;
  int quantile_knots = 15;
  int cv_folds = 5;
  std::vector<double> lambda_grid;       ///< empty -> built-in half-decade grid
  std::size_t window_count = 200;        ///< std estimation window
  std::size_t window_stride = 50;
  double detection_domain_lo = 0.0;      ///< lifted band for DegenerateDomain
  double detection_domain_hi = 0.0;      ///< (0,0) disables the check
};

/// Fitted bias/std curves over lifted average FPP. Evaluations clamp to the
/// fitted domain; the std curve is floored at 1 mm.
struct PowerCalibration {
  double alpha_dbm = -82.0;
  double lift_min = 0.0;
  double lift_max = 0.0;
  SplineModel bias_m;
  SplineModel std_m;

  double eval_bias(double lifted) const;
  double eval_std(double lifted) const;
};

/// Penalized smoothing-spline fit of bias vs lifted FPP from individual
/// measurements (no pre-averaging).
SplineModel fit_bias(std::span<const BiasSample> samples,
                     const PowerFitConfig& cfg);

/// Sliding-window standard deviation of (bias - bias_spline), spline fit
/// through the window points at their median abscissae.
SplineModel fit_std(std::span<const BiasSample> samples,
                    const SplineModel& bias_spline, const PowerFitConfig& cfg);

/// Full calibration: fit_bias then fit_std over the same samples.
PowerCalibration fit(std::span<const BiasSample> samples, double alpha_dbm,
                     const PowerFitConfig& cfg);

/// Corrected range and its modelled standard deviation.
std::pair<double, double> apply(double raw_range_m, double p2_dbm,
                                double p4_dbm, const PowerCalibration& cal);

/// Extracts bias samples from a dataset with truth ranges, correcting each
/// measurement with the solved antenna delays first. `pair_filter` narrows
/// to one ordered ranging pair when set.
std::vector<BiasSample> collect_bias_samples(
    const sim::Dataset& dataset, const delaycal::DelaySolution& delays,
    double alpha_dbm,
    std::optional<std::pair<int, int>> pair_filter = std::nullopt);

/// Delay-corrected range of one transaction (Eq. of the delay model applied
/// in reverse), in meters.
double delay_corrected_range(const sim::TwrTransaction& tx,
                             const delaycal::DelaySolution& delays);

}  // namespace uwb::powercal
