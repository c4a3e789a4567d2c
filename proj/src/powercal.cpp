#include "uwb/powercal.hpp"

#include <algorithm>
#include <cmath>

#include "uwb/errors.hpp"
#include "uwb/twr.hpp"

namespace uwb::powercal {

double lift(double fpp_dbm, double alpha_dbm) {
  return std::pow(10.0, (fpp_dbm - alpha_dbm) / 10.0);
}

double avg_fpp(double p2_dbm, double p4_dbm) {
  return 0.5 * (p2_dbm + p4_dbm);
}

double PowerCalibration::eval_bias(double lifted) const {
  return bias_m.eval(std::clamp(lifted, lift_min, lift_max));
}

double PowerCalibration::eval_std(double lifted) const {
  return std::max(1e-3, std_m.eval(std::clamp(lifted, lift_min, lift_max)));
}

namespace {

void check_samples(std::span<const BiasSample> samples,
                   const PowerFitConfig& cfg) {
  if (samples.size() < cfg.min_samples)
    raise(ErrorCode::insufficient_data,
          "power calibration needs >= " + std::to_string(cfg.min_samples) +
              " samples, got " + std::to_string(samples.size()));
  auto [lo, hi] = std::minmax_element(
      samples.begin(), samples.end(),
      [](const BiasSample& a, const BiasSample& b) {
        return a.lifted_fpp < b.lifted_fpp;
      });
  if (cfg.detection_domain_hi > cfg.detection_domain_lo &&
      cfg.detection_domain_lo > 0.0) {
    // Spread measured in dB: the lifted axis is exponentially top-heavy,
    // so a linear-spread test would only ever probe the band's top edge.
    const double spread_db =
        10.0 * std::log10(hi->lifted_fpp / std::max(1e-12, lo->lifted_fpp));
    const double band_db =
        10.0 * std::log10(cfg.detection_domain_hi / cfg.detection_domain_lo);
    if (spread_db < 0.10 * band_db)
      raise(ErrorCode::degenerate_domain,
            "lifted-FPP spread covers < 10% of the detection band");
  }
}

PenalizedFitConfig spline_cfg(const PowerFitConfig& cfg) {
  PenalizedFitConfig s;
  s.quantile_knots = cfg.quantile_knots;
  s.cv_folds = cfg.cv_folds;
  s.lambda_grid = cfg.lambda_grid;
  return s;
}

}  // namespace

SplineModel fit_bias(std::span<const BiasSample> samples,
                     const PowerFitConfig& cfg) {
  check_samples(samples, cfg);
  std::vector<double> x, y;
  x.reserve(samples.size());
  y.reserve(samples.size());
  for (const auto& s : samples) {
    x.push_back(s.lifted_fpp);
    y.push_back(s.bias_m);
  }
  return fit_penalized_spline(x, y, spline_cfg(cfg));
}

SplineModel fit_std(std::span<const BiasSample> samples,
                    const SplineModel& bias_spline,
                    const PowerFitConfig& cfg) {
  check_samples(samples, cfg);
  if (samples.size() < cfg.window_count)
    raise(ErrorCode::insufficient_data,
          "std fit: window larger than sample count");

  std::vector<BiasSample> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const BiasSample& a, const BiasSample& b) {
              return a.lifted_fpp < b.lifted_fpp;
            });

  std::vector<double> wx, wy;
  for (std::size_t start = 0; start + cfg.window_count <= sorted.size();
       start += cfg.window_stride) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t k = start; k < start + cfg.window_count; ++k) {
      const double r = sorted[k].bias_m - bias_spline.eval(sorted[k].lifted_fpp);
      sum += r;
      sq += r * r;
    }
    const auto n = static_cast<double>(cfg.window_count);
    const double mean = sum / n;
    const double var = std::max(0.0, (sq - n * mean * mean) / (n - 1.0));
    wx.push_back(sorted[start + cfg.window_count / 2].lifted_fpp);
    wy.push_back(std::sqrt(var));
  }
  if (wx.size() < 8)
    raise(ErrorCode::insufficient_data, "std fit: too few windows");

  return fit_penalized_spline(wx, wy, spline_cfg(cfg));
}

PowerCalibration fit(std::span<const BiasSample> samples, double alpha_dbm,
                     const PowerFitConfig& cfg) {
  PowerCalibration cal;
  cal.alpha_dbm = alpha_dbm;
  cal.bias_m = fit_bias(samples, cfg);
  cal.std_m = fit_std(samples, cal.bias_m, cfg);
  cal.lift_min = cal.bias_m.domain_lo();
  cal.lift_max = cal.bias_m.domain_hi();
  return cal;
}

std::pair<double, double> apply(double raw_range_m, double p2_dbm,
                                double p4_dbm, const PowerCalibration& cal) {
  const double x = std::clamp(lift(avg_fpp(p2_dbm, p4_dbm), cal.alpha_dbm),
                              cal.lift_min, cal.lift_max);
  return {raw_range_m - cal.eval_bias(x), cal.eval_std(x)};
}

double delay_corrected_range(const sim::TwrTransaction& tx,
                             const delaycal::DelaySolution& delays) {
  const double K = tx.intervals.clock_ratio();
  const double tof = twr::ds_twr_tof(tx.intervals) +
                     0.5 * (delays.delay(tx.initiator_id) +
                            K * delays.delay(tx.responder_id));
  return tof * sim::kSpeedOfLight;
}

std::vector<BiasSample> collect_bias_samples(
    const sim::Dataset& dataset, const delaycal::DelaySolution& delays,
    double alpha_dbm, std::optional<std::pair<int, int>> pair_filter) {
  std::vector<BiasSample> out;
  out.reserve(dataset.transactions.size());
  for (const auto& tx : dataset.transactions) {
    if (pair_filter &&
        (tx.initiator_id != pair_filter->first ||
         tx.responder_id != pair_filter->second))
      continue;
    if (!tx.has_truth())
      raise(ErrorCode::missing_truth, "bias sample without truth range");
    BiasSample s;
    s.lifted_fpp = lift(avg_fpp(tx.fpp2_dbm, tx.fpp4_dbm), alpha_dbm);
    s.bias_m = delay_corrected_range(tx, delays) - tx.truth_range_m;
    out.push_back(s);
  }
  return out;
}

}  // namespace uwb::powercal
