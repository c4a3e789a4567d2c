#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uwb/delaycal.hpp"

namespace uwb::pipeline {

/// `simulation.*` block: world truth and schedule.
struct SimulationConfig {
  std::uint64_t seed = 0;
  bool seed_set = false;

  double duration_s = 60.0;
  double rate_hz = 160.0;
  int robots = 3;
  int tags_per_robot = 2;

  std::vector<double> box_center{0.0, 0.0, 2.0};
  std::vector<double> box_halfextent{4.0, 4.0, 1.5};
  double trajectory_fill = 0.85;
  double freq_lo_hz = 0.05;
  double freq_hi_hz = 0.20;
  double attitude_amp_rad = 0.20;
  double yaw_amp_rad = 1.5;
  double tag_radius_m = 0.15;

  std::vector<double> delays_ns;   ///< per tag; empty -> drawn from seed
  double delay_range_ns = 3.0;
  std::vector<double> skews_ppm;   ///< per tag; empty -> drawn from seed
  double skew_range_ppm = 20.0;
  std::vector<double> offsets_ns;
  double offset_range_ns = 1e5;
  double timestamp_noise_ns = 0.05;

  double dt32_us = 300.0;
  double dt53_us = 1500.0;
  double delay_jitter = 0.05;

  bool power_bias = true;
  bool power_hetero = true;
  double fpp_p0_dbm = -78.0;
  double fpp_exponent = 2.0;
  double fpp_perturb_db = 3.0;
  int fpp_perturb_harmonic = 2;
  double fpp_noise_db = 1.0;
  double fpp_min_dbm = -101.0;
  double fpp_max_dbm = -65.0;
  double alpha_dbm = -82.0;
  std::vector<double> rho_bias_dbm;  ///< control abscissae
  std::vector<double> rho_bias_ns;   ///< reception-stamp shift at each point
  std::vector<double> rho_std_dbm;
  std::vector<double> rho_std_m;     ///< range-equivalent std targets

  double outlier_prob = 0.02;
  double outlier_mean_m = 1.0;
};

/// `calibration.*` block.
struct CalibrationConfig {
  delaycal::LossKind loss = delaycal::LossKind::cauchy;
  double alpha_dbm = -82.0;
  std::size_t min_samples = 500;
  int quantile_knots = 15;
  int cv_folds = 5;
  std::size_t window = 200;
  std::size_t stride = 50;
  double histogram_bin_ns = 0.05;
};

/// `evaluation.*` block.
struct EvaluationConfig {
  double gate_confidence = 0.95;
  double process_noise = 0.0025;  ///< (0.05 m/s)^2
  double sigma_fixed_m = 0.2;
  double init_std_m = 0.5;
  double init_cov_m2 = 1.0;
  double skip_s = 10.0;
  std::vector<int> focus_robots;  ///< empty -> every robot
};

struct PipelineConfig {
  SimulationConfig simulation;
  CalibrationConfig calibration;
  EvaluationConfig evaluation;
};

/// Parses the line-based `section.key = value` format. Unknown keys and
/// malformed values raise ConfigError; '#' starts a comment.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::string& path);

}  // namespace uwb::pipeline
