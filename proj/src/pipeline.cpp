#include "uwb/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "uwb/errors.hpp"
#include "uwb/twr.hpp"

namespace uwb::pipeline {

namespace {

Eigen::Vector3d to_vec3(const std::vector<double>& v, const char* what) {
  if (v.size() != 3)
    raise(ErrorCode::config_error,
          std::string(what) + " needs exactly 3 components");
  return {v[0], v[1], v[2]};
}

// Per-tag truth parameter: explicit list or seeded uniform draw. The draw
// happens either way so explicit overrides do not shift later draws.
double tag_param(const std::vector<double>& explicit_values, std::size_t idx,
                 double range, RandomStream& stream, const char* what,
                 std::size_t n_tags) {
  const double drawn = stream.uniform(-range, range);
  if (explicit_values.empty()) return drawn;
  if (explicit_values.size() != n_tags)
    raise(ErrorCode::config_error,
          std::string(what) + " list must have one entry per tag");
  return explicit_values[idx];
}

// Default injected rho: smooth wave spanning +-0.334 ns (~ +-10 cm) with
// gentle curvature, peaks placed inside the FPP band the default geometry
// actually exercises.
const std::vector<double> kDefaultRhoBiasDbm = {-102, -98, -94, -90, -87, -84,
                                                -80,  -76, -72, -68, -65};
const std::vector<double> kDefaultRhoBiasNs = {
    0.20, 0.30, 0.334, 0.22, 0.0, -0.22, -0.334, -0.28, -0.15, -0.05, 0.0};
// Default injected std profile, range-equivalent targets: 17 cm peak in the
// mid-FPP region falling monotonically to 2.5 cm at the high end. The peak
// is kept narrow so the std contrast spans the well-populated FPP band, not
// just the sparse close-range tail.
const std::vector<double> kDefaultRhoStdDbm = {-102, -94, -88, -84, -80,
                                               -76,  -70, -66};
const std::vector<double> kDefaultRhoStdM = {0.12, 0.15, 0.17, 0.08,
                                             0.05, 0.035, 0.027, 0.025};

}  // namespace

sim::ScheduleConfig build_schedule(const SimulationConfig& cfg) {
  sim::ScheduleConfig s;
  s.rate_hz = cfg.rate_hz;
  s.duration_s = cfg.duration_s;
  s.dt32_nominal_s = cfg.dt32_us * 1e-6;
  s.dt53_nominal_s = cfg.dt53_us * 1e-6;
  s.delay_jitter = cfg.delay_jitter;
  s.outlier_prob = cfg.outlier_prob;
  s.outlier_mean_m = cfg.outlier_mean_m;
  return s;
}

sim::World build_world(const SimulationConfig& cfg) {
  if (cfg.robots < 1 || cfg.tags_per_robot < 1)
    raise(ErrorCode::config_error, "need >= 1 robot and >= 1 tag per robot");
  if (cfg.duration_s < 0.0)
    raise(ErrorCode::config_error, "duration_s must be >= 0");
  if (cfg.skew_range_ppm > 100.0 ||
      std::any_of(cfg.skews_ppm.begin(), cfg.skews_ppm.end(),
                  [](double s) { return std::abs(s) > 100.0; }))
    raise(ErrorCode::config_error, "|skew| above 100 ppm plausibility bound");
  if (std::any_of(cfg.delays_ns.begin(), cfg.delays_ns.end(),
                  [](double d) { return std::abs(d) > 10.0; }))
    raise(ErrorCode::config_error, "|delay| above 10 ns plausibility bound");
  if (cfg.timestamp_noise_ns < 0.0)
    raise(ErrorCode::config_error, "timestamp_noise_ns must be >= 0");

  sim::World world;

  sim::TrajectoryConfig tc;
  tc.box_center = to_vec3(cfg.box_center, "simulation.box_center_m");
  tc.box_halfextent = to_vec3(cfg.box_halfextent, "simulation.box_halfextent_m");
  tc.freq_lo_hz = cfg.freq_lo_hz;
  tc.freq_hi_hz = cfg.freq_hi_hz;
  tc.fill = cfg.trajectory_fill;
  tc.attitude_amp_rad = cfg.attitude_amp_rad;
  tc.yaw_amp_rad = cfg.yaw_amp_rad;
  tc.duration_s = cfg.duration_s;

  RandomStream traj_stream(cfg.seed, "trajectory");
  world.robots = sim::generate_trajectories(tc, cfg.robots, traj_stream);

  RandomStream param_stream(cfg.seed, "params");
  const auto n_tags =
      static_cast<std::size_t>(cfg.robots) *
      static_cast<std::size_t>(cfg.tags_per_robot);
  for (std::size_t k = 0; k < n_tags; ++k) {
    sim::TagSpec tag;
    tag.tag_id = static_cast<int>(k);
    tag.robot_id = static_cast<int>(k) / cfg.tags_per_robot;
    const int slot = static_cast<int>(k) % cfg.tags_per_robot;
    const double ang =
        2.0 * M_PI * slot / std::max(1, cfg.tags_per_robot);
    tag.body_offset_m = {cfg.tag_radius_m * std::cos(ang),
                         cfg.tag_radius_m * std::sin(ang), 0.02 * slot};
    tag.delay_ns = tag_param(cfg.delays_ns, k, cfg.delay_range_ns,
                             param_stream, "simulation.delays_ns", n_tags);
    tag.clock.skew = 1e-6 * tag_param(cfg.skews_ppm, k, cfg.skew_range_ppm,
                                      param_stream, "simulation.skews_ppm",
                                      n_tags);
    tag.clock.offset_ns =
        tag_param(cfg.offsets_ns, k, cfg.offset_range_ns, param_stream,
                  "simulation.offsets_ns", n_tags);
    tag.clock.timestamp_noise_std_ns = cfg.timestamp_noise_ns;
    world.tags.push_back(tag);
  }

  sim::PowerTruth& pw = world.power;
  pw.p0_dbm = cfg.fpp_p0_dbm;
  pw.pathloss_exponent = cfg.fpp_exponent;
  pw.perturb_amp_db = cfg.fpp_perturb_db;
  pw.perturb_harmonic = cfg.fpp_perturb_harmonic;
  pw.fpp_noise_db = cfg.fpp_noise_db;
  pw.fpp_min_dbm = cfg.fpp_min_dbm;
  pw.fpp_max_dbm = cfg.fpp_max_dbm;
  pw.alpha_dbm = cfg.alpha_dbm;
  pw.bias_enabled = cfg.power_bias;
  pw.hetero_enabled = cfg.power_hetero;

  const auto& bias_x = cfg.rho_bias_dbm.empty() ? kDefaultRhoBiasDbm : cfg.rho_bias_dbm;
  const auto& bias_y = cfg.rho_bias_ns.empty() ? kDefaultRhoBiasNs : cfg.rho_bias_ns;
  if (bias_x.size() != bias_y.size())
    raise(ErrorCode::config_error, "rho_bias control lists differ in length");
  pw.bias_dbm_to_ns = CubicCurve(bias_x, bias_y);

  // Convert range-equivalent std targets into the per-stamp heteroscedastic
  // std s the simulator injects: the DS error variance decomposes as
  // (1+r+r^2)(R + s^2/2) in ToF units, so hitting a target sigma exactly
  // needs s^2 = 2((sigma/c)^2/(1+r+r^2) - R).
  const auto& std_x = cfg.rho_std_dbm.empty() ? kDefaultRhoStdDbm : cfg.rho_std_dbm;
  const auto& std_y = cfg.rho_std_m.empty() ? kDefaultRhoStdM : cfg.rho_std_m;
  if (std_x.size() != std_y.size())
    raise(ErrorCode::config_error, "rho_std control lists differ in length");
  {
    const double r = cfg.dt32_us / cfg.dt53_us;
    const double geom = 1.0 + r + r * r;
    const double R = cfg.timestamp_noise_ns * cfg.timestamp_noise_ns;
    std::vector<double> per_stamp(std_y.size());
    for (std::size_t i = 0; i < std_y.size(); ++i) {
      const double tof_var =
          (std_y[i] / sim::kSpeedOfLight) * (std_y[i] / sim::kSpeedOfLight);
      per_stamp[i] = std::sqrt(std::max(0.0, 2.0 * (tof_var / geom - R)));
    }
    pw.std_dbm_to_ns = CubicCurve(std_x, per_stamp);
  }

  world.build_default_pairs();
  if (world.pairs.empty())
    raise(ErrorCode::config_error,
          "pair set is empty (all tags on one robot?)");
  return world;
}

sim::Dataset cmd_simulate(const PipelineConfig& cfg, const std::string& out_path,
                          SimulateSummary* summary) {
  if (!cfg.simulation.seed_set)
    raise(ErrorCode::config_error, "simulation.seed is mandatory");
  const sim::World world = build_world(cfg.simulation);
  sim::Dataset ds = sim::run_schedule(world, build_schedule(cfg.simulation),
                                      cfg.simulation.seed);
  const std::uint64_t dropped = ds.dropped;
  ds = canonical_quantize(std::move(ds));
  ds.dropped = dropped;
  if (summary) {
    summary->transactions = ds.transactions.size();
    summary->dropped = dropped;
  }
  if (!out_path.empty()) save_dataset(ds, out_path);
  return ds;
}

namespace {

std::map<long long, std::size_t> residual_histogram(
    const delaycal::DelayProblem& problem, std::span<const double> delays,
    double bin_ns) {
  std::map<long long, std::size_t> hist;
  for (const auto& rec : problem.records) {
    const double e = 0.5 * (delays[static_cast<std::size_t>(rec.i)] +
                            rec.K * delays[static_cast<std::size_t>(rec.j)]) +
                     rec.c0_ns;
    ++hist[static_cast<long long>(std::llround(e / bin_ns))];
  }
  return hist;
}

}  // namespace

delaycal::DelaySolution cmd_calibrate_delays(const sim::Dataset& dataset,
                                             const PipelineConfig& cfg,
                                             const std::string& out_delays,
                                             const std::string& out_report) {
  const delaycal::DelayProblem problem = delaycal::build_problem(dataset);
  delaycal::SolveOptions opts;
  opts.loss = cfg.calibration.loss;
  opts.histogram_bin_ns = cfg.calibration.histogram_bin_ns;
  const delaycal::DelaySolution sol = delaycal::solve(problem, opts);

  if (!out_delays.empty()) save_delays(sol, out_delays);

  if (!out_report.empty()) {
    std::string rep = "uwbcal_delay_report,1\n";
    rep += "loss," +
           std::string(cfg.calibration.loss == delaycal::LossKind::l2
                           ? "l2"
                           : "cauchy") +
           "\n";
    rep += "iterations," + std::to_string(sol.iterations) + "\n";
    rep += "converged," + std::to_string(sol.converged ? 1 : 0) + "\n";
    rep += "final_cost," + format_sig(sol.final_cost, kDatasetDigits) + "\n";
    rep += "condition_number," +
           format_sig(sol.condition_number, kDatasetDigits) + "\n";
    for (const auto& [tag, d] : sol.delays_ns)
      rep += "delay," + std::to_string(tag) + "," +
             format_sig(d, kExactDigits) + "\n";
    for (const auto& ps : sol.pair_stats)
      rep += "pair," + std::to_string(ps.initiator_id) + "," +
             std::to_string(ps.responder_id) + "," +
             std::to_string(ps.count) + "," +
             format_sig(ps.mean_ns, kDatasetDigits) + "," +
             format_sig(ps.std_ns, kDatasetDigits) + "," +
             format_sig(ps.mode_bin_center_ns, kDatasetDigits) + "\n";

    // Pre/post residual histograms (Fig. 3 style, bin centers in ns).
    const std::size_t n = problem.tag_count();
    std::vector<double> zeros(n, 0.0);
    std::vector<double> solved(n);
    for (std::size_t q = 0; q < n; ++q)
      solved[q] = sol.delays_ns.at(problem.tag_ids[q]);
    for (const auto& [bin, count] :
         residual_histogram(problem, zeros, cfg.calibration.histogram_bin_ns))
      rep += "hist,pre," +
             format_sig(static_cast<double>(bin) *
                            cfg.calibration.histogram_bin_ns,
                        kDatasetDigits) +
             "," + std::to_string(count) + "\n";
    for (const auto& [bin, count] :
         residual_histogram(problem, solved, cfg.calibration.histogram_bin_ns))
      rep += "hist,post," +
             format_sig(static_cast<double>(bin) *
                            cfg.calibration.histogram_bin_ns,
                        kDatasetDigits) +
             "," + std::to_string(count) + "\n";
    write_text_file(out_report, rep);
  }
  return sol;
}

powercal::PowerCalibration cmd_calibrate_power(
    const sim::Dataset& dataset, const delaycal::DelaySolution& delays,
    const PipelineConfig& cfg, const std::string& out_cal,
    const std::string& out_report) {
  powercal::PowerFitConfig fit_cfg;
  fit_cfg.min_samples = cfg.calibration.min_samples;
  fit_cfg.quantile_knots = cfg.calibration.quantile_knots;
  fit_cfg.cv_folds = cfg.calibration.cv_folds;
  fit_cfg.window_count = cfg.calibration.window;
  fit_cfg.window_stride = cfg.calibration.stride;
  fit_cfg.detection_domain_lo =
      powercal::lift(cfg.simulation.fpp_min_dbm, cfg.calibration.alpha_dbm);
  fit_cfg.detection_domain_hi =
      powercal::lift(cfg.simulation.fpp_max_dbm, cfg.calibration.alpha_dbm);

  const auto samples = powercal::collect_bias_samples(
      dataset, delays, cfg.calibration.alpha_dbm);
  const powercal::PowerCalibration cal =
      powercal::fit(samples, cfg.calibration.alpha_dbm, fit_cfg);

  if (!out_cal.empty()) save_powercal(cal, out_cal);

  if (!out_report.empty()) {
    std::string rep = "uwbcal_power_report,1\n";
    rep += "samples," + std::to_string(samples.size()) + "\n";

    // Pooled curves on a fixed grid, then per-pair bias curves.
    const int grid_n = 60;
    for (int g = 0; g <= grid_n; ++g) {
      const double x = cal.lift_min +
                       (cal.lift_max - cal.lift_min) * g / grid_n;
      rep += "bias_curve,pooled," + format_sig(x, kDatasetDigits) + "," +
             format_sig(cal.eval_bias(x), kDatasetDigits) + "\n";
    }
    for (int g = 0; g <= grid_n; ++g) {
      const double x = cal.lift_min +
                       (cal.lift_max - cal.lift_min) * g / grid_n;
      rep += "std_curve,pooled," + format_sig(x, kDatasetDigits) + "," +
             format_sig(cal.eval_std(x), kDatasetDigits) + "\n";
    }
    std::set<std::pair<int, int>> seen;
    for (const auto& tx : dataset.transactions)
      seen.insert({tx.initiator_id, tx.responder_id});
    for (const auto& pr : seen) {
      const auto pair_samples = powercal::collect_bias_samples(
          dataset, delays, cfg.calibration.alpha_dbm, pr);
      if (pair_samples.size() < cfg.calibration.min_samples) continue;
      powercal::PowerFitConfig pair_cfg = fit_cfg;
      pair_cfg.detection_domain_lo = 0.0;  // per-pair subsets may be narrow
      pair_cfg.detection_domain_hi = 0.0;
      const SplineModel pair_bias = powercal::fit_bias(pair_samples, pair_cfg);
      const std::string tag = std::to_string(pr.first) + ">" +
                              std::to_string(pr.second);
      for (int g = 0; g <= grid_n; ++g) {
        const double x = pair_bias.domain_lo() +
                         (pair_bias.domain_hi() - pair_bias.domain_lo()) * g /
                             grid_n;
        rep += "bias_curve," + tag + "," + format_sig(x, kDatasetDigits) +
               "," + format_sig(pair_bias.eval(x), kDatasetDigits) + "\n";
      }
    }
    write_text_file(out_report, rep);
  }
  return cal;
}

ApplyStats cmd_apply(const sim::Dataset& dataset,
                     const delaycal::DelaySolution& delays,
                     const powercal::PowerCalibration& cal,
                     const std::string& out_corrected,
                     const std::string& out_report) {
  if (dataset.transactions.empty())
    raise(ErrorCode::empty_dataset, "apply: empty dataset");

  std::string body;
  ApplyStats st;
  double raw_sum = 0, raw_sq = 0, dc_sum = 0, dc_sq = 0, fc_sum = 0, fc_sq = 0;
  for (const auto& tx : dataset.transactions) {
    const double raw = twr::ds_twr_tof(tx.intervals) * sim::kSpeedOfLight;
    const double dc = powercal::delay_corrected_range(tx, delays);
    const auto [fc, sigma] =
        powercal::apply(dc, tx.fpp2_dbm, tx.fpp4_dbm, cal);

    if (!out_corrected.empty()) {
      body += format_sig(tx.timestamp_s, kDatasetDigits);
      body += ',' + std::to_string(tx.initiator_id);
      body += ',' + std::to_string(tx.responder_id);
      for (double v : {raw, dc, fc, sigma}) {
        body += ',';
        body += format_sig(v, kDatasetDigits);
      }
      body += tx.has_truth()
                  ? "," + format_sig(tx.truth_range_m, kDatasetDigits)
                  : std::string(",");
      body += '\n';
    }
    if (tx.has_truth()) {
      const double br = raw - tx.truth_range_m;
      const double bd = dc - tx.truth_range_m;
      const double bf = fc - tx.truth_range_m;
      st.mean_abs_raw_m += std::abs(br);
      st.mean_abs_delaycal_m += std::abs(bd);
      st.mean_abs_fullcal_m += std::abs(bf);
      raw_sum += br; raw_sq += br * br;
      dc_sum += bd; dc_sq += bd * bd;
      fc_sum += bf; fc_sq += bf * bf;
      ++st.count;
    }
  }
  if (st.count > 0) {
    const auto n = static_cast<double>(st.count);
    st.mean_abs_raw_m /= n;
    st.mean_abs_delaycal_m /= n;
    st.mean_abs_fullcal_m /= n;
    auto sdev = [n](double sum, double sq) {
      const double m = sum / n;
      return std::sqrt(std::max(0.0, sq / n - m * m));
    };
    st.std_raw_m = sdev(raw_sum, raw_sq);
    st.std_delaycal_m = sdev(dc_sum, dc_sq);
    st.std_fullcal_m = sdev(fc_sum, fc_sq);
  }

  if (!out_corrected.empty()) {
    std::string out = "uwbcal_corrected,1\n";
    out += "t_s,initiator,responder,range_raw_m,range_delaycal_m,"
           "range_fullcal_m,sigma_m,truth_range_m\n";
    out += body;
    write_text_file(out_corrected, out);
  }
  if (!out_report.empty()) {
    std::string rep = "uwbcal_apply_report,1\n";
    rep += "stage,mean_abs_bias_m,std_m,count\n";
    auto row = [&](const char* stage, double mean, double stdv) {
      rep += std::string(stage) + "," + format_sig(mean, kDatasetDigits) +
             "," + format_sig(stdv, kDatasetDigits) + "," +
             std::to_string(st.count) + "\n";
    };
    row("raw", st.mean_abs_raw_m, st.std_raw_m);
    row("delaycal", st.mean_abs_delaycal_m, st.std_delaycal_m);
    row("fullcal", st.mean_abs_fullcal_m, st.std_fullcal_m);
    write_text_file(out_report, rep);
  }
  return st;
}

std::vector<RmseRow> cmd_localize(std::span<const LocalizeScenario> scenarios,
                                  const delaycal::DelaySolution* delays,
                                  const powercal::PowerCalibration* cal,
                                  std::span<const ekf::RunMode> modes,
                                  const std::string& out_rmse,
                                  const std::string& traj_dir) {
  if (scenarios.empty())
    raise(ErrorCode::usage_error, "localize: no scenarios given");
  if (modes.empty())
    raise(ErrorCode::usage_error, "localize: no modes given");

  std::vector<RmseRow> rows;
  for (const auto& sc : scenarios) {
    const sim::World world = build_world(sc.config.simulation);
    if (!sc.dataset.transactions.empty() &&
        sc.dataset.transactions.back().timestamp_s >
            sc.config.simulation.duration_s + 1e-9)
      raise(ErrorCode::config_error,
            "localize: dataset extends past the configured duration "
            "(truth tracks do not cover it)");

    std::vector<int> robots = sc.config.evaluation.focus_robots;
    if (robots.empty())
      for (int r = 0; r < sc.config.simulation.robots; ++r)
        robots.push_back(r);
    for (int r : robots)
      if (r < 0 || r >= sc.config.simulation.robots)
        raise(ErrorCode::config_error,
              "localize: focus robot " + std::to_string(r) +
                  " does not exist");

    for (int robot : robots) {
      for (const ekf::RunMode mode : modes) {
        ekf::EkfRunConfig rc;
        rc.mode = mode;
        rc.focus_robot = robot;
        rc.q_spectral = sc.config.evaluation.process_noise;
        rc.sigma_fixed_m = sc.config.evaluation.sigma_fixed_m;
        rc.init_pos_std_m = sc.config.evaluation.init_std_m;
        rc.init_cov_m2 = sc.config.evaluation.init_cov_m2;
        rc.gate_confidence = sc.config.evaluation.gate_confidence;
        rc.convergence_skip_s = sc.config.evaluation.skip_s;
        rc.seed = sc.config.simulation.seed;
        const ekf::EkfRunResult res =
            ekf::run(sc.dataset, world, delays, cal, rc);
        rows.push_back({sc.name, robot, mode, res.rmse_m});

        if (!traj_dir.empty()) {
          std::string t = "uwbcal_trajectory,1\n";
          t += "t_s,est_x,est_y,est_z,true_x,true_y,true_z,cov_trace\n";
          for (const auto& pt : res.trajectory) {
            t += format_sig(pt.t_s, kDatasetDigits);
            for (int a = 0; a < 3; ++a)
              t += "," + format_sig(pt.estimate[a], kDatasetDigits);
            for (int a = 0; a < 3; ++a)
              t += "," + format_sig(pt.truth[a], kDatasetDigits);
            t += "," + format_sig(pt.cov_trace, kDatasetDigits) + "\n";
          }
          write_text_file(traj_dir + "/" + sc.name + "_r" +
                              std::to_string(robot) + "_" +
                              ekf::run_mode_name(mode) + ".csv",
                          t);
        }
      }
    }
  }
  if (!out_rmse.empty()) write_text_file(out_rmse, serialize_rmse(rows));
  return rows;
}

std::string serialize_rmse(std::span<const RmseRow> rows) {
  std::string out = "uwbcal_rmse,1\n";
  out += "scenario,robot,mode,rmse_m\n";
  for (const auto& r : rows)
    out += r.scenario + "," + std::to_string(r.robot) + "," +
           ekf::run_mode_name(r.mode) + "," +
           format_sig(r.rmse_m, kDatasetDigits) + "\n";
  return out;
}

std::vector<RmseRow> parse_rmse(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line))
    raise(ErrorCode::format_error, "rmse file: empty");
  if (line != "uwbcal_rmse,1") {
    if (line.rfind("uwbcal_rmse,", 0) == 0)
      raise(ErrorCode::version_mismatch, "rmse file: unsupported version");
    raise(ErrorCode::format_error, "rmse file: bad header");
  }
  if (!std::getline(ss, line) || line != "scenario,robot,mode,rmse_m")
    raise(ErrorCode::format_error, "rmse file: bad column header");
  std::vector<RmseRow> rows;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ls(line);
    RmseRow r;
    std::string robot, mode, rmse;
    if (!std::getline(ls, r.scenario, ',') || !std::getline(ls, robot, ',') ||
        !std::getline(ls, mode, ',') || !std::getline(ls, rmse))
      raise(ErrorCode::format_error, "rmse file: bad row");
    r.robot = std::stoi(robot);
    if (mode == "raw")
      r.mode = ekf::RunMode::raw;
    else if (mode == "calibrated")
      r.mode = ekf::RunMode::calibrated;
    else if (mode == "calibrated_with_variance")
      r.mode = ekf::RunMode::calibrated_with_variance;
    else
      raise(ErrorCode::format_error, "rmse file: unknown mode " + mode);
    r.rmse_m = parse_double_strict(rmse);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace uwb::pipeline
