// Acceptance suite: runs every acceptance criterion end to end and prints
// one PASS/FAIL line per criterion. Exit code is the number of failures.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "uwb/config.hpp"
#include "uwb/delaycal.hpp"
#include "uwb/ekf.hpp"
#include "uwb/formats.hpp"
#include "uwb/gating.hpp"
#include "uwb/pipeline.hpp"
#include "uwb/powercal.hpp"
#include "uwb/rng.hpp"
#include "uwb/sim.hpp"
#include "uwb/twr.hpp"

using namespace uwb;
using pipeline::PipelineConfig;
using pipeline::SimulationConfig;

namespace {

int g_failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double elapsed_s() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

void report(int num, const char* name, bool pass, double secs,
            const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%.1f s)%s%s\n", pass ? "PASS" : "FAIL",
              num, name, secs, detail.empty() ? "" : " | ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

// Fleet truth shared by the calibration and localization criteria.
const std::vector<double> kDelays = {0.35, -1.2, 2.7, -0.4, 1.05, -2.3};
const std::vector<double> kSkews = {12.0, -8.0, 20.0, -15.0, 5.0, -19.0};

SimulationConfig fleet_config(std::uint64_t seed) {
  SimulationConfig c;
  c.seed = seed;
  c.seed_set = true;
  c.robots = 3;
  c.tags_per_robot = 2;
  c.duration_s = 240.0;
  c.rate_hz = 160.0;
  c.delays_ns = kDelays;
  c.skews_ppm = kSkews;
  c.offsets_ns.assign(6, 0.0);
  c.timestamp_noise_ns = 0.05;
  c.power_bias = false;
  c.power_hetero = false;
  c.outlier_prob = 0.02;
  return c;
}

// Single static pair, every channel off; criteria 1 and 2 enable what they
// need.
SimulationConfig pair_config(std::uint64_t seed) {
  SimulationConfig c;
  c.seed = seed;
  c.seed_set = true;
  c.robots = 2;
  c.tags_per_robot = 1;
  c.trajectory_fill = 0.0;
  c.delays_ns = {0.0, 0.0};
  c.skews_ppm = {0.0, 0.0};
  c.offsets_ns = {0.0, 0.0};
  c.timestamp_noise_ns = 0.0;
  c.delay_jitter = 0.0;
  c.power_bias = false;
  c.power_hetero = false;
  c.fpp_noise_db = 0.0;
  c.fpp_perturb_db = 0.0;
  c.outlier_prob = 0.0;
  c.fpp_min_dbm = -150.0;
  c.fpp_max_dbm = 0.0;
  return c;
}

sim::Dataset generate(const SimulationConfig& c) {
  const sim::World w = pipeline::build_world(c);
  return sim::run_schedule(w, pipeline::build_schedule(c), c.seed);
}

double max_delay_error(const delaycal::DelaySolution& sol) {
  double worst = 0.0;
  for (const auto& [tag, d] : sol.delays_ns)
    worst =
        std::max(worst, std::abs(d - kDelays[static_cast<std::size_t>(tag)]));
  return worst;
}

// Shared artifacts: delays from the delay-training run, power calibration
// from the power-training run.
struct Artifacts {
  delaycal::DelaySolution delays;
  powercal::PowerCalibration cal;
  PipelineConfig power_train_cfg;
  bool ready = false;
};
Artifacts g_art;

// ---------------------------------------------------------------------------

void criterion1_skew_bias() {
  Timer timer;
  SimulationConfig c = pair_config(101);
  c.skews_ppm = {0.0, 20.0};

  // Exact noiseless signature.
  sim::World w = pipeline::build_world(c);
  sim::ScheduleConfig sched = pipeline::build_schedule(c);
  sim::SimStreams streams(c.seed);
  const auto tx0 =
      sim::simulate_exchange(w, w.tag(0), w.tag(1), 0.0, sched, streams);
  const double ss0 = twr::ss_twr_tof(tx0->intervals) - tx0->truth_tof_ns;
  const double ds0 = twr::ds_twr_tof(tx0->intervals) - tx0->truth_tof_ns;
  const bool exact_ok = std::abs(ss0 - (-3.0)) < 1e-9 && std::abs(ds0) < 1e-9;

  // Monte-Carlo at R = 0.01 ns^2 over 1e5 transactions.
  c.timestamp_noise_ns = 0.1;
  w = pipeline::build_world(c);
  sim::SimStreams mc_streams(c.seed);
  const int n = 100000;
  double ss_sum = 0, ds_sum = 0;
  for (int i = 0; i < n; ++i) {
    const auto tx =
        sim::simulate_exchange(w, w.tag(0), w.tag(1), 0.0, sched, mc_streams);
    ss_sum += twr::ss_twr_tof(tx->intervals) - tx->truth_tof_ns;
    ds_sum += twr::ds_twr_tof(tx->intervals) - tx->truth_tof_ns;
  }
  const twr::SkewPair sk{0.0, 20e-6, 0.01};
  const double dt32_ns = sched.dt32_nominal_s * 1e9;
  const double dt53_ns = sched.dt53_nominal_s * 1e9;
  const double se_ss = std::sqrt(twr::var_ss(sk) / n);
  const double se_ds = std::sqrt(twr::var_ds(sk, dt32_ns, dt53_ns) / n);
  const double ss_expected =
      twr::expected_ss_bias(sk, tx0->truth_tof_ns, dt32_ns);
  const double ds_expected = twr::expected_ds_bias(sk.gamma_i, tx0->truth_tof_ns);
  const bool mc_ok = std::abs(ss_sum / n - ss_expected) < 4 * se_ss &&
                     std::abs(ds_sum / n - ds_expected) < 4 * se_ds;

  const double secs = timer.elapsed_s();
  report(1, "skew-bias reproduction", exact_ok && mc_ok && secs < 10.0,
         secs,
         fmt("ss_bias=%.6f ns (expected -3), ds_bias=%.2e ns; MC ss dev "
             "%.2e < %.2e, ds dev %.2e < %.2e",
             ss0, ds0, std::abs(ss_sum / n - ss_expected), 4 * se_ss,
             std::abs(ds_sum / n - ds_expected), 4 * se_ds));
}

void criterion2_variance_model() {
  Timer timer;
  bool ok = true;
  std::string detail;
  for (const double ratio : {0.05, 0.2, 1.0}) {
    SimulationConfig c = pair_config(202);
    c.timestamp_noise_ns = 0.1;  // R = 0.01 ns^2
    c.dt53_us = 1500.0;
    c.dt32_us = ratio * c.dt53_us;
    const sim::World w = pipeline::build_world(c);
    const sim::ScheduleConfig sched = pipeline::build_schedule(c);
    sim::SimStreams streams(c.seed);
    const int n = 1000000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
      const auto tx =
          sim::simulate_exchange(w, w.tag(0), w.tag(1), 0.0, sched, streams);
      const double e = twr::ds_twr_tof(tx->intervals) - tx->truth_tof_ns;
      sum += e;
      sq += e * e;
    }
    const double mc_var = sq / n - (sum / n) * (sum / n);
    const double model =
        twr::var_ds({0.0, 0.0, 0.01}, c.dt32_us * 1e3, c.dt53_us * 1e3);
    const double rel = std::abs(mc_var / model - 1.0);
    detail += fmt("r=%.2f: %.3f%%  ", ratio, 100 * rel);
    ok = ok && rel < 0.03;
  }
  const double secs = timer.elapsed_s();
  report(2, "DS-TWR variance model (3 ratios, 1e6 draws)",
         ok && secs < 30.0, secs, detail);
}

void criterion3_optimal_delay() {
  Timer timer;
  const double T = 4.5e-3, d32 = 3e-4;
  const double root = twr::optimal_delay(T, d32);
  const bool range_ok = root >= 1.40e-3 && root <= 1.44e-3;

  double best = 0.0, best_val = 1e300;
  for (double g = 1e-4; g <= 1e-2; g += 1e-6) {
    const double v = twr::total_uncertainty(T, d32, g, 1.0);
    if (v < best_val) {
      best_val = v;
      best = g;
    }
  }
  const bool grid_ok = std::abs(best - root) <= 1e-6 + 1e-12;
  report(3, "optimal second-response delay", range_ok && grid_ok,
         timer.elapsed_s(),
         fmt("root=%.2f us, grid minimizer=%.2f us", root * 1e6, best * 1e6));
}

void criterion4_delay_recovery() {
  Timer timer;
  delaycal::SolveOptions opts;
  opts.loss = delaycal::LossKind::cauchy;

  const sim::Dataset train_a = generate(fleet_config(4001));
  const auto sol_a = delaycal::solve(delaycal::build_problem(train_a), opts);
  const sim::Dataset train_b = generate(fleet_config(4002));
  const auto sol_b = delaycal::solve(delaycal::build_problem(train_b), opts);

  const double err_a = max_delay_error(sol_a);
  const double err_b = max_delay_error(sol_b);
  double seed_gap = 0.0;
  for (int t = 0; t < 6; ++t)
    seed_gap = std::max(seed_gap, std::abs(sol_a.delay(t) - sol_b.delay(t)));

  g_art.delays = sol_a;

  const double secs = timer.elapsed_s();
  report(4, "antenna-delay recovery on the 6-tag/12-pair fleet",
         train_a.transactions.size() > 37000 && err_a < 0.05 &&
             err_b < 0.05 && seed_gap < 0.03 && secs < 60.0,
         secs,
         fmt("n=%zu, max errors %.4f / %.4f ns, seed agreement %.4f ns",
             train_a.transactions.size(), err_a, err_b, seed_gap));
}

void criterion5_robustness() {
  Timer timer;
  int cauchy_wins = 0;
  int mode_at_zero = 0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    SimulationConfig c = fleet_config(9000 + static_cast<std::uint64_t>(trial));
    c.duration_s = 40.0;
    c.outlier_prob = 0.05;
    const sim::Dataset ds = generate(c);
    const delaycal::DelayProblem prob = delaycal::build_problem(ds);

    delaycal::SolveOptions l2o;
    l2o.loss = delaycal::LossKind::l2;
    delaycal::SolveOptions co;
    co.loss = delaycal::LossKind::cauchy;
    const auto l2 = delaycal::solve(prob, l2o);
    const auto cauchy = delaycal::solve(prob, co);
    if (max_delay_error(cauchy) < max_delay_error(l2)) ++cauchy_wins;

    // Pooled post-calibration residual histogram. Bin width 0.2 ns (~6 cm)
    // is comparable to the residual spread, so "the mode bin contains 0"
    // is a sharp statement rather than a bin-edge lottery.
    const double bin_ns = 0.2;
    std::map<long long, std::size_t> hist;
    std::vector<double> d(prob.tag_count());
    for (std::size_t q = 0; q < prob.tag_count(); ++q)
      d[q] = cauchy.delay(prob.tag_ids[q]);
    for (const auto& rec : prob.records) {
      const double e = 0.5 * (d[static_cast<std::size_t>(rec.i)] +
                              rec.K * d[static_cast<std::size_t>(rec.j)]) +
                       rec.c0_ns;
      ++hist[static_cast<long long>(std::llround(e / bin_ns))];
    }
    long long mode_bin = 0;
    std::size_t best = 0;
    for (const auto& [b, cnt] : hist)
      if (cnt > best) {
        best = cnt;
        mode_bin = b;
      }
    if (mode_bin == 0) ++mode_at_zero;
  }
  const double secs = timer.elapsed_s();
  report(5, "Cauchy robustness over 100 seeds with 5% outliers",
         cauchy_wins >= 95 && mode_at_zero >= 95, secs,
         fmt("cauchy beats l2 in %d/100, residual mode at 0 in %d/100",
             cauchy_wins, mode_at_zero));
}

void criterion6_power_recovery() {
  Timer timer;
  PipelineConfig pc;
  pc.simulation = fleet_config(6001);
  pc.simulation.power_bias = true;
  pc.simulation.power_hetero = true;
  pc.simulation.outlier_prob = 0.0;  // power stage scenario
  const sim::Dataset train = generate(pc.simulation);
  const sim::World w = pipeline::build_world(pc.simulation);

  const auto samples = powercal::collect_bias_samples(
      train, g_art.delays, pc.calibration.alpha_dbm);
  powercal::PowerFitConfig fcfg;
  fcfg.detection_domain_lo =
      powercal::lift(pc.simulation.fpp_min_dbm, pc.calibration.alpha_dbm);
  fcfg.detection_domain_hi =
      powercal::lift(pc.simulation.fpp_max_dbm, pc.calibration.alpha_dbm);
  const powercal::PowerCalibration cal =
      powercal::fit(samples, pc.calibration.alpha_dbm, fcfg);
  g_art.cal = cal;
  g_art.power_train_cfg = pc;
  g_art.ready = true;

  // Bias recovery over the central 80% of the sample distribution.
  std::vector<double> xs;
  xs.reserve(samples.size());
  for (const auto& s : samples) xs.push_back(s.lifted_fpp);
  std::sort(xs.begin(), xs.end());
  const double lo = xs[xs.size() / 10];
  const double hi = xs[9 * xs.size() / 10];
  double worst_bias = 0.0;
  for (int g = 0; g <= 100; ++g) {
    const double x = lo * std::pow(hi / lo, g / 100.0);
    const double truth = w.power.rho_bias_ns(x) * sim::kSpeedOfLight;
    worst_bias = std::max(worst_bias, std::abs(cal.eval_bias(x) - truth));
  }
  const bool bias_ok = worst_bias < 0.02;

  // Injected excursion scale: ~ +-10 cm somewhere in the curve.
  double rho_min = 0, rho_max = 0;
  for (double dbm = -102; dbm <= -65; dbm += 0.1) {
    const double v = w.power.rho_bias_at_dbm(dbm) * sim::kSpeedOfLight;
    rho_min = std::min(rho_min, v);
    rho_max = std::max(rho_max, v);
  }
  const bool scale_ok = rho_max > 0.095 && rho_min < -0.095;

  // Std curve: true total range std composes the per-stamp injection with
  // the base timestamp noise; extrema locations compared on the dB axis.
  const double r = pc.simulation.dt32_us / pc.simulation.dt53_us;
  const double geom = 1.0 + r + r * r;
  const double R =
      pc.simulation.timestamp_noise_ns * pc.simulation.timestamp_noise_ns;
  auto truth_std = [&](double dbm) {
    const double s = w.power.rho_std_at_dbm(dbm);
    return sim::kSpeedOfLight * std::sqrt(geom * (R + 0.5 * s * s));
  };
  const double dbm_lo = pc.calibration.alpha_dbm + 10 * std::log10(lo);
  const double dbm_hi = pc.calibration.alpha_dbm + 10 * std::log10(hi);
  double f_max = -1, f_argmax = 0, f_min = 1e9, f_argmin = 0;
  double t_max = -1, t_argmax = 0, t_min = 1e9, t_argmin = 0;
  for (double dbm = dbm_lo; dbm <= dbm_hi; dbm += 0.05) {
    const double x = std::pow(10.0, (dbm - pc.calibration.alpha_dbm) / 10.0);
    const double fv = cal.eval_std(x);
    const double tv = truth_std(dbm);
    if (fv > f_max) { f_max = fv; f_argmax = dbm; }
    if (fv < f_min) { f_min = fv; f_argmin = dbm; }
    if (tv > t_max) { t_max = tv; t_argmax = dbm; }
    if (tv < t_min) { t_min = tv; t_argmin = dbm; }
  }
  const bool std_loc_ok = std::abs(f_argmax - t_argmax) <= 2.5 &&
                          std::abs(f_argmin - t_argmin) <= 2.5;
  const bool std_val_ok = std::abs(f_max / t_max - 1.0) <= 0.25 &&
                          std::abs(f_min / t_min - 1.0) <= 0.25;

  report(6, "power bias/std curve recovery",
         bias_ok && scale_ok && std_loc_ok && std_val_ok, timer.elapsed_s(),
         fmt("bias err %.1f mm; rho span [%.1f, %.1f] cm; std max %.1f cm @ "
             "%.1f dBm (true %.1f @ %.1f), min %.1f cm @ %.1f (true %.1f @ "
             "%.1f)",
             worst_bias * 1e3, rho_min * 100, rho_max * 100, f_max * 100,
             f_argmax, t_max * 100, t_argmax, f_min * 100, f_argmin,
             t_min * 100, t_argmin));
}

void criterion7_gating() {
  Timer timer;
  const double gamma = gating::chi2_threshold(0.95, 1);
  const bool quantile_ok = std::abs(gamma - 3.8415) < 1e-3;

  // Exact-model draws: sigma from the calibrated std curve, bias ~ N(0, s^2).
  const gating::GateConfig gate = gating::make_gate(0.95, 1);
  RandomStream rs(7007, "acceptance-gate");
  const int n = 10000;
  int rejected = 0;
  for (int i = 0; i < n; ++i) {
    const double x =
        g_art.cal.lift_min +
        rs.uniform() * (g_art.cal.lift_max - g_art.cal.lift_min);
    const double sigma = g_art.cal.eval_std(x);
    const double bias = sigma * rs.normal();
    if (!gating::chi2_test(bias, sigma, gate)) ++rejected;
  }
  const double rate = static_cast<double>(rejected) / n;
  report(7, "chi-squared gate", quantile_ok && rate > 0.04 && rate < 0.06,
         timer.elapsed_s(),
         fmt("threshold=%.6f, rejection=%.2f%%", gamma, rate * 100));
}

void criterion8_localization() {
  Timer timer;
  std::vector<double> raw_rmse, cal_rmse, cvar_rmse;
  for (const std::uint64_t seed : {7001ull, 7002ull}) {
    PipelineConfig pc = g_art.power_train_cfg;
    pc.simulation = fleet_config(seed);
    pc.simulation.duration_s = 60.0;
    pc.simulation.power_bias = true;
    pc.simulation.power_hetero = true;
    pc.simulation.outlier_prob = 0.02;
    const sim::Dataset test = generate(pc.simulation);
    const sim::World w = pipeline::build_world(pc.simulation);

    for (int robot = 0; robot < 3; ++robot) {
      ekf::EkfRunConfig rc;
      rc.focus_robot = robot;
      rc.seed = seed;
      for (const auto mode :
           {ekf::RunMode::raw, ekf::RunMode::calibrated,
            ekf::RunMode::calibrated_with_variance}) {
        rc.mode = mode;
        const auto res =
            ekf::run(test, w, &g_art.delays, &g_art.cal, rc);
        if (mode == ekf::RunMode::raw) raw_rmse.push_back(res.rmse_m);
        if (mode == ekf::RunMode::calibrated) cal_rmse.push_back(res.rmse_m);
        if (mode == ekf::RunMode::calibrated_with_variance)
          cvar_rmse.push_back(res.rmse_m);
      }
    }
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const double m_raw = mean(raw_rmse);
  const double m_cal = mean(cal_rmse);
  const double m_cvar = mean(cvar_rmse);
  const double reduction = (m_raw - m_cal) / m_raw;
  int per_run_wins = 0;
  for (std::size_t i = 0; i < raw_rmse.size(); ++i)
    if (cal_rmse[i] < raw_rmse[i]) ++per_run_wins;
  const double secs = timer.elapsed_s();
  report(8, "localization improvement over the 6-scenario matrix",
         m_cal < m_raw && reduction >= 0.25 && m_cvar <= m_cal &&
             per_run_wins >= 5 && secs < 120.0,
         secs,
         fmt("mean RMSE raw=%.3f m, calibrated=%.3f m (-%.0f%%), "
             "with variance=%.3f m; calibrated beats raw in %d/6",
             m_raw, m_cal, reduction * 100, m_cvar, per_run_wins));
}

void criterion9_determinism() {
  Timer timer;
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() /
                        ("uwbcal_acc9_" + std::to_string(::getpid()));

  PipelineConfig train;
  train.simulation = fleet_config(9901);
  train.simulation.duration_s = 40.0;
  train.simulation.power_bias = true;
  train.simulation.power_hetero = true;
  PipelineConfig test = train;
  test.simulation.seed = 9902;
  test.simulation.duration_s = 20.0;

  auto run_pipeline = [&](const fs::path& dir) {
    fs::create_directories(dir);
    const auto p = [&](const char* n) { return (dir / n).string(); };
    const sim::Dataset train_ds = pipeline::cmd_simulate(train, p("train.csv"));
    const auto delays = pipeline::cmd_calibrate_delays(
        train_ds, train, p("delays.csv"), p("delay_report.csv"));
    const auto cal = pipeline::cmd_calibrate_power(
        train_ds, delays, train, p("cal.csv"), p("cal_report.csv"));
    const sim::Dataset test_ds = pipeline::cmd_simulate(test, p("test.csv"));
    pipeline::cmd_apply(test_ds, delays, cal, p("corrected.csv"),
                        p("apply_report.csv"));
    std::vector<pipeline::LocalizeScenario> scenarios;
    scenarios.push_back({"t", test, test_ds});
    const ekf::RunMode modes[] = {ekf::RunMode::raw, ekf::RunMode::calibrated,
                                  ekf::RunMode::calibrated_with_variance};
    pipeline::cmd_localize(scenarios, &delays, &cal, modes, p("rmse.csv"), "");
  };

  run_pipeline(base / "a");
  run_pipeline(base / "b");

  bool identical = true;
  std::string mismatch;
  for (const char* name :
       {"train.csv", "delays.csv", "delay_report.csv", "cal.csv",
        "cal_report.csv", "test.csv", "corrected.csv", "apply_report.csv",
        "rmse.csv"}) {
    const std::string a = pipeline::read_text_file((base / "a" / name).string());
    const std::string b = pipeline::read_text_file((base / "b" / name).string());
    if (a != b) {
      identical = false;
      mismatch += std::string(name) + " ";
    }
  }

  // parse-serialize identity for all three formats.
  const std::string ds_text =
      pipeline::read_text_file((base / "a" / "train.csv").string());
  const bool ds_rt =
      pipeline::serialize_dataset(pipeline::parse_dataset(ds_text)) == ds_text;
  const std::string del_text =
      pipeline::read_text_file((base / "a" / "delays.csv").string());
  const bool del_rt =
      pipeline::serialize_delays(pipeline::parse_delays(del_text)) == del_text;
  const std::string cal_text =
      pipeline::read_text_file((base / "a" / "cal.csv").string());
  const bool cal_rt = pipeline::serialize_powercal(
                          pipeline::parse_powercal(cal_text)) == cal_text;

  fs::remove_all(base);
  report(9, "pipeline determinism and format round trips",
         identical && ds_rt && del_rt && cal_rt, timer.elapsed_s(),
         identical ? "all artifacts byte-identical across reruns"
                   : ("mismatch: " + mismatch));
}

void criterion10_ekf_hygiene() {
  Timer timer;
  SimulationConfig c = fleet_config(7001);
  c.duration_s = 60.0;
  c.power_bias = true;
  c.power_hetero = true;
  c.outlier_prob = 0.02;
  const sim::Dataset test = generate(c);
  const sim::World w = pipeline::build_world(c);
  const gating::GateConfig gate = gating::make_gate(0.95, 1);

  std::size_t steps = 0, jac_checks = 0;
  bool spd_ok = true, jac_ok = true;
  for (int robot = 0; robot < 3 && steps < 15000; ++robot) {
    const auto& traj = w.robots[static_cast<std::size_t>(robot)];
    ekf::EkfState state;
    state.position = traj.sample(0.0).position;
    state.covariance = Eigen::Matrix3d::Identity();
    state.time = 0.0;
    for (const auto& tx : test.transactions) {
      const auto& ti = w.tag(tx.initiator_id);
      const auto& tj = w.tag(tx.responder_id);
      const bool i_on = ti.robot_id == robot;
      const bool j_on = tj.robot_id == robot;
      if (i_on == j_on) continue;
      const auto& own = i_on ? ti : tj;
      const auto& other = i_on ? tj : ti;
      const double t = tx.timestamp_s;
      const double dt = t - state.time;
      state = ekf::predict(
          state, traj.sample(state.time + 0.5 * dt).velocity, dt, 0.0025);

      ekf::RangeMeasurement m;
      m.time = t;
      m.own_tag_offset = own.body_offset_m;
      m.own_attitude = traj.sample(t).dcm;
      m.neighbor_anchor = w.antenna_position(other, t);
      const double dc = powercal::delay_corrected_range(tx, g_art.delays);
      const auto [range, sigma] =
          powercal::apply(dc, tx.fpp2_dbm, tx.fpp4_dbm, g_art.cal);
      m.value = range;
      m.sigma = sigma;

      const ekf::UpdateResult res = ekf::update(state, m, gate);
      if (res.outcome != ekf::UpdateOutcome::skipped_singular) {
        // 1% sampled Jacobian checks via the implementation's own
        // predicted_range on perturbed states.
        if (steps % 100 == 0) {
          ++jac_checks;
          const double eps = 1e-6;
          for (int a = 0; a < 3; ++a) {
            ekf::EkfState sp = state, sm = state;
            sp.position[a] += eps;
            sm.position[a] -= eps;
            const double yp = ekf::update(sp, m, gate).predicted_range;
            const double ym = ekf::update(sm, m, gate).predicted_range;
            const double fd = (yp - ym) / (2 * eps);
            if (std::abs(fd - res.jacobian[a]) >
                1e-6 * (1.0 + std::abs(res.jacobian[a])))
              jac_ok = false;
          }
        }
      }
      state = res.state;
      ++steps;
      if ((state.covariance - state.covariance.transpose()).norm() >= 1e-12)
        spd_ok = false;
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(state.covariance);
      if (es.eigenvalues().minCoeff() <= 0.0) spd_ok = false;
    }
  }
  report(10, "EKF numerical hygiene", steps >= 10000 && spd_ok && jac_ok,
         timer.elapsed_s(),
         fmt("%zu steps, %zu jacobian spot checks, SPD %s", steps, jac_checks,
             spd_ok ? "held" : "violated"));
}

}  // namespace

int main() {
  std::printf("uwbcal acceptance suite\n");
  criterion1_skew_bias();
  criterion2_variance_model();
  criterion3_optimal_delay();
  criterion4_delay_recovery();
  criterion5_robustness();
  criterion6_power_recovery();
  criterion7_gating();
  criterion8_localization();
  criterion9_determinism();
  criterion10_ekf_hygiene();
  std::printf("%d of 10 criteria failed\n", g_failures);
  return g_failures;
}
