#include <cmath>
#include <map>

#include "doctest.h"
#include "uwb/config.hpp"
#include "uwb/pipeline.hpp"
#include "uwb/sim.hpp"
#include "uwb/twr.hpp"

using namespace uwb;
using namespace uwb::sim;
using pipeline::SimulationConfig;

namespace {

// Baseline: everything off. Tests enable one channel at a time.
SimulationConfig quiet_config(bool moving) {
  SimulationConfig c;
  c.seed = 321;
  c.seed_set = true;
  c.robots = 3;
  c.tags_per_robot = 2;
  c.trajectory_fill = moving ? 0.85 : 0.0;
  c.delays_ns.assign(6, 0.0);
  c.skews_ppm.assign(6, 0.0);
  c.offsets_ns.assign(6, 0.0);
  c.timestamp_noise_ns = 0.0;
  c.power_bias = false;
  c.power_hetero = false;
  c.fpp_noise_db = 0.0;
  c.fpp_perturb_db = 0.0;
  c.outlier_prob = 0.0;
  c.fpp_min_dbm = -150.0;  // wide open band: no drops
  c.fpp_max_dbm = 0.0;
  return c;
}

Dataset make_dataset(const SimulationConfig& c, double duration_s,
                     double rate_hz = 160.0) {
  SimulationConfig cc = c;
  cc.duration_s = duration_s;
  cc.rate_hz = rate_hz;
  World w = pipeline::build_world(cc);
  return run_schedule(w, pipeline::build_schedule(cc), cc.seed);
}

}  // namespace

TEST_CASE("trajectories: zero-amplitude config is constant") {
  TrajectoryConfig tc;
  tc.fill = 0.0;
  RandomStream rs(1, "trajectory");
  const auto trajs = generate_trajectories(tc, 2, rs);
  const Pose p0 = trajs[0].sample(0.0);
  const Pose p1 = trajs[0].sample(17.3);
  CHECK((p0.position - p1.position).norm() == 0.0);
  CHECK(p0.velocity.norm() == 0.0);
  CHECK(p1.velocity.norm() == 0.0);
}

TEST_CASE("trajectories: deterministic per seed") {
  TrajectoryConfig tc;
  RandomStream a(77, "trajectory"), b(77, "trajectory");
  const auto ta = generate_trajectories(tc, 3, a);
  const auto tb = generate_trajectories(tc, 3, b);
  for (int r = 0; r < 3; ++r)
    for (double t : {0.0, 1.7, 42.0, 239.9}) {
      CHECK(ta[r].sample(t).position == tb[r].sample(t).position);
      CHECK(ta[r].sample(t).velocity == tb[r].sample(t).velocity);
    }
}

TEST_CASE("trajectories: velocity is the derivative of position") {
  TrajectoryConfig tc;
  RandomStream rs(5, "trajectory");
  const auto trajs = generate_trajectories(tc, 2, rs);
  const double h = 1e-4;
  for (double t : {0.3, 10.0, 100.0, 200.0}) {
    const Pose p = trajs[1].sample(t);
    const Eigen::Vector3d fd =
        (trajs[1].position(t + h) - trajs[1].position(t - h)) / (2 * h);
    CHECK((fd - p.velocity).norm() <= 1e-6 * (p.velocity.norm() + 1.0));
  }
}

TEST_CASE("trajectories: attitude stays in SO(3)") {
  TrajectoryConfig tc;
  RandomStream rs(6, "trajectory");
  const auto trajs = generate_trajectories(tc, 1, rs);
  for (double t : {0.0, 3.1, 57.0, 230.0}) {
    const Eigen::Matrix3d c = trajs[0].sample(t).dcm;
    CHECK((c * c.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    CHECK(c.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("trajectory config guards") {
  TrajectoryConfig tc;
  tc.box_halfextent = {0.0, 1.0, 1.0};
  RandomStream rs(1, "t");
  CHECK_THROWS_AS(generate_trajectories(tc, 1, rs), Error);
  TrajectoryConfig tc2;
  tc2.duration_s = -1.0;
  CHECK_THROWS_AS(generate_trajectories(tc2, 1, rs), Error);
}

TEST_CASE("identity pipeline: no corruption -> DS ToF equals truth exactly") {
  // Moving robots: truth_tof is the ideal protocol output, so the identity
  // holds at machine precision even with inter-message motion.
  const Dataset ds = make_dataset(quiet_config(true), 5.0);
  REQUIRE(ds.transactions.size() > 700);
  CHECK(ds.dropped == 0);
  for (const auto& tx : ds.transactions) {
    const double tof = twr::ds_twr_tof(tx.intervals);
    CHECK(std::abs(tof - tx.truth_tof_ns) < 1e-9);
  }
}

TEST_CASE("static world: truth_tof and truth_range agree to rounding") {
  const Dataset ds = make_dataset(quiet_config(false), 2.0);
  for (const auto& tx : ds.transactions) {
    CHECK(std::abs(tx.truth_tof_ns * kSpeedOfLight - tx.truth_range_m) <
          1e-9);
  }
}

TEST_CASE("moving world: truth_range differs from truth_tof by the motion floor") {
  const Dataset ds = make_dataset(quiet_config(true), 5.0);
  double max_gap = 0.0;
  for (const auto& tx : ds.transactions)
    max_gap = std::max(max_gap, std::abs(tx.truth_tof_ns * kSpeedOfLight -
                                         tx.truth_range_m));
  CHECK(max_gap > 0.0);   // motion between messages is real
  CHECK(max_gap < 5e-3);  // but sub-5mm at quadcopter speeds
}

TEST_CASE("delay-only channel: aggregate-delay equation recovers truth exactly") {
  SimulationConfig c = quiet_config(true);
  c.delays_ns = {0.35, -1.2, 2.7, -0.4, 1.05, -2.3};
  const Dataset ds = make_dataset(c, 5.0);
  World w = pipeline::build_world(c);
  for (const auto& tx : ds.transactions) {
    const double K = tx.intervals.clock_ratio();
    const double di = w.tag(tx.initiator_id).delay_ns;
    const double dj = w.tag(tx.responder_id).delay_ns;
    const double tof = twr::ds_twr_tof(tx.intervals) + 0.5 * (di + K * dj);
    CHECK(std::abs(tof - tx.truth_tof_ns) < 1e-9);
    // And the raw DS output is off by exactly the delay term.
    CHECK(twr::ds_twr_tof(tx.intervals) - tx.truth_tof_ns ==
          doctest::Approx(-0.5 * (di + K * dj)).epsilon(1e-9));
  }
}

TEST_CASE("skew-only channel: SS bias matches the analytic signature, DS cancels") {
  SimulationConfig c = quiet_config(false);
  c.skews_ppm = {0.0, 20.0, 0.0, 20.0, 0.0, 20.0};
  const Dataset ds = make_dataset(c, 5.0);
  World w = pipeline::build_world(c);
  for (const auto& tx : ds.transactions) {
    const double gi = w.tag(tx.initiator_id).clock.skew;
    const double gj = w.tag(tx.responder_id).clock.skew;
    const double true_dt32 = tx.intervals.dt32 / (1.0 + gj);
    const twr::SkewPair sk{gi, gj, 0.0};
    const double ss_bias = twr::ss_twr_tof(tx.intervals) - tx.truth_tof_ns;
    const double expect_ss =
        twr::expected_ss_bias(sk, tx.truth_tof_ns, true_dt32);
    CHECK(std::abs(ss_bias - expect_ss) < 1e-6);
    const double ds_bias = twr::ds_twr_tof(tx.intervals) - tx.truth_tof_ns;
    CHECK(std::abs(ds_bias - twr::expected_ds_bias(gi, tx.truth_tof_ns)) <
          1e-6);
  }
}

TEST_CASE("noise-only channel: Monte-Carlo variance matches var_ds and var_ss") {
  SimulationConfig c = quiet_config(false);
  c.timestamp_noise_ns = 0.1;  // R = 0.01
  c.delay_jitter = 0.0;
  World w = pipeline::build_world(c);
  ScheduleConfig sched = pipeline::build_schedule(c);
  SimStreams streams(c.seed);

  const int n = 200000;
  double ds_sum = 0, ds_sq = 0, ss_sum = 0, ss_sq = 0;
  for (int i = 0; i < n; ++i) {
    const auto tx =
        simulate_exchange(w, w.tag(0), w.tag(2), 0.0, sched, streams);
    REQUIRE(tx.has_value());
    const double eds = twr::ds_twr_tof(tx->intervals) - tx->truth_tof_ns;
    const double ess = twr::ss_twr_tof(tx->intervals) - tx->truth_tof_ns;
    ds_sum += eds;
    ds_sq += eds * eds;
    ss_sum += ess;
    ss_sq += ess * ess;
  }
  const double ds_var = ds_sq / n - (ds_sum / n) * (ds_sum / n);
  const double ss_var = ss_sq / n - (ss_sum / n) * (ss_sum / n);
  const twr::SkewPair sk{0.0, 0.0, 0.01};
  const double r32 = sched.dt32_nominal_s * 1e9;
  const double r53 = sched.dt53_nominal_s * 1e9;
  CHECK(ds_var == doctest::Approx(twr::var_ds(sk, r32, r53)).epsilon(0.03));
  CHECK(ss_var == doctest::Approx(twr::var_ss(sk)).epsilon(0.03));
}

TEST_CASE("power-bias channel: DS bias equals the injected rho signature") {
  SimulationConfig c = quiet_config(true);
  c.power_bias = true;
  c.fpp_noise_db = 1.0;
  c.fpp_perturb_db = 3.0;
  const Dataset ds = make_dataset(c, 10.0);
  World w = pipeline::build_world(c);
  REQUIRE(ds.transactions.size() > 1000);
  double worst = 0.0;
  for (const auto& tx : ds.transactions) {
    const double rho2 = w.power.rho_bias_at_dbm(tx.fpp2_dbm);
    const double rho4 = w.power.rho_bias_at_dbm(tx.fpp4_dbm);
    const double bias = twr::ds_twr_tof(tx.intervals) - tx.truth_tof_ns;
    worst = std::max(worst, std::abs(bias - 0.5 * (rho2 + rho4)));
  }
  // Residual is the rho(p6)-rho(p4) leakage through the measured clock
  // ratio, r-suppressed, plus the motion floor.
  CHECK(worst > 0.0);
  CHECK(worst < 0.12);
}

TEST_CASE("outlier channel: positive excess on the recorded intervals") {
  SimulationConfig c = quiet_config(false);
  c.outlier_prob = 1.0;
  c.outlier_mean_m = 1.0;
  const Dataset ds = make_dataset(c, 5.0);
  double mean_bias = 0.0;
  for (const auto& tx : ds.transactions) {
    const double bias =
        (twr::ds_twr_tof(tx.intervals) - tx.truth_tof_ns) * kSpeedOfLight;
    CHECK(bias > -1e-9);  // excess delay only ever adds range
    mean_bias += bias;
  }
  mean_bias /= static_cast<double>(ds.transactions.size());
  // Half the exponential excess lands in the ToF: ~0.5 m for mean 1 m.
  CHECK(mean_bias == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("FPP monotonicity: farther pairs see lower mean power") {
  SimulationConfig c = quiet_config(true);
  c.fpp_noise_db = 1.0;
  c.fpp_perturb_db = 3.0;
  const Dataset ds = make_dataset(c, 30.0);
  double near_sum = 0, far_sum = 0;
  int near_n = 0, far_n = 0;
  for (const auto& tx : ds.transactions) {
    const double fpp = 0.5 * (tx.fpp2_dbm + tx.fpp4_dbm);
    if (tx.truth_range_m < 2.5) {
      near_sum += fpp;
      ++near_n;
    } else if (tx.truth_range_m > 5.0) {
      far_sum += fpp;
      ++far_n;
    }
  }
  REQUIRE(near_n > 50);
  REQUIRE(far_n > 50);
  CHECK(near_sum / near_n > far_sum / far_n + 3.0);
}

TEST_CASE("detection band drops are counted") {
  SimulationConfig c = quiet_config(true);
  c.fpp_noise_db = 1.0;
  c.fpp_min_dbm = -88.0;  // narrow band: far exchanges drop out
  c.fpp_max_dbm = -60.0;
  c.duration_s = 10.0;
  World w = pipeline::build_world(c);
  const Dataset ds = run_schedule(w, pipeline::build_schedule(c), c.seed);
  const auto attempts = static_cast<std::uint64_t>(c.duration_s * c.rate_hz);
  CHECK(ds.dropped > 0);
  CHECK(ds.transactions.size() + ds.dropped == attempts);
  for (const auto& tx : ds.transactions) {
    CHECK(tx.fpp2_dbm >= c.fpp_min_dbm);
    CHECK(tx.fpp2_dbm <= c.fpp_max_dbm);
    CHECK(tx.fpp4_dbm >= c.fpp_min_dbm);
    CHECK(tx.fpp4_dbm <= c.fpp_max_dbm);
  }
}

TEST_CASE("round-robin schedule: per-pair attempts within one of each other") {
  SimulationConfig c = quiet_config(true);
  c.duration_s = 7.51;  // not a multiple of the pair count
  World w = pipeline::build_world(c);
  const Dataset ds = run_schedule(w, pipeline::build_schedule(c), c.seed);
  CHECK(ds.dropped == 0);
  std::map<std::pair<int, int>, int> counts;
  for (const auto& tx : ds.transactions)
    ++counts[{tx.initiator_id, tx.responder_id}];
  CHECK(counts.size() == 12);
  int lo = 1 << 30, hi = 0;
  for (const auto& [k, v] : counts) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi - lo <= 1);
  for (std::size_t i = 1; i < ds.transactions.size(); ++i)
    CHECK(ds.transactions[i].timestamp_s > ds.transactions[i - 1].timestamp_s);
}

TEST_CASE("determinism: identical seed, identical dataset") {
  SimulationConfig c = quiet_config(true);
  c.timestamp_noise_ns = 0.05;
  c.power_bias = true;
  c.power_hetero = true;
  c.fpp_noise_db = 1.0;
  c.outlier_prob = 0.02;
  const Dataset a = make_dataset(c, 5.0);
  const Dataset b = make_dataset(c, 5.0);
  REQUIRE(a.transactions.size() == b.transactions.size());
  CHECK(a.dropped == b.dropped);
  for (std::size_t i = 0; i < a.transactions.size(); ++i) {
    CHECK(a.transactions[i].intervals.dt41 == b.transactions[i].intervals.dt41);
    CHECK(a.transactions[i].intervals.dt32 == b.transactions[i].intervals.dt32);
    CHECK(a.transactions[i].intervals.dt53 == b.transactions[i].intervals.dt53);
    CHECK(a.transactions[i].intervals.dt64 == b.transactions[i].intervals.dt64);
    CHECK(a.transactions[i].fpp2_dbm == b.transactions[i].fpp2_dbm);
    CHECK(a.transactions[i].truth_tof_ns == b.transactions[i].truth_tof_ns);
  }
}

TEST_CASE("stream isolation: toggling outliers leaves noise draws alone") {
  SimulationConfig c = quiet_config(false);
  c.timestamp_noise_ns = 0.05;
  SimulationConfig c2 = c;
  c2.outlier_prob = 1.0;
  const Dataset a = make_dataset(c, 2.0);
  const Dataset b = make_dataset(c2, 2.0);
  REQUIRE(a.transactions.size() == b.transactions.size());
  // dt53 is touched by neither channel's shifts, so its noise must be
  // bit-identical; dt41/dt32 move only by the (positive) outlier excess.
  for (std::size_t i = 0; i < a.transactions.size(); ++i) {
    CHECK(a.transactions[i].intervals.dt53 == b.transactions[i].intervals.dt53);
    CHECK(b.transactions[i].intervals.dt41 >=
          a.transactions[i].intervals.dt41 - 1e-12);
    CHECK(b.transactions[i].intervals.dt32 <=
          a.transactions[i].intervals.dt32 + 1e-12);
  }
}

TEST_CASE("schedule guards") {
  SimulationConfig c = quiet_config(false);
  World w = pipeline::build_world(c);
  ScheduleConfig sched = pipeline::build_schedule(c);
  sched.rate_hz = 0.0;
  CHECK_THROWS_AS(run_schedule(w, sched, 1), Error);
  const Dataset empty = make_dataset(c, 0.0);
  CHECK(empty.transactions.empty());
}
