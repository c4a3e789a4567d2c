#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "uwb/curves.hpp"
#include "uwb/rng.hpp"
#include "uwb/trajectory.hpp"
#include "uwb/twr.hpp"

namespace uwb::sim {

/// Radio propagation speed used by UWB hardware, m per ns.
inline constexpr double kSpeedOfLight = 0.299702547;

/// One tag's oscillator model. Offsets provably cancel in TWR intervals;
/// the field is kept so imported clock states round-trip.
struct ClockModel {
  double skew = 0.0;                   ///< dimensionless parts (e.g. 20e-6)
  double offset_ns = 0.0;
  double timestamp_noise_std_ns = 0.0; ///< sqrt(R)
};

struct TagSpec {
  int tag_id = 0;
  int robot_id = 0;
  Eigen::Vector3d body_offset_m = Eigen::Vector3d::Zero();  // r_1^{i1}
  double delay_ns = 0.0;  ///< aggregate antenna delay d = d^t - d^r
  ClockModel clock;
};

/// Ground-truth power model: mean path loss, pose-dependent perturbation,
/// and the injected reception-timestamp corruption rho plus heteroscedastic
/// noise, both functions of first-path power. The curves live on the dBm
/// axis; lifted-axis accessors compose with the lifting map.
struct PowerTruth {
  double p0_dbm = -78.0;       ///< mean FPP at ref_dist_m
  double ref_dist_m = 1.0;
  double pathloss_exponent = 2.0;
  double perturb_amp_db = 3.0;
  int perturb_harmonic = 2;
  double fpp_noise_db = 1.0;
  double fpp_min_dbm = -101.0;
  double fpp_max_dbm = -65.0;
  double alpha_dbm = -82.0;    ///< lifting normalization used by the curves

  bool bias_enabled = false;
  bool hetero_enabled = false;
  CubicCurve bias_dbm_to_ns;   ///< rho, ns of reception-stamp shift
  CubicCurve std_dbm_to_ns;    ///< per-stamp noise std, ns

  /// Mean FPP before perturbation and noise; monotone decreasing in range.
  double fpp_of_range(double range_m) const;

  double lift(double fpp_dbm) const;
  double unlift(double x) const;

  /// rho over the lifted axis (spec signature); zero when disabled.
  double rho_bias_ns(double lifted) const;
  double rho_std_ns(double lifted) const;

  double rho_bias_at_dbm(double fpp_dbm) const;
  double rho_std_at_dbm(double fpp_dbm) const;
};

/// One DS-TWR exchange as recorded. Truth fields are NaN on imported logs.
/// truth_tof_ns is the ideal corruption-free DS-TWR ToF of this exchange
/// (robot motion between the six events included); truth_range_m is the
/// antenna distance at the first-message epoch, i.e. what a motion-capture
/// system would report.
struct TwrTransaction {
  double timestamp_s = 0.0;
  int initiator_id = 0;
  int responder_id = 0;
  twr::TwrIntervals intervals;
  double fpp2_dbm = 0.0;
  double fpp4_dbm = 0.0;
  double truth_tof_ns = std::numeric_limits<double>::quiet_NaN();
  double truth_range_m = std::numeric_limits<double>::quiet_NaN();

  bool has_truth() const {
    return truth_tof_ns == truth_tof_ns && truth_range_m == truth_range_m;
  }
};

struct World {
  std::vector<RobotTrajectory> robots;      // index == robot_id
  std::vector<TagSpec> tags;
  PowerTruth power;
  std::vector<std::pair<int, int>> pairs;   // ordered (initiator, responder)

  const TagSpec& tag(int tag_id) const;
  Eigen::Vector3d antenna_position(const TagSpec& tag, double t_s) const;

  /// All cross-robot tag pairs, lower tag id initiating. 6 tags on 3 robots
  /// yield the 12-pair fleet layout.
  void build_default_pairs();
};

struct ScheduleConfig {
  double rate_hz = 160.0;
  double duration_s = 60.0;
  double dt32_nominal_s = 300e-6;
  double dt53_nominal_s = 1500e-6;
  double delay_jitter = 0.05;   ///< uniform +-fraction on both reply delays
  double outlier_prob = 0.0;
  double outlier_mean_m = 1.0;
};

/// Named substreams hanging off one master seed. Each exchange consumes a
/// fixed number of draws from each stream no matter which corruption
/// channels are enabled.
struct SimStreams {
  RandomStream clock;
  RandomStream power;
  RandomStream outlier;
  RandomStream schedule;

  explicit SimStreams(std::uint64_t seed)
      : clock(seed, "clock"), power(seed, "power"),
        outlier(seed, "outlier"), schedule(seed, "schedule") {}
};

struct Dataset {
  std::vector<TwrTransaction> transactions;
  std::uint64_t dropped = 0;
};

/// Simulates one DS-TWR exchange starting at wall time t_s. Returns nullopt
/// when a generated FPP falls outside the detection band (signal dropped);
/// stream draws are consumed either way.
std::optional<TwrTransaction> simulate_exchange(const World& world,
                                                const TagSpec& initiator,
                                                const TagSpec& responder,
                                                double t_s,
                                                const ScheduleConfig& sched,
                                                SimStreams& streams);

/// Round-robin schedule over world.pairs at sched.rate_hz. Deterministic per
/// seed; transactions come out sorted by timestamp and per-pair attempt
/// counts differ by at most one.
Dataset run_schedule(const World& world, const ScheduleConfig& sched,
                     std::uint64_t seed);

}  // namespace uwb::sim
