#include "uwb/sim.hpp"

#include <algorithm>
#include <cmath>

#include "uwb/errors.hpp"

namespace uwb::sim {

double PowerTruth::fpp_of_range(double range_m) const {
  const double d = std::max(range_m, 0.05);
  return p0_dbm - 10.0 * pathloss_exponent * std::log10(d / ref_dist_m);
}

double PowerTruth::lift(double fpp_dbm) const {
  return std::pow(10.0, (fpp_dbm - alpha_dbm) / 10.0);
}

double PowerTruth::unlift(double x) const {
  return alpha_dbm + 10.0 * std::log10(x);
}

double PowerTruth::rho_bias_ns(double lifted) const {
  return rho_bias_at_dbm(unlift(lifted));
}

double PowerTruth::rho_std_ns(double lifted) const {
  return rho_std_at_dbm(unlift(lifted));
}

double PowerTruth::rho_bias_at_dbm(double fpp_dbm) const {
  if (!bias_enabled || bias_dbm_to_ns.empty()) return 0.0;
  return bias_dbm_to_ns(fpp_dbm);
}

double PowerTruth::rho_std_at_dbm(double fpp_dbm) const {
  if (!hetero_enabled || std_dbm_to_ns.empty()) return 0.0;
  return std::max(0.0, std_dbm_to_ns(fpp_dbm));
}

const TagSpec& World::tag(int tag_id) const {
  for (const auto& t : tags)
    if (t.tag_id == tag_id) return t;
  raise(ErrorCode::config_error, "unknown tag id " + std::to_string(tag_id));
}

Eigen::Vector3d World::antenna_position(const TagSpec& tag, double t_s) const {
  const Pose p = robots.at(static_cast<std::size_t>(tag.robot_id)).sample(t_s);
  return p.position + p.dcm.transpose() * tag.body_offset_m;
}

void World::build_default_pairs() {
  pairs.clear();
  for (std::size_t a = 0; a < tags.size(); ++a)
    for (std::size_t b = a + 1; b < tags.size(); ++b)
      if (tags[a].robot_id != tags[b].robot_id)
        pairs.emplace_back(tags[a].tag_id, tags[b].tag_id);
}

namespace {

struct RxDraw {
  double fpp_noise;
  double hetero_noise;
};

// FPP seen by `rx` for a signal from `tx` at epoch t: mean path loss plus a
// smooth perturbation in the receiver-frame bearing of the line of sight.
double fpp_sample(const World& w, const TagSpec& tx, const TagSpec& rx,
                  double t_s, double noise_draw) {
  const Eigen::Vector3d p_tx = w.antenna_position(tx, t_s);
  const Pose rx_pose = w.robots[static_cast<std::size_t>(rx.robot_id)].sample(t_s);
  const Eigen::Vector3d p_rx =
      rx_pose.position + rx_pose.dcm.transpose() * rx.body_offset_m;
  const Eigen::Vector3d los_world = p_tx - p_rx;
  const double range = los_world.norm();

  double fpp = w.power.fpp_of_range(range);
  if (w.power.perturb_amp_db != 0.0 && range > 1e-9) {
    const Eigen::Vector3d los_body = rx_pose.dcm * (los_world / range);
    const double az = std::atan2(los_body.y(), los_body.x());
    const double cos_el = std::hypot(los_body.x(), los_body.y());
    // Tag-specific fixed phase keeps antenna patterns distinct per tag.
    const double phase = 0.7318 * rx.tag_id;
    fpp += w.power.perturb_amp_db * cos_el *
           std::sin(w.power.perturb_harmonic * az + phase);
  }
  return fpp + w.power.fpp_noise_db * noise_draw;
}

}  // namespace

std::optional<TwrTransaction> simulate_exchange(const World& world,
                                                const TagSpec& initiator,
                                                const TagSpec& responder,
                                                double t_s,
                                                const ScheduleConfig& sched,
                                                SimStreams& streams) {
  // Fixed draw order, independent of channel enablement: 2 schedule
  // uniforms, 6 clock normals, 3x2 power normals, 3 outlier draws.
  const double j32 = streams.schedule.uniform(-1.0, 1.0);
  const double j53 = streams.schedule.uniform(-1.0, 1.0);
  double eta[6];
  for (double& e : eta) e = streams.clock.normal();
  RxDraw rx2{streams.power.normal(), streams.power.normal()};
  RxDraw rx4{streams.power.normal(), streams.power.normal()};
  RxDraw rx6{streams.power.normal(), streams.power.normal()};
  const bool outlier_hit = streams.outlier.bernoulli(sched.outlier_prob);
  const std::uint64_t outlier_victim = streams.outlier.index(2);  // t2 or t4
  const double outlier_excess_ns =
      streams.outlier.exponential(sched.outlier_mean_m / kSpeedOfLight);

  // True event times as ns offsets from t1; wall times for geometry.
  const double d32_ns =
      sched.dt32_nominal_s * 1e9 * (1.0 + sched.delay_jitter * j32);
  const double d53_ns =
      sched.dt53_nominal_s * 1e9 * (1.0 + sched.delay_jitter * j53);

  auto antenna = [&](const TagSpec& tag, double tau_ns) {
    return world.antenna_position(tag, t_s + tau_ns * 1e-9);
  };

  const double tau1 = 0.0;
  const Eigen::Vector3d pi1 = antenna(initiator, tau1);
  const Eigen::Vector3d pj1 = antenna(responder, tau1);
  const double range1 = (pj1 - pi1).norm();
  const double tof1 = range1 / kSpeedOfLight;
  const double tau2 = tau1 + tof1;
  const double tau3 = tau2 + d32_ns;
  const double tof2 =
      (antenna(initiator, tau3) - antenna(responder, tau3)).norm() /
      kSpeedOfLight;
  const double tau4 = tau3 + tof2;
  const double tau5 = tau3 + d53_ns;
  const double tof3 =
      (antenna(initiator, tau5) - antenna(responder, tau5)).norm() /
      kSpeedOfLight;
  const double tau6 = tau5 + tof3;

  // FPP per reception: t2 at the responder, t4/t6 at the initiator.
  const double p2 = fpp_sample(world, initiator, responder, t_s, rx2.fpp_noise);
  const double p4 = fpp_sample(world, responder, initiator,
                               t_s + tau3 * 1e-9, rx4.fpp_noise);
  const double p6 = fpp_sample(world, responder, initiator,
                               t_s + tau5 * 1e-9, rx6.fpp_noise);

  const auto in_band = [&](double p) {
    return p >= world.power.fpp_min_dbm && p <= world.power.fpp_max_dbm;
  };
  if (!in_band(p2) || !in_band(p4) || !in_band(p6)) return std::nullopt;

  // Measured stamps. Clock skew scales the true offset; antenna delay,
  // power corruption, and timestamp noise add on top (interaction terms are
  // O(gamma * d), microdegrees below every tolerance in play).
  const auto stamp = [](const TagSpec& owner, double tau_ns, double extra,
                        double noise_draw) {
    return (1.0 + owner.clock.skew) * tau_ns + owner.clock.offset_ns + extra +
           owner.clock.timestamp_noise_std_ns * noise_draw;
  };
  const auto rx_extra = [&](double fpp, const RxDraw& d) {
    return world.power.rho_bias_at_dbm(fpp) +
           world.power.rho_std_at_dbm(fpp) * d.hetero_noise;
  };

  double extra2 = rx_extra(p2, rx2);
  double extra4 = rx_extra(p4, rx4);
  if (outlier_hit && sched.outlier_prob > 0.0) {
    if (outlier_victim == 0)
      extra2 += outlier_excess_ns;
    else
      extra4 += outlier_excess_ns;
  }

  const double m1 = stamp(initiator, tau1, initiator.delay_ns, eta[0]);
  const double m2 = stamp(responder, tau2, extra2, eta[1]);
  const double m3 = stamp(responder, tau3, responder.delay_ns, eta[2]);
  const double m4 = stamp(initiator, tau4, extra4, eta[3]);
  const double m5 = stamp(responder, tau5, responder.delay_ns, eta[4]);
  const double m6 = stamp(initiator, tau6, rx_extra(p6, rx6), eta[5]);

  TwrTransaction tx;
  tx.timestamp_s = t_s;
  tx.initiator_id = initiator.tag_id;
  tx.responder_id = responder.tag_id;
  tx.intervals.dt41 = m4 - m1;
  tx.intervals.dt32 = m3 - m2;
  tx.intervals.dt53 = m5 - m3;
  tx.intervals.dt64 = m6 - m4;
  tx.fpp2_dbm = p2;
  tx.fpp4_dbm = p4;
  tx.truth_range_m = range1;
  // Ideal protocol output on the true event times.
  const double dt41 = tau4 - tau1;
  const double dt32 = tau3 - tau2;
  const double dt53 = tau5 - tau3;
  const double dt64 = tau6 - tau4;
  tx.truth_tof_ns = 0.5 * (dt41 - (dt64 / dt53) * dt32);
  return tx;
}

Dataset run_schedule(const World& world, const ScheduleConfig& sched,
                     std::uint64_t seed) {
  if (world.pairs.empty())
    raise(ErrorCode::config_error, "run_schedule: empty pair set");
  if (sched.rate_hz <= 0.0)
    raise(ErrorCode::config_error, "run_schedule: rate must be > 0");
  if (sched.duration_s < 0.0)
    raise(ErrorCode::config_error, "run_schedule: negative duration");

  SimStreams streams(seed);
  Dataset out;
  const auto n = static_cast<std::uint64_t>(sched.duration_s * sched.rate_hz);
  out.transactions.reserve(n);
  for (std::uint64_t m = 0; m < n; ++m) {
    const double t = static_cast<double>(m) / sched.rate_hz;
    const auto& [init_id, resp_id] = world.pairs[m % world.pairs.size()];
    auto tx = simulate_exchange(world, world.tag(init_id), world.tag(resp_id),
                                t, sched, streams);
    if (tx)
      out.transactions.push_back(*tx);
    else
      ++out.dropped;
  }
  return out;
}

}  // namespace uwb::sim
