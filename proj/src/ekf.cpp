#include "uwb/ekf.hpp"

#include <cmath>

#include "uwb/errors.hpp"
#include "uwb/rng.hpp"
#include "uwb/twr.hpp"

namespace uwb::ekf {

namespace {
constexpr double kMinRange = 1e-3;  // m

Eigen::Matrix3d symmetrize(const Eigen::Matrix3d& p) {
  return 0.5 * (p + p.transpose());
}
}  // namespace

EkfState predict(const EkfState& state, const Eigen::Vector3d& velocity,
                 double dt_s, double q_spectral) {
  if (dt_s < 0.0) raise(ErrorCode::config_error, "predict: dt < 0");
  EkfState next = state;
  next.position += velocity * dt_s;
  next.covariance =
      symmetrize(state.covariance +
                 q_spectral * dt_s * Eigen::Matrix3d::Identity());
  next.time = state.time + dt_s;
  return next;
}

UpdateResult update(const EkfState& state, const RangeMeasurement& meas,
                    const gating::GateConfig& gate,
                    const UnderweightPolicy* underweight) {
  UpdateResult res;
  res.state = state;

  const Eigen::Vector3d tag_world =
      state.position + meas.own_attitude.transpose() * meas.own_tag_offset;
  const Eigen::Vector3d diff = tag_world - meas.neighbor_anchor;
  const double predicted = diff.norm();
  res.predicted_range = predicted;
  if (predicted <= kMinRange) {
    res.outcome = UpdateOutcome::skipped_singular;
    return res;
  }

  const Eigen::RowVector3d h = diff.transpose() / predicted;
  res.jacobian = h;
  const double innovation = meas.value - predicted;
  const double hph = (h * state.covariance * h.transpose())(0, 0);
  const double r = meas.sigma * meas.sigma;
  double s = hph + r;
  if (underweight != nullptr &&
      hph > underweight->activation_ratio * r)
    s = (1.0 + underweight->factor) * hph + r;
  res.nis = innovation * innovation / s;

  if (!gating::nis_test(innovation, s, gate)) {
    res.outcome = UpdateOutcome::rejected;
    return res;
  }

  const Eigen::Vector3d gain = state.covariance * h.transpose() / s;
  res.state.position = state.position + gain * innovation;
  const Eigen::Matrix3d ikh =
      Eigen::Matrix3d::Identity() - gain * h;
  res.state.covariance =
      symmetrize(ikh * state.covariance * ikh.transpose() +
                 gain * (meas.sigma * meas.sigma) * gain.transpose());
  res.outcome = UpdateOutcome::accepted;
  return res;
}

const char* run_mode_name(RunMode m) {
  switch (m) {
    case RunMode::raw: return "raw";
    case RunMode::calibrated: return "calibrated";
    case RunMode::calibrated_with_variance: return "calibrated_with_variance";
  }
  return "?";
}

EkfRunResult run(const sim::Dataset& dataset, const sim::World& world,
                 const delaycal::DelaySolution* delays,
                 const powercal::PowerCalibration* cal,
                 const EkfRunConfig& cfg) {
  if (dataset.transactions.empty())
    raise(ErrorCode::empty_dataset, "ekf run: empty dataset");
  if (cfg.mode != RunMode::raw && (delays == nullptr || cal == nullptr))
    raise(ErrorCode::config_error,
          "ekf run: calibrated modes need delay and power calibrations");

  const auto& focus_traj =
      world.robots.at(static_cast<std::size_t>(cfg.focus_robot));
  const gating::GateConfig gate = gating::make_gate(cfg.gate_confidence, 1);

  const double t0 = dataset.transactions.front().timestamp_s;
  EkfState state;
  {
    RandomStream init_stream(cfg.seed,
                             "ekf-init-" + std::to_string(cfg.focus_robot));
    const Eigen::Vector3d truth0 = focus_traj.sample(t0).position;
    for (int a = 0; a < 3; ++a)
      state.position[a] = truth0[a] + cfg.init_pos_std_m * init_stream.normal();
    state.covariance = cfg.init_cov_m2 * Eigen::Matrix3d::Identity();
    state.time = t0;
  }

  gating::GateConfig open_gate = gate;
  open_gate.threshold_gamma = std::numeric_limits<double>::infinity();

  EkfRunResult out;
  double sq_sum = 0.0;
  std::size_t sq_count = 0;
  int consecutive_rejections = 0;

  RandomStream vel_stream(cfg.seed,
                          "ekf-velocity-" + std::to_string(cfg.focus_robot));
  Eigen::Vector3d vel_bias = Eigen::Vector3d::Zero();
  const auto evolve_vel_bias = [&](double dt) {
    if (cfg.velocity_noise_std <= 0.0) return;
    const double a = std::exp(-dt / std::max(1e-6, cfg.velocity_noise_tau_s));
    const double s = cfg.velocity_noise_std * std::sqrt(1.0 - a * a);
    for (int axis = 0; axis < 3; ++axis)
      vel_bias[axis] = a * vel_bias[axis] + s * vel_stream.normal();
  };
  if (cfg.velocity_noise_std > 0.0)
    for (int axis = 0; axis < 3; ++axis)
      vel_bias[axis] = cfg.velocity_noise_std * vel_stream.normal();

  for (const auto& tx : dataset.transactions) {
    const sim::TagSpec& init_tag = world.tag(tx.initiator_id);
    const sim::TagSpec& resp_tag = world.tag(tx.responder_id);
    const bool init_on_focus = init_tag.robot_id == cfg.focus_robot;
    const bool resp_on_focus = resp_tag.robot_id == cfg.focus_robot;
    if (init_on_focus == resp_on_focus) continue;  // not a focus measurement
    const sim::TagSpec& own_tag = init_on_focus ? init_tag : resp_tag;
    const sim::TagSpec& other_tag = init_on_focus ? resp_tag : init_tag;

    const double t = tx.timestamp_s;
    // Midpoint velocity keeps the Euler propagation second-order accurate.
    const double dt = t - state.time;
    evolve_vel_bias(dt);
    const Eigen::Vector3d vel =
        focus_traj.sample(state.time + 0.5 * dt).velocity + vel_bias;
    state = predict(state, vel, dt, cfg.q_spectral);

    RangeMeasurement meas;
    meas.time = t;
    meas.own_tag_offset = own_tag.body_offset_m;
    meas.own_attitude = focus_traj.sample(t).dcm;
    meas.neighbor_anchor = world.antenna_position(other_tag, t);

    double sigma = cfg.sigma_fixed_m;
    double range;
    if (cfg.mode == RunMode::raw) {
      range = twr::ds_twr_tof(tx.intervals) * sim::kSpeedOfLight;
    } else {
      const double delay_corrected =
          powercal::delay_corrected_range(tx, *delays);
      auto [corrected, cal_sigma] =
          powercal::apply(delay_corrected, tx.fpp2_dbm, tx.fpp4_dbm, *cal);
      range = corrected;
      if (cfg.mode == RunMode::calibrated_with_variance) sigma = cal_sigma;
    }
    meas.value = range;
    const double state_sigma =
        std::sqrt(state.covariance.trace() / 3.0);
    meas.sigma = std::max(sigma, cfg.bootstrap_sigma_scale * state_sigma);

    const bool force = cfg.gate_recovery_after > 0 &&
                       consecutive_rejections >= cfg.gate_recovery_after;
    const UpdateResult ur =
        update(state, meas, force ? open_gate : gate, &cfg.underweight);
    state = ur.state;
    switch (ur.outcome) {
      case UpdateOutcome::accepted:
        ++out.updates_accepted;
        consecutive_rejections = 0;
        break;
      case UpdateOutcome::rejected:
        ++out.updates_rejected;
        ++consecutive_rejections;
        break;
      case UpdateOutcome::skipped_singular:
        ++out.updates_skipped;
        break;
    }

    TrajectoryPoint pt;
    pt.t_s = t;
    pt.estimate = state.position;
    pt.truth = focus_traj.sample(t).position;
    pt.cov_trace = state.covariance.trace();
    out.trajectory.push_back(pt);

    if (t - t0 >= cfg.convergence_skip_s) {
      sq_sum += (pt.estimate - pt.truth).squaredNorm();
      ++sq_count;
    }
  }

  out.rmse_m = (sq_count > 0)
                   ? std::sqrt(sq_sum / static_cast<double>(sq_count))
                   : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace uwb::ekf
