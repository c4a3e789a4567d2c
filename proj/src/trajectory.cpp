#include "uwb/trajectory.hpp"

#include <cmath>

#include "uwb/errors.hpp"

namespace uwb::sim {

namespace {

double eval_sum(const std::vector<Harmonic>& hs, double t) {
  double v = 0.0;
  for (const auto& h : hs) v += h.amplitude * std::sin(h.omega * t + h.phase);
  return v;
}

double eval_sum_rate(const std::vector<Harmonic>& hs, double t) {
  double v = 0.0;
  for (const auto& h : hs)
    v += h.amplitude * h.omega * std::cos(h.omega * t + h.phase);
  return v;
}

Eigen::Matrix3d dcm_from_euler(double roll, double pitch, double yaw) {
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  // C_1a = Rx(roll) Ry(pitch) Rz(yaw): world -> body, ZYX convention.
  Eigen::Matrix3d rx, ry, rz;
  rx << 1, 0, 0, 0, cr, sr, 0, -sr, cr;
  ry << cp, 0, -sp, 0, 1, 0, sp, 0, cp;
  rz << cy, sy, 0, -sy, cy, 0, 0, 0, 1;
  return rx * ry * rz;
}

}  // namespace

Pose RobotTrajectory::sample(double t_s) const {
  Pose p;
  for (int a = 0; a < 3; ++a) {
    p.position[a] = center_[a] + eval_sum(axes_[a], t_s);
    p.velocity[a] = eval_sum_rate(axes_[a], t_s);
  }
  p.dcm = dcm_from_euler(eval_sum(euler_[0], t_s), eval_sum(euler_[1], t_s),
                         eval_sum(euler_[2], t_s));
  return p;
}

Eigen::Vector3d RobotTrajectory::position(double t_s) const {
  Eigen::Vector3d r;
  for (int a = 0; a < 3; ++a) r[a] = center_[a] + eval_sum(axes_[a], t_s);
  return r;
}

std::vector<RobotTrajectory> generate_trajectories(const TrajectoryConfig& cfg,
                                                   int n_robots,
                                                   RandomStream& stream) {
  if (n_robots < 1)
    raise(ErrorCode::config_error, "generate_trajectories: need >= 1 robot");
  if (cfg.duration_s < 0.0)
    raise(ErrorCode::config_error, "generate_trajectories: duration < 0");
  if ((cfg.box_halfextent.array() <= 0.0).any())
    raise(ErrorCode::config_error, "generate_trajectories: empty box");

  std::vector<RobotTrajectory> out;
  out.reserve(static_cast<std::size_t>(n_robots));

  for (int r = 0; r < n_robots; ++r) {
    // Spread centers on a ring inside the box; wide amplitudes on top of a
    // tight ring give both close approaches and full-box separations, so
    // the received-power distribution covers a broad band.
    const double ang = 2.39996322972865332 * r;  // golden angle
    Eigen::Vector3d center = cfg.box_center;
    if (n_robots > 1) {
      center.x() += 0.3 * cfg.box_halfextent.x() * std::cos(ang);
      center.y() += 0.3 * cfg.box_halfextent.y() * std::sin(ang);
      center.z() += 0.2 * cfg.box_halfextent.z() *
                    std::sin(ang * 1.7 + 0.9);
    }

    std::array<std::vector<Harmonic>, 3> axes;
    for (int a = 0; a < 3; ++a) {
      double amp_budget = (n_robots > 1 ? 0.7 : 1.0) *
                          cfg.fill * cfg.box_halfextent[a];
      std::vector<Harmonic> hs(static_cast<std::size_t>(cfg.harmonics));
      double total = 0.0;
      for (auto& h : hs) {
        h.amplitude = stream.uniform(0.3, 1.0);
        h.omega = 2.0 * M_PI * stream.uniform(cfg.freq_lo_hz, cfg.freq_hi_hz);
        h.phase = stream.uniform(0.0, 2.0 * M_PI);
        total += h.amplitude;
      }
      const double scale = (total > 0.0) ? amp_budget / total : 0.0;
      for (auto& h : hs) h.amplitude *= scale;
      axes[a] = std::move(hs);
    }

    std::array<std::vector<Harmonic>, 3> euler;
    for (int a = 0; a < 3; ++a) {
      const double amp = (a == 2) ? cfg.yaw_amp_rad : cfg.attitude_amp_rad;
      std::vector<Harmonic> hs(2);
      for (auto& h : hs) {
        h.amplitude = (cfg.fill > 0.0 ? 1.0 : 0.0) * 0.5 * amp *
                      stream.uniform(0.5, 1.0);
        h.omega = 2.0 * M_PI * stream.uniform(cfg.freq_lo_hz, cfg.freq_hi_hz);
        h.phase = stream.uniform(0.0, 2.0 * M_PI);
      }
      euler[a] = std::move(hs);
    }

    out.emplace_back(center, std::move(axes), std::move(euler));
  }
  return out;
}

}  // namespace uwb::sim
