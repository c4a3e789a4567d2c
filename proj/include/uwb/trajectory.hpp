#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "uwb/rng.hpp"

namespace uwb::sim {

/// One pose sample of a rigid body. `dcm` is C_1a: it maps inertial-frame
/// vectors into the body frame, so body vectors go to the world as C^T v.
struct Pose {
  Eigen::Vector3d position;  // m, world frame
  Eigen::Vector3d velocity;  // m/s, world frame
  Eigen::Matrix3d dcm;       // C_1a, inertial -> body
};

struct Harmonic {
  double amplitude = 0.0;
  double omega = 0.0;  // rad/s
  double phase = 0.0;  // rad
};

/// Smooth (C^inf) trajectory: per-axis sums of sinusoids around a fixed
/// center, plus sinusoidal Euler angles for the attitude. Velocity is the
/// analytic derivative of position.
class RobotTrajectory {
 public:
  RobotTrajectory() = default;
  RobotTrajectory(Eigen::Vector3d center,
                  std::array<std::vector<Harmonic>, 3> axes,
                  std::array<std::vector<Harmonic>, 3> euler)
      : center_(std::move(center)), axes_(std::move(axes)),
        euler_(std::move(euler)) {}

  Pose sample(double t_s) const;
  Eigen::Vector3d position(double t_s) const;

 private:
  Eigen::Vector3d center_ = Eigen::Vector3d::Zero();
  std::array<std::vector<Harmonic>, 3> axes_;   // x, y, z position
  std::array<std::vector<Harmonic>, 3> euler_;  // roll, pitch, yaw
};

struct TrajectoryConfig {
  Eigen::Vector3d box_center{0.0, 0.0, 2.0};
  Eigen::Vector3d box_halfextent{4.0, 4.0, 1.5};
  int harmonics = 3;
  double freq_lo_hz = 0.05;
  double freq_hi_hz = 0.20;
  double fill = 0.85;              // fraction of half-extent the motion spans
  double attitude_amp_rad = 0.20;  // roll/pitch amplitude
  double yaw_amp_rad = 1.5;
  double duration_s = 240.0;
};

/// Deterministically generates one trajectory per robot inside the box.
/// fill == 0 yields constant positions and identity-adjacent attitudes.
std::vector<RobotTrajectory> generate_trajectories(const TrajectoryConfig& cfg,
                                                   int n_robots,
                                                   RandomStream& stream);

}  // namespace uwb::sim
