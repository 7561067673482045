#pragma once

#include <array>
#include <vector>

#include "evdi/events.hpp"

namespace evdi {

// Rigid 2D camera pose: rotation by `angle` (radians) then translation.
struct Pose2 {
  double angle = 0.0;
  double tx = 0.0;
  double ty = 0.0;

  std::array<double, 2> apply(double x, double y) const;
  Pose2 compose(const Pose2& rhs) const;  // this ∘ rhs
  Pose2 inverse() const;

  bool operator==(const Pose2&) const = default;
};

// Linear interpolation of angle and translation; u must lie in [0, 1].
Pose2 pose_lerp(const Pose2& a, const Pose2& b, double u);

struct Quat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quat from_axis_angle(double ax, double ay, double az, double angle);
  double norm() const;
  Quat normalized() const;
  double dot(const Quat& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
  Quat operator*(const Quat& o) const;
  Quat conjugate() const { return {w, -x, -y, -z}; }
  std::array<double, 3> rotate(const std::array<double, 3>& v) const;
};

struct QuatPose {
  Quat rotation;
  std::array<double, 3> translation{0.0, 0.0, 0.0};
};

// Constant angular velocity along the shorter arc; translation is lerped.
// Nearly parallel rotations (|dot| > 1 - 1e-6) use normalized lerp instead.
QuatPose quat_slerp(const QuatPose& a, const QuatPose& b, double u);

// n poses uniformly spaced over an exposure window, first and last on the
// window endpoints.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(int view_id, ExposureWindow window, std::vector<Pose2> poses);

  // n poses sampled linearly between two endpoint poses.
  static Trajectory from_endpoints(int view_id, ExposureWindow window, const Pose2& first,
                                   const Pose2& last, int n);

  int view_id() const { return view_id_; }
  const ExposureWindow& window() const { return window_; }
  const std::vector<Pose2>& poses() const { return poses_; }
  std::size_t size() const { return poses_.size(); }
  double timestep(std::size_t j) const;

  // Piecewise pose_lerp between the bracketing discrete poses.
  Pose2 pose_at(double t) const;

 private:
  int view_id_ = 0;
  ExposureWindow window_;
  std::vector<Pose2> poses_;
};

}  // namespace evdi
