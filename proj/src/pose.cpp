#include "evdi/pose.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evdi {

std::array<double, 2> Pose2::apply(double x, double y) const {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * x - s * y + tx, s * x + c * y + ty};
}

Pose2 Pose2::compose(const Pose2& rhs) const {
  const auto t = apply(rhs.tx, rhs.ty);
  return {angle + rhs.angle, t[0], t[1]};
}

Pose2 Pose2::inverse() const {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {-angle, -(c * tx + s * ty), -(-s * tx + c * ty)};
}

Pose2 pose_lerp(const Pose2& a, const Pose2& b, double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("pose_lerp: u outside [0, 1]");
  if (u == 0.0) return a;
  if (u == 1.0) return b;
  return {a.angle + (b.angle - a.angle) * u, a.tx + (b.tx - a.tx) * u, a.ty + (b.ty - a.ty) * u};
}

Quat Quat::from_axis_angle(double ax, double ay, double az, double angle) {
  const double n = std::sqrt(ax * ax + ay * ay + az * az);
  if (n == 0.0) return {};
  const double s = std::sin(0.5 * angle) / n;
  return {std::cos(0.5 * angle), ax * s, ay * s, az * s};
}

double Quat::norm() const { return std::sqrt(dot(*this)); }

Quat Quat::normalized() const {
  const double n = norm();
  if (n == 0.0) throw std::domain_error("Quat::normalized: zero quaternion");
  return {w / n, x / n, y / n, z / n};
}

Quat Quat::operator*(const Quat& o) const {
  return {w * o.w - x * o.x - y * o.y - z * o.z, w * o.x + x * o.w + y * o.z - z * o.y,
          w * o.y - x * o.z + y * o.w + z * o.x, w * o.z + x * o.y - y * o.x + z * o.w};
}

std::array<double, 3> Quat::rotate(const std::array<double, 3>& v) const {
  const Quat r = (*this) * Quat{0.0, v[0], v[1], v[2]} * conjugate();
  return {r.x, r.y, r.z};
}

QuatPose quat_slerp(const QuatPose& a, const QuatPose& b, double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("quat_slerp: u outside [0, 1]");
  const Quat qa = a.rotation;
  Quat qb = b.rotation;
  double d = qa.dot(qb);
  if (d < 0.0) {
    qb = {-qb.w, -qb.x, -qb.y, -qb.z};
    d = -d;
  }
  double wa;
  double wb;
  if (d > 1.0 - 1e-6) {
    wa = 1.0 - u;
    wb = u;
  } else {
    const double theta = std::acos(std::min(d, 1.0));
    const double s = std::sin(theta);
    wa = std::sin((1.0 - u) * theta) / s;
    wb = std::sin(u * theta) / s;
  }
  QuatPose out;
  out.rotation = Quat{wa * qa.w + wb * qb.w, wa * qa.x + wb * qb.x, wa * qa.y + wb * qb.y,
                      wa * qa.z + wb * qb.z}
                     .normalized();
  for (int i = 0; i < 3; ++i) {
    out.translation[i] = a.translation[i] + (b.translation[i] - a.translation[i]) * u;
  }
  return out;
}

Trajectory::Trajectory(int view_id, ExposureWindow window, std::vector<Pose2> poses)
    : view_id_(view_id), window_(window), poses_(std::move(poses)) {
  if (poses_.size() < 2) throw std::invalid_argument("Trajectory: need at least 2 poses");
}

Trajectory Trajectory::from_endpoints(int view_id, ExposureWindow window, const Pose2& first,
                                      const Pose2& last, int n) {
  if (n < 2) throw std::invalid_argument("Trajectory: need at least 2 poses");
  std::vector<Pose2> poses;
  poses.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    poses.push_back(pose_lerp(first, last, static_cast<double>(j) / (n - 1)));
  }
  return Trajectory(view_id, window, std::move(poses));
}

double Trajectory::timestep(std::size_t j) const {
  if (j >= poses_.size()) throw std::out_of_range("Trajectory::timestep: index out of range");
  if (j + 1 == poses_.size()) return window_.end();
  return window_.start() + window_.tau * static_cast<double>(j) / (poses_.size() - 1);
}

Pose2 Trajectory::pose_at(double t) const {
  if (!(t >= window_.start() && t <= window_.end())) {
    throw std::domain_error("Trajectory::pose_at: time outside exposure window");
  }
  const double s = (t - window_.start()) / window_.tau * (poses_.size() - 1);
  const double nearest = std::round(s);
  if (std::abs(s - nearest) < 1e-9) return poses_[static_cast<std::size_t>(nearest)];
  std::size_t j = static_cast<std::size_t>(std::floor(s));
  if (j >= poses_.size() - 1) j = poses_.size() - 2;
  const double u = std::clamp(s - static_cast<double>(j), 0.0, 1.0);
  return pose_lerp(poses_[j], poses_[j + 1], u);
}

}  // namespace evdi
