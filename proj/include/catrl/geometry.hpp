#pragma once

// Planar rotations, angle wrapping and quaternion orientation errors.
//
// The simulator works in the x-z plane: x forward, z up, pitch is the
// counter-clockwise angle of the body frame in that plane.  Quaternions are
// provided for the 3-D orientation-error path of the reward kernels; the
// planar environment uses the angle backend.

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

namespace catrl {

inline constexpr double kPi = 3.14159265358979323846;

// wrap into (-pi, pi]
inline double wrap_angle(double a) {
  double r = std::fmod(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  else if (r > kPi) r -= 2.0 * kPi;
  return r;
}

// 2-D rotation by `angle` (counter-clockwise with x right, z up)
inline Eigen::Vector2d rotate2d(double angle, const Eigen::Vector2d& v) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

inline Eigen::Vector2d world_from_body(double pitch, const Eigen::Vector2d& v) {
  return rotate2d(pitch, v);
}

inline Eigen::Vector2d body_from_world(double pitch, const Eigen::Vector2d& v) {
  return rotate2d(-pitch, v);
}

// Unit quaternion, scalar-first.
struct Quaternion {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  Quaternion normalized() const {
    const double n = norm();
    if (n <= 0.0) throw std::invalid_argument("quaternion: zero norm");
    return {w / n, x / n, y / n, z / n};
  }

  Quaternion conjugate() const { return {w, -x, -y, -z}; }

  Quaternion operator*(const Quaternion& o) const {
    return {w * o.w - x * o.x - y * o.y - z * o.z,
            w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x,
            w * o.z + x * o.y - y * o.x + z * o.w};
  }

  static Quaternion from_axis_angle(double ax, double ay, double az, double angle) {
    const double n = std::sqrt(ax * ax + ay * ay + az * az);
    if (n <= 0.0) throw std::invalid_argument("quaternion: zero axis");
    const double h = 0.5 * angle, s = std::sin(h) / n;
    return {std::cos(h), ax * s, ay * s, az * s};
  }
};

// |norm - 1| beyond this is rejected as a malformed rotation
inline constexpr double kUnitQuatTolerance = 1e-6;

// Shortest-arc rotation angle between two unit quaternions, in [0, pi].
// Double cover is handled by folding the relative scalar part to >= 0, so
// q and -q describe the same rotation and compare at exactly zero error.
inline double orientation_error(const Quaternion& q, const Quaternion& target) {
  if (std::abs(q.norm() - 1.0) > kUnitQuatTolerance ||
      std::abs(target.norm() - 1.0) > kUnitQuatTolerance)
    throw std::invalid_argument("orientation_error: non-unit quaternion");
  const Quaternion rel = q.normalized().conjugate() * target.normalized();
  const double w = std::min(1.0, std::abs(rel.w));
  return 2.0 * std::acos(w);
}

// Planar counterpart: |wrapped difference|, in [0, pi].
inline double orientation_error(double angle, double target_angle) {
  return std::abs(wrap_angle(angle - target_angle));
}

}  // namespace catrl
