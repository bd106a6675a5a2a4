#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <stdexcept>

namespace mdik {

/// Scalar-first Hamilton quaternion, kept at unit norm. Identity is (1,0,0,0);
/// composition is child-after-parent in the world frame.
struct UnitQuaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  UnitQuaternion() = default;

  /// Normalizes on construction; throws on a zero or non-finite quaternion.
  UnitQuaternion(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw std::invalid_argument("UnitQuaternion: zero or non-finite components");
    }
    w /= n;
    x /= n;
    y /= n;
    z /= n;
  }

  static UnitQuaternion identity() { return {}; }

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  Eigen::Vector3d vec() const { return {x, y, z}; }

  // Conjugate equals inverse at unit norm; skips renormalization on purpose.
  UnitQuaternion conjugate() const {
    UnitQuaternion q;
    q.w = w;
    q.x = -x;
    q.y = -y;
    q.z = -z;
    return q;
  }

  Eigen::Vector3d rotate(const Eigen::Vector3d& v) const {
    // v + 2w(u x v) + 2u x (u x v) with u the vector part
    const Eigen::Vector3d u(x, y, z);
    const Eigen::Vector3d t = 2.0 * u.cross(v);
    return v + w * t + u.cross(t);
  }

  Eigen::Matrix3d to_rotation_matrix() const {
    Eigen::Matrix3d m;
    m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return m;
  }
};

/// Hamilton product a*b, renormalized.
inline UnitQuaternion quat_mul(const UnitQuaternion& a, const UnitQuaternion& b) {
  return UnitQuaternion(a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
                        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
                        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
                        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w);
}

inline UnitQuaternion quat_inverse(const UnitQuaternion& a) { return a.conjugate(); }

/// Logarithm map to a full rotation vector (axis * angle, angle in [0, pi]).
/// Quaternions with w < 0 are negated first so the shortest rotation is
/// returned; the double cover maps a and -a to the same vector.
inline Eigen::Vector3d rotation_vector(const UnitQuaternion& a) {
  double w = a.w, x = a.x, y = a.y, z = a.z;
  if (w < 0.0) {
    w = -w;
    x = -x;
    y = -y;
    z = -z;
  }
  const double n = std::sqrt(x * x + y * y + z * z);
  double scale;
  if (n < 1e-8) {
    // series for 2*atan2(n, w)/n, avoids cancellation at tiny angles
    scale = 2.0 / w - 2.0 * n * n / (3.0 * w * w * w);
  } else {
    scale = 2.0 * std::atan2(n, w) / n;
  }
  return {x * scale, y * scale, z * scale};
}

/// Exponential map from a rotation vector.
inline UnitQuaternion quat_from_rotation_vector(const Eigen::Vector3d& rv) {
  const double angle = rv.norm();
  double s;
  if (angle < 1e-8) {
    s = 0.5 - angle * angle / 48.0;
  } else {
    s = std::sin(0.5 * angle) / angle;
  }
  return UnitQuaternion(std::cos(0.5 * angle), rv.x() * s, rv.y() * s, rv.z() * s);
}

inline UnitQuaternion quat_from_axis_angle(const Eigen::Vector3d& axis, double angle) {
  const double s = std::sin(0.5 * angle);
  return UnitQuaternion(std::cos(0.5 * angle), axis.x() * s, axis.y() * s, axis.z() * s);
}

/// Extrinsic X-Y-Z (roll, pitch, yaw) angles, composed as Rz(yaw)*Ry(pitch)*Rx(roll).
inline UnitQuaternion quat_from_rpy(double roll, double pitch, double yaw) {
  const UnitQuaternion qx = quat_from_axis_angle(Eigen::Vector3d::UnitX(), roll);
  const UnitQuaternion qy = quat_from_axis_angle(Eigen::Vector3d::UnitY(), pitch);
  const UnitQuaternion qz = quat_from_axis_angle(Eigen::Vector3d::UnitZ(), yaw);
  return quat_mul(qz, quat_mul(qy, qx));
}

}  // namespace mdik
