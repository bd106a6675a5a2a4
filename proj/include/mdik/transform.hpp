#pragma once

#include <Eigen/Core>

#include "mdik/quaternion.hpp"

namespace mdik {

/// Rigid transform: rotate then translate, world-frame composition.
struct Transform {
  UnitQuaternion rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Transform identity() { return {}; }

  Transform operator*(const Transform& rhs) const {
    Transform out;
    out.rotation = quat_mul(rotation, rhs.rotation);
    out.translation = translation + rotation.rotate(rhs.translation);
    return out;
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return translation + rotation.rotate(p);
  }
};

/// Position plus unit-quaternion orientation of a frame.
struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  UnitQuaternion orientation;
};

}  // namespace mdik
