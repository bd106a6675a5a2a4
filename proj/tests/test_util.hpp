#pragma once

// Shared fixtures and independent oracles for the test suites. Oracles here
// deliberately avoid the library's analytic paths: rotations go through
// rotation matrices, derivatives through central differences.

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "mdik/baselines.hpp"
#include "mdik/kinematics.hpp"
#include "mdik/model.hpp"
#include "mdik/solver.hpp"

namespace testutil {

inline std::string models_dir() {
#ifdef MDIK_MODELS_DIR
  return MDIK_MODELS_DIR;
#else
  return "models";
#endif
}

inline double urand(std::mt19937_64& rng, double lo, double hi) {
  return lo + static_cast<double>(rng() >> 11) * 0x1.0p-53 * (hi - lo);
}

inline mdik::UnitQuaternion random_quat(std::mt19937_64& rng) {
  return mdik::UnitQuaternion(urand(rng, -1, 1), urand(rng, -1, 1), urand(rng, -1, 1),
                              urand(rng, -1, 1));
}

inline Eigen::Vector3d random_unit_axis(std::mt19937_64& rng) {
  Eigen::Vector3d v;
  do {
    v = {urand(rng, -1, 1), urand(rng, -1, 1), urand(rng, -1, 1)};
  } while (v.norm() < 1e-3);
  return v.normalized();
}

/// Planar 2R arm with unit link lengths, wide limits.
inline mdik::RobotModel planar_2r(double lower = -3.14, double upper = 3.14,
                                  double vmax = 10.0) {
  using namespace mdik;
  std::vector<JointSpec> joints(2);
  joints[0].name = "shoulder";
  joints[0].kind = JointKind::revolute;
  joints[0].parent = -1;
  joints[0].axis = Eigen::Vector3d::UnitZ();
  joints[0].lower = lower;
  joints[0].upper = upper;
  joints[0].max_velocity = vmax;
  joints[1] = joints[0];
  joints[1].name = "elbow";
  joints[1].parent = 0;
  joints[1].origin.translation = {1.0, 0.0, 0.0};
  EndEffector tip;
  tip.name = "tip";
  tip.parent = 1;
  tip.origin.translation = {1.0, 0.0, 0.0};
  return RobotModel("planar2r_test", std::move(joints), {tip});
}

/// Same arm with an extra frame on the elbow for stacked-task tests.
inline mdik::RobotModel planar_2r_two_frames() {
  using namespace mdik;
  std::vector<JointSpec> joints(2);
  joints[0].name = "shoulder";
  joints[0].kind = JointKind::revolute;
  joints[0].parent = -1;
  joints[0].axis = Eigen::Vector3d::UnitZ();
  joints[0].lower = -3.14;
  joints[0].upper = 3.14;
  joints[0].max_velocity = 10.0;
  joints[1] = joints[0];
  joints[1].name = "elbow";
  joints[1].parent = 0;
  joints[1].origin.translation = {1.0, 0.0, 0.0};
  EndEffector mid;
  mid.name = "elbow_frame";
  mid.parent = 0;
  mid.origin.translation = {1.0, 0.0, 0.0};
  EndEffector tip;
  tip.name = "tip";
  tip.parent = 1;
  tip.origin.translation = {1.0, 0.0, 0.0};
  return RobotModel("planar2r_two_frames", std::move(joints), {mid, tip});
}

/// Single prismatic joint along an axis; 1-dof scalar chain.
inline mdik::RobotModel prismatic_1dof(const Eigen::Vector3d& axis = Eigen::Vector3d::UnitX(),
                                       double lower = -5.0, double upper = 5.0) {
  using namespace mdik;
  JointSpec slider;
  slider.name = "slider";
  slider.kind = JointKind::prismatic;
  slider.parent = -1;
  slider.axis = axis;
  slider.lower = lower;
  slider.upper = upper;
  slider.max_velocity = 100.0;
  EndEffector ee;
  ee.name = "carriage";
  ee.parent = 0;
  return RobotModel("prismatic1", {slider}, {ee});
}

/// Random serial chain with mixed joint kinds and an end effector at the tip.
inline mdik::RobotModel random_chain(std::mt19937_64& rng, int n_joints) {
  using namespace mdik;
  std::vector<JointSpec> joints;
  for (int i = 0; i < n_joints; ++i) {
    JointSpec j;
    j.name = "j" + std::to_string(i);
    const double kind_draw = urand(rng, 0, 1);
    j.kind = kind_draw < 0.7 ? JointKind::revolute
             : kind_draw < 0.9 ? JointKind::prismatic
                               : JointKind::fixed;
    if (i == 0) j.kind = JointKind::revolute;  // keep at least one dof
    j.parent = i - 1;
    j.origin.translation = {urand(rng, -0.4, 0.4), urand(rng, -0.4, 0.4), urand(rng, 0.05, 0.4)};
    j.origin.rotation = random_quat(rng);
    j.axis = random_unit_axis(rng);
    j.lower = urand(rng, -2.5, -0.5);
    j.upper = urand(rng, 0.5, 2.5);
    j.max_velocity = urand(rng, 0.5, 3.0);
    joints.push_back(std::move(j));
  }
  EndEffector ee;
  ee.name = "tool";
  ee.parent = n_joints - 1;
  ee.origin.translation = {urand(rng, -0.2, 0.2), urand(rng, -0.2, 0.2), urand(rng, 0.0, 0.2)};
  ee.origin.rotation = random_quat(rng);
  return RobotModel("random_chain", std::move(joints), {ee});
}

inline Eigen::VectorXd random_config(std::mt19937_64& rng, const mdik::RobotModel& model,
                                     double margin = 0.05) {
  Eigen::VectorXd q(model.dof());
  for (int i = 0; i < model.dof(); ++i) {
    const double lo = model.lower_limits()[i];
    const double hi = model.upper_limits()[i];
    const double m = margin * (hi - lo);
    q[i] = urand(rng, lo + m, hi - m);
  }
  return q;
}

/// Central-difference geometric Jacobian: positions differenced directly,
/// orientation columns from the rotation vector of the relative quaternion.
inline Eigen::MatrixXd fd_jacobian(const mdik::RobotModel& model, const Eigen::VectorXd& q,
                                   const std::string& frame, double h = 1e-6) {
  Eigen::MatrixXd jac(6, model.dof());
  for (int i = 0; i < model.dof(); ++i) {
    Eigen::VectorXd qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    const mdik::Pose pp = mdik::forward_kinematics(model, qp, frame);
    const mdik::Pose pm = mdik::forward_kinematics(model, qm, frame);
    jac.col(i).head<3>() = (pp.position - pm.position) / (2.0 * h);
    const Eigen::Vector3d rel = mdik::rotation_vector(
        mdik::quat_mul(pp.orientation, mdik::quat_inverse(pm.orientation)));
    jac.col(i).tail<3>() = rel / (2.0 * h);
  }
  return jac;
}

/// Central difference of the scalar objective E(q) through exact FK.
inline Eigen::VectorXd fd_gradient(const mdik::RobotModel& model, const Eigen::VectorXd& q,
                                   const mdik::TaskSet& tasks, double h = 1e-6) {
  Eigen::VectorXd g(model.dof());
  for (int i = 0; i < model.dof(); ++i) {
    Eigen::VectorXd qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    const double ep = mdik::objective(mdik::task_error(model, qp, tasks), tasks.weights);
    const double em = mdik::objective(mdik::task_error(model, qm, tasks), tasks.weights);
    g[i] = (ep - em) / (2.0 * h);
  }
  return g;
}

/// Rotation matrix built here, independent of the library conversion, so the
/// Hamilton product can be checked against matrix composition.
inline Eigen::Matrix3d matrix_of(const mdik::UnitQuaternion& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Eigen::Matrix3d m;
  m << w * w + x * x - y * y - z * z, 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), w * w - x * x + y * y - z * z, 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), w * w - x * x - y * y + z * z;
  return m;
}

}  // namespace testutil
