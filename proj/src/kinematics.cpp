#include "mdik/kinematics.hpp"

#include <stdexcept>

namespace mdik {

namespace {

Transform joint_motion(const JointSpec& joint, double q) {
  Transform motion;
  switch (joint.kind) {
    case JointKind::revolute:
      motion.rotation = quat_from_axis_angle(joint.axis, q);
      break;
    case JointKind::prismatic:
      motion.translation = joint.axis * q;
      break;
    case JointKind::fixed:
      break;
  }
  return motion;
}

}  // namespace

void forward_all(const RobotModel& model, const Eigen::VectorXd& q, FkWorkspace& ws) {
  if (q.size() != model.dof()) {
    throw std::invalid_argument("forward_all: configuration has " + std::to_string(q.size()) +
                                " entries, model has " + std::to_string(model.dof()) + " dof");
  }
  ws.world.resize(static_cast<size_t>(model.joint_count()));
  for (int idx : model.traversal_order()) {
    const JointSpec& joint = model.joint(idx);
    const Transform base = joint.parent >= 0
                               ? ws.world[static_cast<size_t>(joint.parent)] * joint.origin
                               : joint.origin;
    if (joint.kind == JointKind::fixed) {
      ws.world[static_cast<size_t>(idx)] = base;
    } else {
      ws.world[static_cast<size_t>(idx)] = base * joint_motion(joint, q[joint.config_index]);
    }
  }
}

Pose frame_pose(const RobotModel& model, const FkWorkspace& ws, int ee_index) {
  const EndEffector& ee = model.end_effectors()[static_cast<size_t>(ee_index)];
  const Transform t = ws.world[static_cast<size_t>(ee.parent)] * ee.origin;
  return Pose{t.translation, t.rotation};
}

Pose forward_kinematics(const RobotModel& model, const Eigen::VectorXd& q,
                        const std::string& frame) {
  const int ee = model.end_effector_index(frame);
  FkWorkspace ws;
  forward_all(model, q, ws);
  return frame_pose(model, ws, ee);
}

void geometric_jacobian_into(const RobotModel& model, const FkWorkspace& ws, int ee_index,
                             Eigen::Ref<Eigen::MatrixXd> block) {
  block.setZero();
  const Eigen::Vector3d p_e = frame_pose(model, ws, ee_index).position;
  const std::vector<char>& path = model.on_path(ee_index);
  for (int j = 0; j < model.joint_count(); ++j) {
    const JointSpec& joint = model.joint(j);
    if (joint.kind == JointKind::fixed || !path[static_cast<size_t>(j)]) continue;
    const Transform& world = ws.world[static_cast<size_t>(j)];
    // The joint's own motion leaves its world axis unchanged, so the
    // post-motion frame is safe to read here.
    const Eigen::Vector3d z = world.rotation.rotate(joint.axis);
    const int col = joint.config_index;
    if (joint.kind == JointKind::revolute) {
      block.col(col).head<3>() = z.cross(p_e - world.translation);
      block.col(col).tail<3>() = z;
    } else {
      block.col(col).head<3>() = z;
    }
  }
}

Eigen::MatrixXd geometric_jacobian(const RobotModel& model, const Eigen::VectorXd& q,
                                   const std::string& frame) {
  const int ee = model.end_effector_index(frame);
  FkWorkspace ws;
  forward_all(model, q, ws);
  Eigen::MatrixXd jac(6, model.dof());
  geometric_jacobian_into(model, ws, ee, jac);
  return jac;
}

Eigen::MatrixXd stack_tasks_resolved(const RobotModel& model, const FkWorkspace& ws,
                                     const std::vector<int>& ee_indices) {
  Eigen::MatrixXd stacked(6 * static_cast<int>(ee_indices.size()), model.dof());
  for (size_t f = 0; f < ee_indices.size(); ++f) {
    geometric_jacobian_into(model, ws, ee_indices[f],
                            stacked.middleRows(6 * static_cast<int>(f), 6));
  }
  return stacked;
}

Eigen::MatrixXd stack_tasks(const RobotModel& model, const Eigen::VectorXd& q,
                            const std::vector<std::string>& frames) {
  if (frames.empty()) {
    throw std::invalid_argument("stack_tasks: need at least one frame");
  }
  std::vector<int> indices;
  indices.reserve(frames.size());
  for (const std::string& frame : frames) {
    indices.push_back(model.end_effector_index(frame));
  }
  FkWorkspace ws;
  forward_all(model, q, ws);
  return stack_tasks_resolved(model, ws, indices);
}

}  // namespace mdik
