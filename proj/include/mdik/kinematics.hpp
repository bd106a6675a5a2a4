#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "mdik/model.hpp"
#include "mdik/transform.hpp"

namespace mdik {

/// Reusable buffer of world transforms, one per joint. Lets the solver loop
/// evaluate FK every iteration without reallocating.
struct FkWorkspace {
  std::vector<Transform> world;
};

/// Fills `ws.world` with the world transform of every joint frame at q.
void forward_all(const RobotModel& model, const Eigen::VectorXd& q, FkWorkspace& ws);

/// Pose of an end effector given an already-filled workspace.
Pose frame_pose(const RobotModel& model, const FkWorkspace& ws, int ee_index);

Pose forward_kinematics(const RobotModel& model, const Eigen::VectorXd& q,
                        const std::string& frame);

/// World-frame geometric Jacobian, 6 x dof. Rows are linear velocity then
/// angular velocity; revolute columns are [z x (p_e - p_j); z], prismatic
/// columns [z; 0], and joints off the root-to-frame path contribute zeros.
Eigen::MatrixXd geometric_jacobian(const RobotModel& model, const Eigen::VectorXd& q,
                                   const std::string& frame);

/// Writes the Jacobian of end effector `ee_index` into a preallocated 6 x dof
/// block, given the workspace filled at the same q.
void geometric_jacobian_into(const RobotModel& model, const FkWorkspace& ws, int ee_index,
                             Eigen::Ref<Eigen::MatrixXd> block);

/// Vertical concatenation of per-frame Jacobians, 6M x dof in frame order.
Eigen::MatrixXd stack_tasks(const RobotModel& model, const Eigen::VectorXd& q,
                            const std::vector<std::string>& frames);

Eigen::MatrixXd stack_tasks_resolved(const RobotModel& model, const FkWorkspace& ws,
                                     const std::vector<int>& ee_indices);

}  // namespace mdik
