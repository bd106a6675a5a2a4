#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdik/transform.hpp"

namespace mdik {

enum class JointKind { revolute, prismatic, fixed };

std::string to_string(JointKind kind);

/// One joint of the kinematic tree. `parent` indexes into the model's joint
/// list, -1 meaning the world root. Limit fields are ignored for fixed joints.
struct JointSpec {
  std::string name;
  JointKind kind = JointKind::revolute;
  int parent = -1;
  Transform origin;  // fixed offset from the parent frame
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  double lower = 0.0;
  double upper = 0.0;
  double max_velocity = 0.0;
  int config_index = -1;  // position in q, -1 for fixed joints
};

struct EndEffector {
  std::string name;
  int parent = -1;  // joint the frame is attached to
  Transform origin;
};

/// Immutable kinematic chain. Joints form a tree rooted at the world frame;
/// the document order of non-fixed joints defines the layout of the
/// configuration vector q. Safe to share across threads after construction.
class RobotModel {
 public:
  RobotModel(std::string name, std::vector<JointSpec> joints,
             std::vector<EndEffector> end_effectors);

  const std::string& name() const { return name_; }
  int dof() const { return dof_; }
  int joint_count() const { return static_cast<int>(joints_.size()); }
  const JointSpec& joint(int i) const { return joints_[static_cast<size_t>(i)]; }
  const std::vector<JointSpec>& joints() const { return joints_; }
  const std::vector<EndEffector>& end_effectors() const { return end_effectors_; }

  /// Throws std::invalid_argument on an unknown frame name.
  int end_effector_index(const std::string& frame) const;
  bool has_frame(const std::string& frame) const;

  /// Joint indices ordered parents-before-children.
  const std::vector<int>& traversal_order() const { return order_; }

  /// on_path(e)[j] is nonzero iff joint j lies between the root and end
  /// effector e; off-path joints get zero Jacobian columns.
  const std::vector<char>& on_path(int ee_index) const {
    return on_path_[static_cast<size_t>(ee_index)];
  }

  // Per-configuration-index limit vectors, all of length dof().
  const Eigen::VectorXd& lower_limits() const { return lower_; }
  const Eigen::VectorXd& upper_limits() const { return upper_; }
  const Eigen::VectorXd& velocity_limits() const { return vmax_; }

 private:
  std::string name_;
  std::vector<JointSpec> joints_;
  std::vector<EndEffector> end_effectors_;
  std::vector<int> order_;
  std::vector<std::vector<char>> on_path_;
  Eigen::VectorXd lower_, upper_, vmax_;
  int dof_ = 0;
};

/// Raised on malformed model documents; the message carries the JSON
/// line/column for syntax errors or the offending joint name otherwise.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Parses the JSON model document format (see README for the schema).
RobotModel parse_model(const std::string& text);
RobotModel parse_model_file(const std::string& path);

/// Serializes back to the document format; reparsing yields identical FK.
std::string serialize_model(const RobotModel& model);

}  // namespace mdik
