#include "mdik/model.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace mdik {

std::string to_string(JointKind kind) {
  switch (kind) {
    case JointKind::revolute: return "revolute";
    case JointKind::prismatic: return "prismatic";
    case JointKind::fixed: return "fixed";
  }
  return "?";
}

RobotModel::RobotModel(std::string name, std::vector<JointSpec> joints,
                       std::vector<EndEffector> end_effectors)
    : name_(std::move(name)), joints_(std::move(joints)), end_effectors_(std::move(end_effectors)) {
  const int n = static_cast<int>(joints_.size());

  for (int i = 0; i < n; ++i) {
    JointSpec& joint = joints_[static_cast<size_t>(i)];
    if (joint.parent < -1 || joint.parent >= n) {
      throw ParseError("joint '" + joint.name + "': parent index out of range");
    }
    if (joint.kind != JointKind::fixed) {
      const double axis_norm = joint.axis.norm();
      if (std::abs(axis_norm - 1.0) > 1e-6) {
        throw ParseError("joint '" + joint.name + "': axis norm " + std::to_string(axis_norm) +
                         " is not within 1e-6 of unit");
      }
      joint.axis /= axis_norm;
      if (!(joint.lower <= joint.upper)) {
        throw ParseError("joint '" + joint.name + "': lower limit exceeds upper limit");
      }
      if (!(joint.max_velocity >= 0.0)) {
        throw ParseError("joint '" + joint.name + "': max_velocity must be >= 0");
      }
    }
  }

  // Cycle check: every joint must reach the world root in at most n steps.
  for (int i = 0; i < n; ++i) {
    int cursor = i;
    for (int steps = 0; cursor != -1; ++steps) {
      if (steps > n) {
        throw ParseError("joint '" + joints_[static_cast<size_t>(i)].name +
                         "': parent chain contains a cycle");
      }
      cursor = joints_[static_cast<size_t>(cursor)].parent;
    }
  }

  // Parents-before-children traversal; document order otherwise.
  order_.reserve(static_cast<size_t>(n));
  std::vector<char> placed(static_cast<size_t>(n), 0);
  while (static_cast<int>(order_.size()) < n) {
    for (int i = 0; i < n; ++i) {
      if (placed[static_cast<size_t>(i)]) continue;
      const int parent = joints_[static_cast<size_t>(i)].parent;
      if (parent == -1 || placed[static_cast<size_t>(parent)]) {
        order_.push_back(i);
        placed[static_cast<size_t>(i)] = 1;
      }
    }
  }

  dof_ = 0;
  for (JointSpec& joint : joints_) {
    joint.config_index = joint.kind == JointKind::fixed ? -1 : dof_++;
  }
  lower_.resize(dof_);
  upper_.resize(dof_);
  vmax_.resize(dof_);
  for (const JointSpec& joint : joints_) {
    if (joint.config_index < 0) continue;
    lower_[joint.config_index] = joint.lower;
    upper_[joint.config_index] = joint.upper;
    vmax_[joint.config_index] = joint.max_velocity;
  }

  std::unordered_set<std::string> ee_names;
  on_path_.resize(end_effectors_.size());
  for (size_t e = 0; e < end_effectors_.size(); ++e) {
    const EndEffector& ee = end_effectors_[e];
    if (ee.parent < 0 || ee.parent >= n) {
      throw ParseError("end effector '" + ee.name + "': parent joint does not resolve");
    }
    if (!ee_names.insert(ee.name).second) {
      throw ParseError("duplicate end-effector name '" + ee.name + "'");
    }
    std::vector<char> mask(static_cast<size_t>(n), 0);
    for (int cursor = ee.parent; cursor != -1;
         cursor = joints_[static_cast<size_t>(cursor)].parent) {
      mask[static_cast<size_t>(cursor)] = 1;
    }
    on_path_[e] = std::move(mask);
  }
}

int RobotModel::end_effector_index(const std::string& frame) const {
  for (size_t e = 0; e < end_effectors_.size(); ++e) {
    if (end_effectors_[e].name == frame) return static_cast<int>(e);
  }
  throw std::invalid_argument("unknown end-effector frame '" + frame + "'");
}

bool RobotModel::has_frame(const std::string& frame) const {
  for (const EndEffector& ee : end_effectors_) {
    if (ee.name == frame) return true;
  }
  return false;
}

namespace {

using json = nlohmann::ordered_json;

Eigen::Vector3d parse_vec3(const json& value, const std::string& context) {
  if (!value.is_array() || value.size() != 3) {
    throw ParseError(context + ": expected an array of 3 numbers");
  }
  Eigen::Vector3d out;
  for (int i = 0; i < 3; ++i) {
    if (!value[static_cast<size_t>(i)].is_number()) {
      throw ParseError(context + ": expected an array of 3 numbers");
    }
    out[i] = value[static_cast<size_t>(i)].get<double>();
  }
  return out;
}

Transform parse_origin(const json& obj, const std::string& context) {
  Transform origin;
  if (!obj.contains("origin")) return origin;
  const json& o = obj["origin"];
  if (o.contains("xyz")) origin.translation = parse_vec3(o["xyz"], context + ".origin.xyz");
  if (o.contains("rpy")) {
    const Eigen::Vector3d rpy = parse_vec3(o["rpy"], context + ".origin.rpy");
    origin.rotation = quat_from_rpy(rpy[0], rpy[1], rpy[2]);
  }
  return origin;
}

double require_number(const json& obj, const char* key, const std::string& context) {
  if (!obj.contains(key) || !obj[key].is_number()) {
    throw ParseError(context + ": missing numeric field '" + std::string(key) + "'");
  }
  return obj[key].get<double>();
}

std::string require_string(const json& obj, const char* key, const std::string& context) {
  if (!obj.contains(key) || !obj[key].is_string()) {
    throw ParseError(context + ": missing string field '" + std::string(key) + "'");
  }
  return obj[key].get<std::string>();
}

// ZYX extraction matching quat_from_rpy; the gimbal-lock branch keeps the
// recomposed rotation identical even though roll/yaw are not unique there.
Eigen::Vector3d rpy_from_quat(const UnitQuaternion& q) {
  const double sinp = 2.0 * (q.w * q.y - q.x * q.z);
  if (std::abs(sinp) > 1.0 - 1e-12) {
    const double half_pi = std::acos(-1.0) / 2.0;
    const double yaw = 2.0 * std::atan2(q.z, q.w);
    return {0.0, std::copysign(half_pi, sinp), yaw};
  }
  const double roll = std::atan2(2.0 * (q.w * q.x + q.y * q.z), 1.0 - 2.0 * (q.x * q.x + q.y * q.y));
  const double pitch = std::asin(sinp);
  const double yaw = std::atan2(2.0 * (q.w * q.z + q.x * q.y), 1.0 - 2.0 * (q.y * q.y + q.z * q.z));
  return {roll, pitch, yaw};
}

json origin_to_json(const Transform& origin) {
  const Eigen::Vector3d rpy = rpy_from_quat(origin.rotation);
  json o;
  o["xyz"] = {origin.translation.x(), origin.translation.y(), origin.translation.z()};
  o["rpy"] = {rpy[0], rpy[1], rpy[2]};
  return o;
}

}  // namespace

RobotModel parse_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const nlohmann::json::parse_error& err) {
    throw ParseError(err.what());  // carries line and column
  }
  if (!doc.is_object()) throw ParseError("model document must be a JSON object");

  const std::string model_name = require_string(doc, "name", "model");
  if (!doc.contains("joints") || !doc["joints"].is_array()) {
    throw ParseError("model: missing 'joints' array");
  }

  std::vector<JointSpec> joints;
  std::unordered_map<std::string, int> index_by_name;
  std::vector<std::string> parent_names;

  for (const json& j : doc["joints"]) {
    const std::string context = "joint '" + (j.contains("name") && j["name"].is_string()
                                                 ? j["name"].get<std::string>()
                                                 : std::string("?")) + "'";
    JointSpec joint;
    joint.name = require_string(j, "name", "joint");
    if (index_by_name.count(joint.name)) {
      throw ParseError("duplicate joint name '" + joint.name + "'");
    }
    const std::string kind = require_string(j, "kind", context);
    if (kind == "revolute") joint.kind = JointKind::revolute;
    else if (kind == "prismatic") joint.kind = JointKind::prismatic;
    else if (kind == "fixed") joint.kind = JointKind::fixed;
    else throw ParseError(context + ": unknown kind '" + kind + "'");

    parent_names.push_back(require_string(j, "parent", context));
    joint.origin = parse_origin(j, context);
    if (joint.kind != JointKind::fixed) {
      if (!j.contains("axis")) throw ParseError(context + ": missing 'axis'");
      joint.axis = parse_vec3(j["axis"], context + ".axis");
      if (!j.contains("lower") || !j.contains("upper")) {
        throw ParseError(context + ": non-fixed joint is missing limits");
      }
      joint.lower = require_number(j, "lower", context);
      joint.upper = require_number(j, "upper", context);
      joint.max_velocity = require_number(j, "max_velocity", context);
    }
    index_by_name[joint.name] = static_cast<int>(joints.size());
    joints.push_back(std::move(joint));
  }

  for (size_t i = 0; i < joints.size(); ++i) {
    const std::string& parent = parent_names[i];
    if (parent == "root") {
      joints[i].parent = -1;
    } else {
      auto it = index_by_name.find(parent);
      if (it == index_by_name.end()) {
        throw ParseError("joint '" + joints[i].name + "': unknown parent '" + parent + "'");
      }
      joints[i].parent = it->second;
    }
  }

  std::vector<EndEffector> ees;
  if (doc.contains("end_effectors")) {
    if (!doc["end_effectors"].is_object()) {
      throw ParseError("model: 'end_effectors' must be an object");
    }
    for (const auto& [frame_name, body] : doc["end_effectors"].items()) {
      EndEffector ee;
      ee.name = frame_name;
      const std::string context = "end effector '" + frame_name + "'";
      const std::string parent = require_string(body, "parent", context);
      auto it = index_by_name.find(parent);
      if (it == index_by_name.end()) {
        throw ParseError(context + ": unknown parent joint '" + parent + "'");
      }
      ee.parent = it->second;
      ee.origin = parse_origin(body, context);
      ees.push_back(std::move(ee));
    }
  }

  return RobotModel(model_name, std::move(joints), std::move(ees));
}

RobotModel parse_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str());
}

std::string serialize_model(const RobotModel& model) {
  json doc;
  doc["name"] = model.name();
  doc["joints"] = json::array();
  for (const JointSpec& joint : model.joints()) {
    json j;
    j["name"] = joint.name;
    j["kind"] = to_string(joint.kind);
    j["parent"] = joint.parent == -1 ? std::string("root") : model.joint(joint.parent).name;
    j["origin"] = origin_to_json(joint.origin);
    if (joint.kind != JointKind::fixed) {
      j["axis"] = {joint.axis.x(), joint.axis.y(), joint.axis.z()};
      j["lower"] = joint.lower;
      j["upper"] = joint.upper;
      j["max_velocity"] = joint.max_velocity;
    }
    doc["joints"].push_back(std::move(j));
  }
  doc["end_effectors"] = json::object();
  for (const EndEffector& ee : model.end_effectors()) {
    json body;
    body["parent"] = model.joint(ee.parent).name;
    body["origin"] = origin_to_json(ee.origin);
    doc["end_effectors"][ee.name] = std::move(body);
  }
  return doc.dump(2) + "\n";
}

}  // namespace mdik
