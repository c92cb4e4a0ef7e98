#include "taskqp/model/model.hpp"

#include "taskqp/errors.hpp"

#include <algorithm>
#include <functional>
#include <string>
#include <utility>

namespace taskqp {

namespace {

std::string joint_path(const Joint& j) { return "robot/joint[@name='" + j.name + "']"; }

}  // namespace

RigidBodyModel::RigidBodyModel(std::string name, std::vector<Link> links, std::vector<Joint> joints)
    : name_(std::move(name)), links_(std::move(links)) {
  if (links_.empty()) throw ModelError(ModelErrorKind::invalid, "robot", "model has no links");
  for (std::size_t i = 0; i < links_.size(); ++i) {
    Link& link = links_[i];
    if (!link_lookup_.emplace(link.name, static_cast<int>(i)).second) {
      throw ModelError(ModelErrorKind::duplicate_name, "robot/link[@name='" + link.name + "']",
                       "duplicate link name");
    }
    if (!(link.mass >= 0.0) || !link.com.allFinite()) {
      throw ModelError(ModelErrorKind::invalid, "robot/link[@name='" + link.name + "']/inertial",
                       "mass must be finite and non-negative");
    }
    link.parent_joint = -1;
  }

  const int n_links = static_cast<int>(links_.size());
  std::vector<int> parent_of(links_.size(), -1);
  std::unordered_map<std::string, int> seen_joints;
  for (std::size_t j = 0; j < joints.size(); ++j) {
    const Joint& joint = joints[j];
    if (!seen_joints.emplace(joint.name, static_cast<int>(j)).second) {
      throw ModelError(ModelErrorKind::duplicate_name, joint_path(joint), "duplicate joint name");
    }
    if (joint.parent_link < 0 || joint.parent_link >= n_links || joint.child_link < 0 ||
        joint.child_link >= n_links) {
      throw ModelError(ModelErrorKind::dangling_reference, joint_path(joint), "joint references a missing link");
    }
    if (joint.parent_link == joint.child_link) {
      throw ModelError(ModelErrorKind::cycle, joint_path(joint), "joint connects a link to itself");
    }
    const std::size_t child = static_cast<std::size_t>(joint.child_link);
    if (parent_of[child] >= 0) {
      throw ModelError(ModelErrorKind::cycle, joint_path(joint),
                       "link '" + links_[child].name + "' already has parent joint '" +
                           joints[static_cast<std::size_t>(parent_of[child])].name +
                           "'; closing a kinematic loop is not supported");
    }
    if (joint.movable()) {
      if (!(joint.axis.norm() > 0.0) || !joint.axis.allFinite()) {
        throw ModelError(ModelErrorKind::invalid, joint_path(joint) + "/axis", "axis must be nonzero");
      }
      if (joint.lower && joint.upper && *joint.lower > *joint.upper) {
        throw ModelError(ModelErrorKind::invalid, joint_path(joint) + "/limit", "lower limit exceeds upper");
      }
      if (joint.velocity && !(*joint.velocity > 0.0)) {
        throw ModelError(ModelErrorKind::invalid, joint_path(joint) + "/limit", "velocity limit must be positive");
      }
    }
    parent_of[child] = static_cast<int>(j);
  }

  std::vector<int> roots;
  for (int i = 0; i < n_links; ++i)
    if (parent_of[static_cast<std::size_t>(i)] < 0) roots.push_back(i);
  if (roots.size() > 1) {
    throw ModelError(ModelErrorKind::invalid, "robot",
                     "links '" + links_[static_cast<std::size_t>(roots[0])].name + "' and '" +
                         links_[static_cast<std::size_t>(roots[1])].name +
                         "' both have no parent joint (model is not connected)");
  }

  auto cycle_error = [&](int start) {
    // Every link on this walk has a parent, so it must revisit a link.
    std::vector<char> visited(links_.size(), 0);
    int link = start;
    while (!visited[static_cast<std::size_t>(link)]) {
      visited[static_cast<std::size_t>(link)] = 1;
      link = joints[static_cast<std::size_t>(parent_of[static_cast<std::size_t>(link)])].parent_link;
    }
    const Joint& joint = joints[static_cast<std::size_t>(parent_of[static_cast<std::size_t>(link)])];
    return ModelError(ModelErrorKind::cycle, joint_path(joint), "joint '" + joint.name + "' is part of a cycle");
  };
  if (roots.empty()) throw cycle_error(0);
  root_ = roots[0];

  // Depth-first order, children in declaration order.
  std::vector<std::vector<int>> children(links_.size());
  for (std::size_t j = 0; j < joints.size(); ++j) {
    children[static_cast<std::size_t>(joints[j].parent_link)].push_back(static_cast<int>(j));
  }
  std::vector<char> reached(links_.size(), 0);
  std::function<void(int)> visit = [&](int link) {
    reached[static_cast<std::size_t>(link)] = 1;
    for (int j : children[static_cast<std::size_t>(link)]) {
      Joint joint = joints[static_cast<std::size_t>(j)];
      if (joint.movable()) {
        joint.axis.normalize();
        joint.q_index = dof_++;
      } else {
        joint.q_index = -1;
      }
      links_[static_cast<std::size_t>(joint.child_link)].parent_joint = static_cast<int>(joints_.size());
      joints_.push_back(std::move(joint));
      visit(joints[static_cast<std::size_t>(j)].child_link);
    }
  };
  visit(root_);
  for (int i = 0; i < n_links; ++i) {
    if (!reached[static_cast<std::size_t>(i)]) throw cycle_error(i);
  }

  for (std::size_t j = 0; j < joints_.size(); ++j) joint_lookup_.emplace(joints_[j].name, static_cast<int>(j));
  for (std::size_t i = 0; i < links_.size(); ++i) {
    frame_lookup_.emplace(links_[i].name, static_cast<int>(frames_.size()));
    frames_.push_back({links_[i].name, static_cast<int>(i), Placement::identity()});
  }
}

double RigidBodyModel::total_mass() const {
  double m = 0.0;
  for (const Link& link : links_) m += link.mass;
  return m;
}

int RigidBodyModel::link_index(const std::string& name) const {
  const auto it = link_lookup_.find(name);
  if (it == link_lookup_.end()) throw UnknownNameError(name, "unknown link '" + name + "'");
  return it->second;
}

int RigidBodyModel::frame_index(const std::string& name) const {
  const auto it = frame_lookup_.find(name);
  if (it == frame_lookup_.end()) throw UnknownNameError(name, "unknown frame '" + name + "'");
  return it->second;
}

int RigidBodyModel::joint_index(const std::string& name) const {
  const auto it = joint_lookup_.find(name);
  if (it == joint_lookup_.end()) throw UnknownNameError(name, "unknown joint '" + name + "'");
  return it->second;
}

int RigidBodyModel::velocity_index(const std::string& joint_name) const {
  const Joint& j = joint(joint_name);
  if (!j.movable()) throw InvalidArgument("joint '" + joint_name + "' is fixed and has no coordinate");
  return 6 + j.q_index;
}

void RigidBodyModel::add_frame(const std::string& name, const std::string& link, const Placement& local) {
  const int l = link_index(link);
  check_rotation(local.rotation);
  if (frame_lookup_.count(name)) {
    throw ModelError(ModelErrorKind::duplicate_name, "frame '" + name + "'", "duplicate frame name");
  }
  frame_lookup_.emplace(name, static_cast<int>(frames_.size()));
  frames_.push_back({name, l, local});
}

void RigidBodyModel::add_collision_primitive(const std::string& link, const CollisionPrimitive& primitive) {
  const int l = link_index(link);
  if (!(primitive.radius >= 0.0) || !(primitive.half_length >= 0.0)) {
    throw ModelError(ModelErrorKind::invalid, "collision/" + link, "radius and half length must be non-negative");
  }
  CollisionPrimitive p = primitive;
  if (p.kind == CollisionPrimitive::Kind::capsule) {
    if (!(p.axis.norm() > 0.0)) throw ModelError(ModelErrorKind::invalid, "collision/" + link, "capsule axis is zero");
    p.axis.normalize();
  }
  links_[static_cast<std::size_t>(l)].collision.push_back(p);
}

void RigidBodyModel::add_collision_pair(const std::string& link_a, const std::string& link_b) {
  const int a = link_index(link_a);
  const int b = link_index(link_b);
  if (a == b) throw ModelError(ModelErrorKind::invalid, "collision/pairs", "pair '" + link_a + "' with itself");
  pairs_.push_back({a, b});
}

Configuration RigidBodyModel::neutral() const {
  Configuration q;
  q.joints = Eigen::VectorXd::Zero(dof_);
  for (const Joint& j : joints_) {
    if (!j.movable()) continue;
    double& v = q.joints(j.q_index);
    if (j.lower) v = std::max(v, *j.lower);
    if (j.upper) v = std::min(v, *j.upper);
  }
  return q;
}

}  // namespace taskqp
