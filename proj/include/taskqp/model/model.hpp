#pragma once

#include "taskqp/model/spatial.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace taskqp {

enum class JointType { revolute, continuous, prismatic, fixed };

struct Joint {
  std::string name;
  JointType type = JointType::fixed;
  int parent_link = -1;
  int child_link = -1;
  /// Child joint frame relative to the parent link frame at q = 0.
  Placement origin;
  /// Unit axis in the joint (child) frame.
  Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
  std::optional<double> lower;
  std::optional<double> upper;
  std::optional<double> velocity;
  /// Index into the joint vector, -1 for fixed joints.
  int q_index = -1;

  bool movable() const { return type != JointType::fixed; }
};

/// Sphere or capsule in a link frame. A capsule is the set of points within
/// `radius` of the segment local.translation +- half_length * axis (axis in
/// the link frame, after applying local.rotation).
struct CollisionPrimitive {
  enum class Kind { sphere, capsule };
  Kind kind = Kind::sphere;
  Placement local;
  double radius = 0.0;
  double half_length = 0.0;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
};

struct Link {
  std::string name;
  double mass = 0.0;
  /// Centre of mass in the link frame.
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
  /// Parsed for completeness; no algorithm here uses it.
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();
  /// Joint whose child is this link, -1 for the root.
  int parent_joint = -1;
  std::vector<CollisionPrimitive> collision;
};

struct Frame {
  std::string name;
  int link = -1;
  Placement local;
};

struct CollisionPair {
  int link_a = -1;
  int link_b = -1;
};

/// q = (base placement, joint positions). The base is the root link frame.
struct Configuration {
  Placement base;
  Eigen::VectorXd joints;
};

/// Floating-base kinematic tree. Joints are stored in depth-first order from
/// the root (children in declaration order), so a joint's parent always
/// comes first; movable joints get consecutive q indices in that order.
class RigidBodyModel {
 public:
  RigidBodyModel() = default;
  /// Validates the tree and assigns joint order. Throws ModelError.
  RigidBodyModel(std::string name, std::vector<Link> links, std::vector<Joint> joints);

  const std::string& name() const { return name_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<Joint>& joints() const { return joints_; }
  const std::vector<Frame>& frames() const { return frames_; }
  const std::vector<CollisionPair>& collision_pairs() const { return pairs_; }

  /// Actuated (movable) joint count n.
  int dof() const { return dof_; }
  /// Dimension of a configuration increment, 6 + n.
  int nv() const { return 6 + dof_; }
  int root_link() const { return root_; }
  double total_mass() const;

  /// Throw UnknownNameError.
  int link_index(const std::string& name) const;
  int frame_index(const std::string& name) const;
  int joint_index(const std::string& name) const;
  const Frame& frame(const std::string& name) const { return frames_[static_cast<std::size_t>(frame_index(name))]; }
  const Joint& joint(const std::string& name) const { return joints_[static_cast<std::size_t>(joint_index(name))]; }
  /// Increment index (6 + q_index) of a movable joint.
  int velocity_index(const std::string& joint_name) const;
  bool has_frame(const std::string& name) const { return frame_lookup_.count(name) > 0; }

  /// Adds a named frame rigidly attached to a link. Throws ModelError on a
  /// duplicate name.
  void add_frame(const std::string& name, const std::string& link, const Placement& local);
  void add_collision_primitive(const std::string& link, const CollisionPrimitive& primitive);
  void add_collision_pair(const std::string& link_a, const std::string& link_b);

  /// Identity base, joints at zero (clamped into their limits).
  Configuration neutral() const;

 private:
  std::string name_;
  std::vector<Link> links_;
  std::vector<Joint> joints_;
  std::vector<Frame> frames_;
  std::vector<CollisionPair> pairs_;
  std::unordered_map<std::string, int> link_lookup_;
  std::unordered_map<std::string, int> joint_lookup_;
  std::unordered_map<std::string, int> frame_lookup_;
  int root_ = -1;
  int dof_ = 0;
};

}  // namespace taskqp
