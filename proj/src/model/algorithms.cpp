#include "taskqp/model/algorithms.hpp"

#include "taskqp/errors.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace taskqp {

namespace {

void check_configuration(const RigidBodyModel& model, const Configuration& q) {
  if (q.joints.size() != model.dof()) {
    throw DimensionError("configuration has " + std::to_string(q.joints.size()) + " joint values, model '" +
                         model.name() + "' has " + std::to_string(model.dof()));
  }
}

Placement joint_motion(const Joint& joint, double value) {
  Placement m;
  switch (joint.type) {
    case JointType::revolute:
    case JointType::continuous:
      m.rotation = so3_exp(joint.axis * value);
      break;
    case JointType::prismatic:
      m.translation = joint.axis * value;
      break;
    case JointType::fixed:
      break;
  }
  return m;
}

/// Segment of a primitive in world coordinates (a sphere is a point).
struct WorldSegment {
  Eigen::Vector3d p0;
  Eigen::Vector3d p1;
  double radius;
};

WorldSegment world_segment(const Placement& link, const CollisionPrimitive& prim) {
  const Placement pose = link * prim.local;
  if (prim.kind == CollisionPrimitive::Kind::sphere) return {pose.translation, pose.translation, prim.radius};
  const Eigen::Vector3d half = pose.rotation * (prim.axis * prim.half_length);
  return {pose.translation - half, pose.translation + half, prim.radius};
}

}  // namespace

std::vector<Placement> link_placements(const RigidBodyModel& model, const Configuration& q) {
  check_configuration(model, q);
  std::vector<Placement> out(model.links().size());
  out[static_cast<std::size_t>(model.root_link())] = q.base;
  // joints are stored parent-first
  for (const Joint& joint : model.joints()) {
    const double value = joint.movable() ? q.joints(joint.q_index) : 0.0;
    out[static_cast<std::size_t>(joint.child_link)] =
        out[static_cast<std::size_t>(joint.parent_link)] * joint.origin * joint_motion(joint, value);
  }
  return out;
}

Placement frame_placement(const RigidBodyModel& model, const Configuration& q, const std::string& frame) {
  const Frame& f = model.frame(frame);
  return link_placements(model, q)[static_cast<std::size_t>(f.link)] * f.local;
}

Eigen::MatrixXd point_jacobian(const RigidBodyModel& model, const std::vector<Placement>& placements, int link,
                               const Eigen::Vector3d& world_point) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3, model.nv());
  J.leftCols<3>().setIdentity();
  J.middleCols<3>(3) = -skew(world_point - placements[static_cast<std::size_t>(model.root_link())].translation);
  for (int l = link; model.links()[static_cast<std::size_t>(l)].parent_joint >= 0;) {
    const Joint& joint = model.joints()[static_cast<std::size_t>(model.links()[static_cast<std::size_t>(l)].parent_joint)];
    if (joint.movable()) {
      const Placement frame = placements[static_cast<std::size_t>(joint.parent_link)] * joint.origin;
      const Eigen::Vector3d axis = frame.rotation * joint.axis;
      const int col = 6 + joint.q_index;
      if (joint.type == JointType::prismatic) {
        J.col(col) = axis;
      } else {
        J.col(col) = axis.cross(world_point - frame.translation);
      }
    }
    l = joint.parent_link;
  }
  return J;
}

Eigen::MatrixXd angular_jacobian(const RigidBodyModel& model, const std::vector<Placement>& placements, int link) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3, model.nv());
  J.middleCols<3>(3).setIdentity();
  for (int l = link; model.links()[static_cast<std::size_t>(l)].parent_joint >= 0;) {
    const Joint& joint = model.joints()[static_cast<std::size_t>(model.links()[static_cast<std::size_t>(l)].parent_joint)];
    if (joint.movable() && joint.type != JointType::prismatic) {
      J.col(6 + joint.q_index) =
          placements[static_cast<std::size_t>(joint.parent_link)].rotation * joint.origin.rotation * joint.axis;
    }
    l = joint.parent_link;
  }
  return J;
}

FrameJacobian frame_jacobian(const RigidBodyModel& model, const Configuration& q, const std::string& frame) {
  const Frame& f = model.frame(frame);
  const std::vector<Placement> placements = link_placements(model, q);
  const Placement world = placements[static_cast<std::size_t>(f.link)] * f.local;
  return {point_jacobian(model, placements, f.link, world.translation),
          angular_jacobian(model, placements, f.link)};
}

Placement relative_placement(const RigidBodyModel& model, const Configuration& q, const std::string& a,
                             const std::string& b) {
  const Frame& fa = model.frame(a);
  const Frame& fb = model.frame(b);
  const std::vector<Placement> placements = link_placements(model, q);
  const Placement wa = placements[static_cast<std::size_t>(fa.link)] * fa.local;
  const Placement wb = placements[static_cast<std::size_t>(fb.link)] * fb.local;
  return wa.inverse() * wb;
}

FrameJacobian relative_jacobian(const RigidBodyModel& model, const Configuration& q, const std::string& a,
                                const std::string& b) {
  const Frame& fa = model.frame(a);
  const Frame& fb = model.frame(b);
  const std::vector<Placement> placements = link_placements(model, q);
  const Placement wa = placements[static_cast<std::size_t>(fa.link)] * fa.local;
  const Placement wb = placements[static_cast<std::size_t>(fb.link)] * fb.local;
  const Eigen::MatrixXd ja_t = point_jacobian(model, placements, fa.link, wa.translation);
  const Eigen::MatrixXd jb_t = point_jacobian(model, placements, fb.link, wb.translation);
  const Eigen::MatrixXd ja_r = angular_jacobian(model, placements, fa.link);
  const Eigen::MatrixXd jb_r = angular_jacobian(model, placements, fb.link);
  const Eigen::Matrix3d Rt = wa.rotation.transpose();
  // d(R_a'(p_b - p_a)) = R_a'(dp_b - dp_a + [p_b - p_a]x w_a)
  return {Rt * (jb_t - ja_t + skew(wb.translation - wa.translation) * ja_r), Rt * (jb_r - ja_r)};
}

Eigen::Vector3d com(const RigidBodyModel& model, const Configuration& q) {
  const double mass = model.total_mass();
  if (!(mass > 0.0)) {
    throw ModelError(ModelErrorKind::zero_mass, "robot", "centre of mass undefined: total mass is zero");
  }
  const std::vector<Placement> placements = link_placements(model, q);
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < model.links().size(); ++i) {
    const Link& link = model.links()[i];
    if (link.mass > 0.0) sum += link.mass * placements[i].act(link.com);
  }
  return sum / mass;
}

Eigen::MatrixXd com_jacobian(const RigidBodyModel& model, const Configuration& q) {
  const double mass = model.total_mass();
  if (!(mass > 0.0)) {
    throw ModelError(ModelErrorKind::zero_mass, "robot", "centre of mass undefined: total mass is zero");
  }
  const std::vector<Placement> placements = link_placements(model, q);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3, model.nv());
  for (std::size_t i = 0; i < model.links().size(); ++i) {
    const Link& link = model.links()[i];
    if (link.mass > 0.0) {
      J += link.mass * point_jacobian(model, placements, static_cast<int>(i), placements[i].act(link.com));
    }
  }
  return J / mass;
}

Configuration integrate_config(const Configuration& q, const Eigen::VectorXd& dq) {
  if (dq.size() != 6 + q.joints.size()) {
    throw DimensionError("increment has size " + std::to_string(dq.size()) + ", expected " +
                         std::to_string(6 + q.joints.size()));
  }
  if (!dq.allFinite()) throw InvalidArgument("configuration increment has non-finite entries");
  Configuration out = q;
  out.base.translation += dq.head<3>();
  out.base.rotation = so3_exp(dq.segment<3>(3)) * q.base.rotation;
  out.joints += dq.tail(q.joints.size());
  return out;
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> closest_points_segments(const Eigen::Vector3d& p0,
                                                                    const Eigen::Vector3d& p1,
                                                                    const Eigen::Vector3d& q0,
                                                                    const Eigen::Vector3d& q1) {
  const Eigen::Vector3d d1 = p1 - p0;
  const Eigen::Vector3d d2 = q1 - q0;
  const Eigen::Vector3d r = p0 - q0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  constexpr double tiny = 1e-300;
  double s = 0.0;
  double t = 0.0;
  if (a <= tiny && e <= tiny) return {p0, q0};
  if (a <= tiny) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= tiny) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      // parallel segments: any s works, pick the start
      s = denom > 1e-14 * a * e ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return {p0 + s * d1, q0 + t * d2};
}

CollisionResult collision_distance(const RigidBodyModel& model, const std::vector<Placement>& placements,
                                   const CollisionPair& pair) {
  const Link& la = model.links()[static_cast<std::size_t>(pair.link_a)];
  const Link& lb = model.links()[static_cast<std::size_t>(pair.link_b)];
  for (const Link* link : {&la, &lb}) {
    if (link->collision.empty()) {
      throw ModelError(ModelErrorKind::missing_primitives, "collision/links/" + link->name,
                       "link has no collision primitives");
    }
  }
  CollisionResult best;
  best.distance = std::numeric_limits<double>::infinity();
  best.link_a = pair.link_a;
  best.link_b = pair.link_b;
  for (const CollisionPrimitive& pa : la.collision) {
    const WorldSegment sa = world_segment(placements[static_cast<std::size_t>(pair.link_a)], pa);
    for (const CollisionPrimitive& pb : lb.collision) {
      const WorldSegment sb = world_segment(placements[static_cast<std::size_t>(pair.link_b)], pb);
      const auto [ca, cb] = closest_points_segments(sa.p0, sa.p1, sb.p0, sb.p1);
      const Eigen::Vector3d delta = cb - ca;
      const double centre_distance = delta.norm();
      const double d = centre_distance - sa.radius - sb.radius;
      if (d < best.distance) {
        // coincident cores have no preferred direction; use a fixed one
        const Eigen::Vector3d u = centre_distance > 1e-12 ? Eigen::Vector3d(delta / centre_distance)
                                                          : Eigen::Vector3d::UnitX();
        best.distance = d;
        best.normal = u;
        best.point_a = ca + sa.radius * u;
        best.point_b = cb - sb.radius * u;
      }
    }
  }
  return best;
}

CollisionResult collision_distance(const RigidBodyModel& model, const Configuration& q, const CollisionPair& pair) {
  return collision_distance(model, link_placements(model, q), pair);
}

}  // namespace taskqp
