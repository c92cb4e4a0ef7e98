#pragma once

// Kinematic queries on (model, q). No caches: every call recomputes from the
// configuration, so a shared model can be queried from several threads.
//
// Increment convention: dq = [v (3, world), w (3, world), joints (n)], with
// base translation t <- t + v and rotation R <- Exp(w) R. Translational
// Jacobians map dq to first-order point displacement in the world frame;
// rotational ones map dq to the world-frame rotation vector d with
// R' = Exp(d) R to first order.

#include "taskqp/model/model.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace taskqp {

struct FrameJacobian {
  Eigen::MatrixXd translation;  ///< 3 x (6 + n)
  Eigen::MatrixXd rotation;     ///< 3 x (6 + n)
};

/// World placement of every link, indexed like model.links(). Throws
/// DimensionError when q.joints has the wrong size.
std::vector<Placement> link_placements(const RigidBodyModel& model, const Configuration& q);

/// Throws UnknownNameError for an unknown frame.
Placement frame_placement(const RigidBodyModel& model, const Configuration& q, const std::string& frame);
FrameJacobian frame_jacobian(const RigidBodyModel& model, const Configuration& q, const std::string& frame);

/// Translational Jacobian of a world point rigidly attached to `link`.
Eigen::MatrixXd point_jacobian(const RigidBodyModel& model, const std::vector<Placement>& placements, int link,
                               const Eigen::Vector3d& world_point);
/// Rotational Jacobian of `link` (world angular increment).
Eigen::MatrixXd angular_jacobian(const RigidBodyModel& model, const std::vector<Placement>& placements, int link);

/// Placement of frame b expressed in frame a: (R_a' R_b, R_a'(p_b - p_a)).
Placement relative_placement(const RigidBodyModel& model, const Configuration& q, const std::string& a,
                             const std::string& b);
/// First-order maps of the relative translation and of the relative
/// rotation (left increment, expressed in frame a).
FrameJacobian relative_jacobian(const RigidBodyModel& model, const Configuration& q, const std::string& a,
                                const std::string& b);

/// Mass-weighted mean of link centres of mass. Throws ModelError (zero_mass)
/// when the total mass is not positive.
Eigen::Vector3d com(const RigidBodyModel& model, const Configuration& q);
Eigen::MatrixXd com_jacobian(const RigidBodyModel& model, const Configuration& q);

/// Applies an increment of size 6 + n. Throws DimensionError on a size
/// mismatch and InvalidArgument on non-finite entries.
Configuration integrate_config(const Configuration& q, const Eigen::VectorXd& dq);

struct CollisionResult {
  double distance = 0.0;         ///< signed, negative when interpenetrating
  Eigen::Vector3d point_a;       ///< witness point on the surface of A
  Eigen::Vector3d point_b;       ///< witness point on the surface of B
  Eigen::Vector3d normal;        ///< unit direction increasing B's separation from A
  int link_a = -1;
  int link_b = -1;
};

/// Minimum over the primitive pairs of the two links. Throws ModelError
/// (missing_primitives) when a link carries no primitive.
CollisionResult collision_distance(const RigidBodyModel& model, const Configuration& q, const CollisionPair& pair);
CollisionResult collision_distance(const RigidBodyModel& model, const std::vector<Placement>& placements,
                                   const CollisionPair& pair);

/// Closest points between segments [p0, p1] and [q0, q1]; zero-length
/// segments are allowed. Returns (point on first, point on second).
std::pair<Eigen::Vector3d, Eigen::Vector3d> closest_points_segments(const Eigen::Vector3d& p0,
                                                                    const Eigen::Vector3d& p1,
                                                                    const Eigen::Vector3d& q0,
                                                                    const Eigen::Vector3d& q1);

}  // namespace taskqp
