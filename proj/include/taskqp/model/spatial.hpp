#pragma once

#include <Eigen/Core>

namespace taskqp {

/// [v]x, the cross-product matrix.
Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// Rodrigues' formula.
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& omega);

/// Rotation vector with norm in [0, pi]. Angles above pi - 1e-4 take the
/// axis from the symmetric part of R instead of the antisymmetric one.
Eigen::Vector3d so3_log(const Eigen::Matrix3d& R);

/// Inverse of the right Jacobian of SO(3):
///   Log(Exp(e) Exp(d)) = e + Jr^-1(e) d + O(|d|^2)
Eigen::Matrix3d so3_right_jacobian_inverse(const Eigen::Vector3d& e);

/// URDF convention R = Rz(yaw) Ry(pitch) Rx(roll).
Eigen::Matrix3d rpy_to_matrix(const Eigen::Vector3d& rpy);

/// Throws InvalidArgument when R'R deviates from I by more than 1e-9 or
/// det R is not positive.
void check_rotation(const Eigen::Matrix3d& R);

/// Rigid transform x -> rotation * x + translation.
struct Placement {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Placement identity() { return {}; }
  static Placement from_xyz_rpy(const Eigen::Vector3d& xyz, const Eigen::Vector3d& rpy);

  Placement operator*(const Placement& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }
  Eigen::Vector3d act(const Eigen::Vector3d& point) const { return rotation * point + translation; }
  Placement inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }
  Eigen::Matrix4d matrix() const;
};

}  // namespace taskqp
