#include "taskqp/model/spatial.hpp"

#include "taskqp/errors.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

namespace taskqp {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Eigen::Matrix3d K = skew(omega);
  double a;
  double b;
  if (theta < 1e-6) {
    // Taylor expansions of sin(t)/t and (1 - cos t)/t^2
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Eigen::Matrix3d::Identity() + a * K + b * K * K;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& R) {
  const double cos_theta = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  const Eigen::Vector3d vee(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));

  if (theta < 1e-6) return 0.5 * (1.0 + theta * theta / 6.0) * vee;
  if (theta <= kPi - 1e-4) return theta / (2.0 * std::sin(theta)) * vee;

  // Near pi the antisymmetric part vanishes; R + R' = 2 cos(t) I + 2 (1 - cos t) a a'.
  const Eigen::Matrix3d S = 0.5 * (R + R.transpose()) - cos_theta * Eigen::Matrix3d::Identity();
  Eigen::Index k;
  S.diagonal().maxCoeff(&k);
  Eigen::Vector3d axis = S.col(k) / std::sqrt(std::max(S(k, k), 1e-300));
  axis.normalize();
  // Sign from the (small) antisymmetric part: vee = 2 sin(t) axis.
  if (axis.dot(vee) < 0.0) axis = -axis;
  return theta * axis;
}

Eigen::Matrix3d so3_right_jacobian_inverse(const Eigen::Vector3d& e) {
  const double theta2 = e.squaredNorm();
  const Eigen::Matrix3d K = skew(e);
  double c;
  if (theta2 < 1e-8) {
    c = 1.0 / 12.0 + theta2 / 720.0;
  } else {
    const double theta = std::sqrt(theta2);
    c = (1.0 / theta2) - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Eigen::Matrix3d::Identity() + 0.5 * K + c * K * K;
}

Eigen::Matrix3d rpy_to_matrix(const Eigen::Vector3d& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(rpy.y(), Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

void check_rotation(const Eigen::Matrix3d& R) {
  if (!R.allFinite() || (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
      R.determinant() <= 0.0) {
    throw InvalidArgument("matrix is not a rotation (R'R != I or det <= 0)");
  }
}

Placement Placement::from_xyz_rpy(const Eigen::Vector3d& xyz, const Eigen::Vector3d& rpy) {
  return {rpy_to_matrix(rpy), xyz};
}

Eigen::Matrix4d Placement::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

}  // namespace taskqp
