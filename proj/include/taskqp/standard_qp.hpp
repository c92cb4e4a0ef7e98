#pragma once

#include <Eigen/Core>

namespace taskqp {

/// min 1/2 x'Px + a'x  subject to  Ax = b,  Gx <= h
struct StandardQP {
  Eigen::MatrixXd P;
  Eigen::VectorXd a;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;

  Eigen::Index variables() const { return P.rows(); }
  Eigen::Index equalities() const { return A.rows(); }
  Eigen::Index inequalities() const { return G.rows(); }

  double objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(P * x) + a.dot(x); }

  /// Throws DimensionError when the blocks are mutually inconsistent or P is
  /// not symmetric within 1e-12 (relative to its largest entry).
  void validate() const;
};

}  // namespace taskqp
