#pragma once

#include "taskqp/expression.hpp"

#include <Eigen/Core>

#include <vector>

namespace taskqp {

/// Continuous-time linear dynamics  dy/dt = D y + E x.
struct LinearSystem {
  Eigen::MatrixXd D;
  Eigen::MatrixXd E;

  Eigen::Index states() const { return D.rows(); }
  Eigen::Index inputs() const { return E.cols(); }
  /// Throws DimensionError / InvalidArgument on inconsistent or non-finite data.
  void validate() const;
};

/// Chain of `order` integrators driven by the highest derivative:
/// ones on the superdiagonal of D, E the last unit vector.
LinearSystem integrator_chain(int order);

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
/// Nilpotent (strictly upper triangular) inputs skip the scaling, so the
/// series terminates and the result is exact up to rounding.
Eigen::MatrixXd expm(const Eigen::MatrixXd& m);

struct Discretization {
  Eigen::MatrixXd D_d;
  Eigen::MatrixXd E_d;
};

/// Zero-order-hold discretization over `tau` seconds from the exponential of
/// [[D, E], [0, 0]] tau. Throws InvalidArgument when tau <= 0.
Discretization discretize(const LinearSystem& system, double tau);

/// Embeds a linear system driven by a decision variable holding the stacked
/// inputs x_0 ... x_{N-1}, and exposes states as affine expressions of it.
class Integrator {
 public:
  /// `steps` < 0 infers N from the variable size. Throws DimensionError when
  /// the variable size differs from N * inputs.
  Integrator(const Variable& input, Eigen::VectorXd y0, LinearSystem system, double dt,
             Eigen::Index steps = -1);
  Integrator(const Variable& input, Eigen::VectorXd y0, int order, double dt, Eigen::Index steps = -1);

  /// Full state y_k, 0 <= k <= N.
  Expression state(Eigen::Index step) const;
  /// Component `row` of y_k.
  Expression expr(Eigen::Index step, Eigen::Index row) const;

  /// Full state y(t), 0 <= t <= N dt. Times within 1e-9 steps of a boundary
  /// snap to it, and a boundary uses step k with tau = 0.
  Expression state_t(double t) const;
  Expression expr_t(double t, Eigen::Index row) const;

  /// Expression of the input x_k.
  Expression input(Eigen::Index step) const;

  const LinearSystem& system() const { return system_; }
  const Discretization& discrete() const { return discrete_; }
  /// D_d^k, cached for 0 <= k <= N.
  const Eigen::MatrixXd& power(Eigen::Index k) const;
  const Eigen::VectorXd& initial_state() const { return y0_; }
  const Variable& variable() const { return input_; }
  Eigen::Index steps() const { return steps_; }
  double dt() const { return dt_; }

 private:
  void check_row(Eigen::Index row) const;

  Variable input_;
  Eigen::VectorXd y0_;
  LinearSystem system_;
  double dt_;
  Eigen::Index steps_ = 0;
  Discretization discrete_;
  std::vector<Eigen::MatrixXd> powers_;
};

}  // namespace taskqp
