#pragma once

#include "taskqp/standard_qp.hpp"

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace taskqp {

struct SolveResult {
  Eigen::VectorXd x;
  /// Inequality rows in the active set at the optimum, ascending.
  std::vector<Eigen::Index> active_set;
  /// Equality multipliers followed by the multipliers of `active_set`, using
  /// the sign convention Px + a + A'lambda_E + G'lambda_I = 0, lambda_I >= 0.
  Eigen::VectorXd lagrange_multipliers;
  int iterations = 0;
  double objective = 0.0;
  /// Max of stationarity, primal feasibility and complementarity residuals.
  double kkt_residual = 0.0;
};

/// KKT residual for a candidate primal/dual pair. `inequality_multipliers`
/// has one entry per row of G (zero for inactive rows).
double kkt_residual(const StandardQP& qp, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& equality_multipliers,
                    const Eigen::VectorXd& inequality_multipliers);

/// Dense dual active-set solver for strictly convex QPs (Goldfarb-Idnani).
///
/// P is factored once; equality rows enter the working set first and are
/// never dropped. Equality rows that are linearly dependent on earlier rows
/// are skipped when consistent. The default iteration cap is
/// 10 * (n + rows(A) + rows(G)).
///
/// Throws InfeasibleError (with the offending row) when the constraints are
/// inconsistent, NonConvergenceError when the cap is hit, and
/// InvalidArgument when P is not positive definite.
SolveResult solve_qp(const StandardQP& qp, std::optional<int> max_iterations = std::nullopt);

}  // namespace taskqp
