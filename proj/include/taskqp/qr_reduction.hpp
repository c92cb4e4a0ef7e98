#pragma once

#include "taskqp/standard_qp.hpp"

#include <Eigen/Core>

namespace taskqp {

/// Equality-free QP in the coordinates xbar of the null space of A:
///   x = particular_solution + basis * xbar.
struct ReducedQP {
  StandardQP inner;
  Eigen::MatrixXd basis;
  Eigen::VectorXd particular_solution;
};

/// Rank tolerance: |R_ii| < kRankTolerance * max_j |R_jj| flags row i of A.
inline constexpr double kRankTolerance = 1e-10;

/// Eliminates every equality through a full QR factorization of A'.
/// Throws RankDeficiencyError naming the first dependent row of A.
ReducedQP reduce_qr(const StandardQP& qp);

/// Maps a reduced solution back to the original coordinates.
Eigen::VectorXd recover_solution(const ReducedQP& reduced, const Eigen::VectorXd& reduced_x);

/// Result of removing linearly dependent equality rows.
struct EqualityFilter {
  StandardQP qp;
  /// Original row index of each kept equality row.
  std::vector<Eigen::Index> kept_rows;
};

/// Drops equality rows that are linear combinations of earlier rows, after
/// checking that their right-hand sides agree. Throws InfeasibleError naming
/// the first inconsistent row.
EqualityFilter drop_redundant_equalities(const StandardQP& qp);

}  // namespace taskqp
