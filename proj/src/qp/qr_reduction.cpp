#include "taskqp/qr_reduction.hpp"

#include "taskqp/errors.hpp"

#include <Eigen/QR>

#include <cmath>
#include <string>
#include <vector>

namespace taskqp {

ReducedQP reduce_qr(const StandardQP& qp) {
  qp.validate();
  const Eigen::Index p = qp.variables();
  const Eigen::Index r = qp.equalities();

  ReducedQP reduced;
  if (r == 0) {
    reduced.inner = qp;
    reduced.inner.A.resize(0, p);
    reduced.inner.b.resize(0);
    reduced.basis = Eigen::MatrixXd::Identity(p, p);
    reduced.particular_solution = Eigen::VectorXd::Zero(p);
    return reduced;
  }

  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(qp.A.transpose());
  const Eigen::MatrixXd& packed = qr.matrixQR();
  const Eigen::Index diag = std::min(p, r);
  double largest = 0.0;
  for (Eigen::Index i = 0; i < diag; ++i) largest = std::max(largest, std::abs(packed(i, i)));
  for (Eigen::Index i = 0; i < r; ++i) {
    if (i >= p || !(std::abs(packed(i, i)) >= kRankTolerance * largest) || largest == 0.0) {
      throw RankDeficiencyError(i, "equality matrix is rank deficient: row " + std::to_string(i) +
                                       " depends on earlier rows");
    }
  }

  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(p, p);
  const Eigen::MatrixXd R1 = packed.topLeftCorner(r, r).triangularView<Eigen::Upper>();
  // x_p = Q1 (R1')^-1 b
  const Eigen::VectorXd y = R1.transpose().triangularView<Eigen::Lower>().solve(qp.b);
  reduced.particular_solution = Q.leftCols(r) * y;
  reduced.basis = Q.rightCols(p - r);

  const Eigen::MatrixXd& basis = reduced.basis;
  StandardQP& inner = reduced.inner;
  inner.P = basis.transpose() * qp.P * basis;
  inner.P = 0.5 * (inner.P + inner.P.transpose()).eval();
  inner.a = basis.transpose() * (qp.P * reduced.particular_solution + qp.a);
  inner.A.resize(0, p - r);
  inner.b.resize(0);
  if (qp.inequalities() > 0) {
    inner.G = qp.G * basis;
    inner.h = qp.h - qp.G * reduced.particular_solution;
  } else {
    inner.G.resize(0, p - r);
    inner.h.resize(0);
  }
  return reduced;
}

Eigen::VectorXd recover_solution(const ReducedQP& reduced, const Eigen::VectorXd& reduced_x) {
  if (reduced_x.size() != reduced.basis.cols()) {
    throw DimensionError("recover_solution: expected " + std::to_string(reduced.basis.cols()) +
                         " reduced variables, got " + std::to_string(reduced_x.size()));
  }
  return reduced.particular_solution + reduced.basis * reduced_x;
}

EqualityFilter drop_redundant_equalities(const StandardQP& qp) {
  const Eigen::Index p = qp.variables();
  const Eigen::Index rows = qp.equalities();
  double scale = 0.0;
  for (Eigen::Index i = 0; i < rows; ++i) scale = std::max(scale, qp.A.row(i).norm());

  // Orthonormal basis of the kept rows, with the matching combination of b.
  std::vector<Eigen::VectorXd> basis;
  std::vector<double> basis_rhs;
  EqualityFilter filter;
  for (Eigen::Index i = 0; i < rows; ++i) {
    Eigen::VectorXd residual = qp.A.row(i).transpose();
    double rhs = qp.b(i);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < basis.size(); ++k) {
        const double c = basis[k].dot(residual);
        residual -= c * basis[k];
        rhs -= c * basis_rhs[k];
      }
    }
    const double norm = residual.norm();
    if (norm > kRankTolerance * scale && norm > 0.0) {
      basis.push_back(residual / norm);
      basis_rhs.push_back(rhs / norm);
      filter.kept_rows.push_back(i);
      continue;
    }
    if (std::abs(rhs) > 1e-9 * (1.0 + qp.b.cwiseAbs().maxCoeff())) {
      throw InfeasibleError(ConstraintBlock::equality, i, {},
                            "equality row " + std::to_string(i) +
                                " contradicts earlier equality rows");
    }
  }

  filter.qp = qp;
  const auto kept = static_cast<Eigen::Index>(filter.kept_rows.size());
  if (kept != rows) {
    filter.qp.A.resize(kept, p);
    filter.qp.b.resize(kept);
    for (Eigen::Index k = 0; k < kept; ++k) {
      filter.qp.A.row(k) = qp.A.row(filter.kept_rows[static_cast<std::size_t>(k)]);
      filter.qp.b(k) = qp.b(filter.kept_rows[static_cast<std::size_t>(k)]);
    }
  }
  return filter;
}

}  // namespace taskqp
