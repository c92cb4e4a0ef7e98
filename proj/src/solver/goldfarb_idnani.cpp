#include "taskqp/errors.hpp"
#include "taskqp/kernels/kernels.hpp"
#include "taskqp/solver.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

namespace taskqp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// A normal whose component outside the span of the working set is below this
// fraction of its (metric) norm is treated as dependent.
constexpr double kDependenceTolerance = 1e-10;

std::span<double> column(Eigen::MatrixXd& m, Eigen::Index j) {
  return {m.col(j).data(), static_cast<std::size_t>(m.rows())};
}

std::span<const double> view(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

std::span<double> view(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

/// Working-set factorization of the dual method: J = L^-T Q and R upper
/// triangular with N = Q [R; 0] for the active normals N.
class WorkingSet {
 public:
  explicit WorkingSet(Eigen::MatrixXd j_init)
      : J_(std::move(j_init)), R_(Eigen::MatrixXd::Zero(J_.rows(), J_.rows())), d_(J_.rows()) {}

  Eigen::Index size() const { return q_; }
  Eigen::Index dimension() const { return J_.rows(); }

  /// d = J' np, z = J2 d2 (primal step), r = R^-1 d1 (dual step).
  /// Returns the norm of d2 relative to d, i.e. how far np sits outside the
  /// span of the working set.
  double directions(const Eigen::VectorXd& np, Eigen::VectorXd& z, Eigen::VectorXd& r) {
    const Eigen::Index n = dimension();
    for (Eigen::Index j = 0; j < n; ++j) d_(j) = kernels::dot(column(J_, j), view(np));
    z.setZero(n);
    for (Eigen::Index j = q_; j < n; ++j) kernels::axpy(d_(j), column(J_, j), view(z));
    r.resize(q_);
    if (q_ > 0) {
      r = R_.topLeftCorner(q_, q_).triangularView<Eigen::Upper>().solve(d_.head(q_));
    }
    const double full = d_.norm();
    if (full == 0.0) return 0.0;
    return d_.tail(n - q_).norm() / full;
  }

  /// Appends the normal whose d was computed by the last directions() call.
  /// Returns false when the new column of R is numerically zero.
  bool add() {
    const Eigen::Index n = dimension();
    for (Eigen::Index j = n - 1; j > q_; --j) {
      double c = d_(j - 1);
      double s = d_(j);
      const double h = std::hypot(c, s);
      if (h == 0.0) continue;
      c /= h;
      s /= h;
      if (c < 0.0) {
        c = -c;
        s = -s;
        d_(j - 1) = -h;
      } else {
        d_(j - 1) = h;
      }
      d_(j) = 0.0;
      kernels::reflect(c, s, column(J_, j - 1), column(J_, j));
    }
    ++q_;
    R_.col(q_ - 1).head(q_) = d_.head(q_);
    if (std::abs(d_(q_ - 1)) <= std::numeric_limits<double>::epsilon() * r_norm_) {
      return false;
    }
    r_norm_ = std::max(r_norm_, std::abs(d_(q_ - 1)));
    return true;
  }

  /// Removes the working-set entry at position `pos` and restores the
  /// triangular structure of R with plane reflections.
  void remove(Eigen::Index pos) {
    for (Eigen::Index i = pos; i + 1 < q_; ++i) R_.col(i) = R_.col(i + 1);
    R_.col(q_ - 1).setZero();
    --q_;
    for (Eigen::Index j = pos; j < q_; ++j) {
      double c = R_(j, j);
      double s = R_(j + 1, j);
      const double h = std::hypot(c, s);
      if (h == 0.0) continue;
      c /= h;
      s /= h;
      R_(j + 1, j) = 0.0;
      if (c < 0.0) {
        R_(j, j) = -h;
        c = -c;
        s = -s;
      } else {
        R_(j, j) = h;
      }
      for (Eigen::Index k = j + 1; k < q_; ++k) {
        const double t1 = R_(j, k);
        const double t2 = R_(j + 1, k);
        R_(j, k) = c * t1 + s * t2;
        R_(j + 1, k) = s * t1 - c * t2;
      }
      kernels::reflect(c, s, column(J_, j), column(J_, j + 1));
    }
  }

 private:
  Eigen::MatrixXd J_;
  Eigen::MatrixXd R_;
  Eigen::VectorXd d_;
  Eigen::Index q_ = 0;
  double r_norm_ = 1.0;
};

Eigen::LLT<Eigen::MatrixXd> factor_hessian(const Eigen::MatrixXd& P) {
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() == Eigen::Success) return llt;
  const Eigen::Index n = P.rows();
  const double shift = 1e-10 * P.trace() / static_cast<double>(n);
  Eigen::MatrixXd shifted = P;
  shifted.diagonal().array() += std::max(shift, 0.0);
  llt.compute(shifted);
  if (llt.info() != Eigen::Success || !(shift > 0.0)) {
    throw InvalidArgument("QP Hessian is not positive definite");
  }
  return llt;
}

std::string row_label(ConstraintBlock block, Eigen::Index row) {
  return std::string(block == ConstraintBlock::equality ? "equality" : "inequality") + " row " +
         std::to_string(row);
}

}  // namespace

double kkt_residual(const StandardQP& qp, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& equality_multipliers,
                    const Eigen::VectorXd& inequality_multipliers) {
  Eigen::VectorXd stationarity = qp.P * x + qp.a;
  if (qp.equalities() > 0) stationarity += qp.A.transpose() * equality_multipliers;
  if (qp.inequalities() > 0) stationarity += qp.G.transpose() * inequality_multipliers;
  double residual = stationarity.size() > 0 ? stationarity.cwiseAbs().maxCoeff() : 0.0;
  if (qp.equalities() > 0) {
    residual = std::max(residual, (qp.A * x - qp.b).cwiseAbs().maxCoeff());
  }
  if (qp.inequalities() > 0) {
    const Eigen::VectorXd slack = qp.G * x - qp.h;
    residual = std::max(residual, slack.cwiseMax(0.0).maxCoeff());
    residual = std::max(residual, (-inequality_multipliers).cwiseMax(0.0).maxCoeff());
    residual = std::max(residual, inequality_multipliers.cwiseProduct(slack).cwiseAbs().maxCoeff());
  }
  return residual;
}

SolveResult solve_qp(const StandardQP& qp, std::optional<int> max_iterations) {
  qp.validate();
  const Eigen::Index n = qp.variables();
  const Eigen::Index me = qp.equalities();
  const Eigen::Index mi = qp.inequalities();
  const int iteration_cap =
      max_iterations.value_or(static_cast<int>(10 * (n + me + mi)));

  SolveResult result;
  if (n == 0) {
    for (Eigen::Index i = 0; i < me; ++i) {
      if (std::abs(qp.b(i)) > 1e-12) {
        throw InfeasibleError(ConstraintBlock::equality, i, {},
                              "QP infeasible: " + row_label(ConstraintBlock::equality, i));
      }
    }
    for (Eigen::Index i = 0; i < mi; ++i) {
      if (qp.h(i) < -1e-12) {
        throw InfeasibleError(ConstraintBlock::inequality, i, {},
                              "QP infeasible: " + row_label(ConstraintBlock::inequality, i));
      }
    }
    result.x = Eigen::VectorXd(0);
    result.lagrange_multipliers = Eigen::VectorXd::Zero(me);
    return result;
  }

  const Eigen::LLT<Eigen::MatrixXd> llt = factor_hessian(qp.P);
  // J = L^-T
  Eigen::MatrixXd j_init = Eigen::MatrixXd::Identity(n, n);
  llt.matrixU().solveInPlace(j_init);
  WorkingSet ws(j_init);

  Eigen::VectorXd x = -llt.solve(qp.a);

  // Working set entries: constraint id (equalities 0..me-1, inequalities
  // me..me+mi-1) and the dual variable u with Px + a = N u.
  std::vector<Eigen::Index> active;
  std::vector<double> u;
  active.reserve(static_cast<std::size_t>(me + mi));
  u.reserve(static_cast<std::size_t>(me + mi));
  std::vector<char> in_active(static_cast<std::size_t>(mi), 0);

  Eigen::VectorXd np(n);
  Eigen::VectorXd z(n);
  Eigen::VectorXd r;

  auto set_normal = [&](Eigen::Index id) {
    if (id < me) {
      np = qp.A.row(id).transpose();
    } else {
      np = -qp.G.row(id - me).transpose();
    }
  };
  // Signed slack n'x - beta: zero on equality, >= 0 when an inequality holds.
  auto slack_of = [&](Eigen::Index id) {
    if (id < me) return qp.A.row(id).dot(x) - qp.b(id);
    return qp.h(id - me) - qp.G.row(id - me).dot(x);
  };
  auto tolerance_of = [&](Eigen::Index id) {
    if (id < me) {
      return 1e-9 * (1.0 + std::abs(qp.b(id)) + qp.A.row(id).cwiseAbs().dot(x.cwiseAbs()));
    }
    const Eigen::Index k = id - me;
    return 1e-12 * (1.0 + std::abs(qp.h(k)) + qp.G.row(k).cwiseAbs().dot(x.cwiseAbs()));
  };

  int iterations = 0;
  auto count_iteration = [&]() {
    if (++iterations > iteration_cap) {
      throw NonConvergenceError("QP solver exceeded " + std::to_string(iteration_cap) +
                                " iterations");
    }
  };

  // Equalities enter first and stay.
  for (Eigen::Index i = 0; i < me; ++i) {
    set_normal(i);
    const double outside = ws.directions(np, z, r);
    const double residual = qp.b(i) - np.dot(x);
    if (outside <= kDependenceTolerance) {
      if (std::abs(residual) <= tolerance_of(i)) continue;
      throw InfeasibleError(ConstraintBlock::equality, i, {},
                            "QP infeasible: inconsistent " + row_label(ConstraintBlock::equality, i));
    }
    const double t = residual / z.dot(np);
    x += t * z;
    for (std::size_t k = 0; k < u.size(); ++k) u[k] -= t * r(static_cast<Eigen::Index>(k));
    if (!ws.add()) {
      throw InfeasibleError(ConstraintBlock::equality, i, {},
                            "QP degenerate: dependent " + row_label(ConstraintBlock::equality, i));
    }
    active.push_back(i);
    u.push_back(t);
  }
  const std::size_t equality_count = active.size();

  std::vector<char> excluded(static_cast<std::size_t>(mi), 0);
  while (true) {
    count_iteration();
    // Step 1: most violated inactive inequality (lowest index on ties).
    Eigen::Index chosen = -1;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < mi; ++k) {
      if (in_active[static_cast<std::size_t>(k)] || excluded[static_cast<std::size_t>(k)]) continue;
      const double s = slack_of(me + k);
      if (s < -tolerance_of(me + k) && s < worst) {
        worst = s;
        chosen = k;
      }
    }
    if (chosen < 0) break;

    const Eigen::Index id = me + chosen;
    const Eigen::VectorXd x_saved = x;
    const std::vector<Eigen::Index> active_saved = active;
    const std::vector<double> u_saved = u;
    double u_plus = 0.0;
    set_normal(id);

    bool added = false;
    while (!added) {
      // Step 2a: directions.
      const double outside = ws.directions(np, z, r);
      // Step 2b: dual step limit t1 over active inequalities.
      double t1 = kInf;
      std::size_t block = 0;
      for (std::size_t k = equality_count; k < active.size(); ++k) {
        const double rk = r(static_cast<Eigen::Index>(k));
        if (rk <= 0.0) continue;
        const double ratio = u[k] / rk;
        if (ratio < t1 || (ratio == t1 && active[k] < active[block])) {
          t1 = ratio;
          block = k;
        }
      }
      double t2 = kInf;
      if (outside > kDependenceTolerance) t2 = -slack_of(id) / z.dot(np);
      const double t = std::min(t1, t2);

      if (t == kInf) {
        throw InfeasibleError(ConstraintBlock::inequality, chosen, {},
                              "QP infeasible: " +
                                  row_label(ConstraintBlock::inequality, chosen) +
                                  " cannot be satisfied with the active constraints");
      }
      if (t2 == kInf) {
        // Dual step only, then drop the blocking constraint.
        for (std::size_t k = 0; k < active.size(); ++k) u[k] -= t * r(static_cast<Eigen::Index>(k));
        u_plus += t;
        in_active[static_cast<std::size_t>(active[block] - me)] = 0;
        ws.remove(static_cast<Eigen::Index>(block));
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(block));
        u.erase(u.begin() + static_cast<std::ptrdiff_t>(block));
        count_iteration();
        continue;
      }
      // Primal and dual step.
      x += t * z;
      for (std::size_t k = 0; k < active.size(); ++k) u[k] -= t * r(static_cast<Eigen::Index>(k));
      u_plus += t;
      if (t2 <= t1) {
        if (!ws.add()) {
          // Numerically dependent: discard this candidate and restart from the
          // state before it was selected, refactoring the saved working set.
          excluded[static_cast<std::size_t>(chosen)] = 1;
          x = x_saved;
          ws = WorkingSet(j_init);
          std::fill(in_active.begin(), in_active.end(), 0);
          for (Eigen::Index id_saved : active_saved) {
            set_normal(id_saved);
            ws.directions(np, z, r);
            ws.add();
            if (id_saved >= me) in_active[static_cast<std::size_t>(id_saved - me)] = 1;
          }
          active = active_saved;
          u = u_saved;
          break;
        }
        active.push_back(id);
        u.push_back(u_plus);
        in_active[static_cast<std::size_t>(chosen)] = 1;
        added = true;
      } else {
        in_active[static_cast<std::size_t>(active[block] - me)] = 0;
        ws.remove(static_cast<Eigen::Index>(block));
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(block));
        u.erase(u.begin() + static_cast<std::ptrdiff_t>(block));
        count_iteration();
      }
    }
    if (added) std::fill(excluded.begin(), excluded.end(), 0);
  }

  // Multipliers in the Px + a + A'lE + G'lI = 0 convention.
  Eigen::VectorXd lambda_eq = Eigen::VectorXd::Zero(me);
  Eigen::VectorXd lambda_in = Eigen::VectorXd::Zero(mi);
  for (std::size_t k = 0; k < active.size(); ++k) {
    if (active[k] < me) {
      lambda_eq(active[k]) = -u[k];
    } else {
      lambda_in(active[k] - me) = u[k];
    }
  }

  result.x = std::move(x);
  for (std::size_t k = equality_count; k < active.size(); ++k) result.active_set.push_back(active[k] - me);
  std::sort(result.active_set.begin(), result.active_set.end());
  result.lagrange_multipliers.resize(me + static_cast<Eigen::Index>(result.active_set.size()));
  result.lagrange_multipliers.head(me) = lambda_eq;
  for (std::size_t k = 0; k < result.active_set.size(); ++k) {
    result.lagrange_multipliers(me + static_cast<Eigen::Index>(k)) = lambda_in(result.active_set[k]);
  }
  result.iterations = iterations;
  result.objective = qp.objective(result.x);
  result.kkt_residual = kkt_residual(qp, result.x, lambda_eq, lambda_in);
  return result;
}

}  // namespace taskqp
