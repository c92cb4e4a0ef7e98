#include "taskqp/problem.hpp"

#include "taskqp/errors.hpp"
#include "taskqp/qr_reduction.hpp"
#include "taskqp/solver.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>
#include <utility>

namespace taskqp {

namespace {

void require_positive_weight(double weight, const std::string& what) {
  if (!(weight > 0.0) || !std::isfinite(weight)) {
    throw InvalidArgument(what + ": weight must be positive and finite, got " +
                          std::to_string(weight));
  }
}

/// P += w L'L and a += w L'c, accumulated into the lower triangle of P.
void accumulate(Eigen::MatrixXd& P, Eigen::VectorXd& a, const Eigen::MatrixXd& linear,
                const Eigen::VectorXd& constant, double weight) {
  P.selfadjointView<Eigen::Lower>().rankUpdate(linear.transpose(), weight);
  a.noalias() += weight * (linear.transpose() * constant);
}

std::string constraint_label(const Constraint& c, std::size_t index) {
  return c.name().empty() ? "constraint #" + std::to_string(index) : c.name();
}

}  // namespace

Priority::Kind parse_priority_kind(const std::string& text) {
  if (text == "hard") return Priority::Kind::hard;
  if (text == "soft") return Priority::Kind::soft;
  throw InvalidArgument("unknown priority '" + text + "' (expected 'hard' or 'soft')");
}

Constraint::Constraint(ConstraintExpr expr, std::string name)
    : expression_(std::move(expr.expression)), relation_(expr.relation), name_(std::move(name)) {}

void Constraint::configure(Priority::Kind kind, double weight) {
  if (kind == Priority::Kind::soft) require_positive_weight(weight, "soft constraint '" + name_ + "'");
  priority_ = {kind, kind == Priority::Kind::soft ? weight : 1.0};
}

void Constraint::configure(const std::string& name, Priority::Kind kind, double weight) {
  name_ = name;
  configure(kind, weight);
}

Variable Problem::add_variable(Eigen::Index size) {
  if (size < 1) throw InvalidArgument("variable size must be >= 1, got " + std::to_string(size));
  Variable v{dimension_, size};
  dimension_ += size;
  return v;
}

ObjectiveTerm& Problem::add_objective(Expression expr, double weight, std::string name) {
  require_positive_weight(weight, "objective");
  if (expr.cols() > dimension_) {
    throw DimensionError("objective spans " + std::to_string(expr.cols()) +
                         " columns but the problem has " + std::to_string(dimension_));
  }
  objectives_.push_back({std::move(expr), weight, std::move(name)});
  return objectives_.back();
}

Constraint& Problem::add_constraint(ConstraintExpr expr, std::string name) {
  if (expr.expression.cols() > dimension_) {
    throw DimensionError("constraint spans " + std::to_string(expr.expression.cols()) +
                         " columns but the problem has " + std::to_string(dimension_));
  }
  constraints_.emplace_back(std::move(expr), std::move(name));
  return constraints_.back();
}

CompiledProblem Problem::compile() const {
  if (dimension_ == 0) throw EmptyProblemError("problem has no decision variables");

  CompiledProblem out;
  out.user_dimension = dimension_;
  Eigen::Index total = dimension_;
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const Constraint& c = constraints_[i];
    if (c.priority().is_soft() && c.relation() == Relation::nonpositive) {
      out.slacks.push_back({i, Variable{total, c.expression().rows()}});
      total += c.expression().rows();
    }
  }

  StandardQP& qp = out.qp;
  qp.P = Eigen::MatrixXd::Zero(total, total);
  qp.a = Eigen::VectorXd::Zero(total);

  for (const ObjectiveTerm& term : objectives_) {
    const Expression e = term.expression.padded(total);
    accumulate(qp.P, qp.a, e.linear(), e.constant(), term.weight);
  }

  Eigen::Index eq_rows = 0;
  Eigen::Index in_rows = 0;
  for (const Constraint& c : constraints_) {
    const Eigen::Index rows = c.expression().rows();
    if (c.priority().is_soft()) {
      if (c.relation() == Relation::nonpositive) in_rows += rows;
    } else if (c.relation() == Relation::equal_zero) {
      eq_rows += rows;
    } else {
      in_rows += rows;
    }
  }
  qp.A = Eigen::MatrixXd::Zero(eq_rows, total);
  qp.b = Eigen::VectorXd::Zero(eq_rows);
  qp.G = Eigen::MatrixXd::Zero(in_rows, total);
  qp.h = Eigen::VectorXd::Zero(in_rows);

  Eigen::Index eq = 0;
  Eigen::Index in = 0;
  std::size_t slack_index = 0;
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const Constraint& c = constraints_[i];
    const Expression e = c.expression().padded(total);
    const Eigen::Index rows = e.rows();
    if (!c.priority().is_soft()) {
      if (c.relation() == Relation::equal_zero) {
        qp.A.middleRows(eq, rows) = e.linear();
        qp.b.segment(eq, rows) = -e.constant();
        for (Eigen::Index r = 0; r < rows; ++r) out.equality_origin.push_back({i, r, false});
        eq += rows;
      } else {
        qp.G.middleRows(in, rows) = e.linear();
        qp.h.segment(in, rows) = -e.constant();
        for (Eigen::Index r = 0; r < rows; ++r) out.inequality_origin.push_back({i, r, false});
        in += rows;
      }
      continue;
    }
    const double w = c.priority().weight;
    if (c.relation() == Relation::equal_zero) {
      accumulate(qp.P, qp.a, e.linear(), e.constant(), w);
      continue;
    }
    // w ||expr + s||^2 with s >= 0
    const Variable& s = out.slacks[slack_index++].variable;
    Eigen::MatrixXd linear = e.linear();
    linear.block(0, s.offset, rows, rows).diagonal().array() += 1.0;
    accumulate(qp.P, qp.a, linear, e.constant(), w);
    qp.G.block(in, s.offset, rows, rows).diagonal().setConstant(-1.0);
    for (Eigen::Index r = 0; r < rows; ++r) out.inequality_origin.push_back({i, r, true});
    in += rows;
  }

  qp.P.diagonal().array() += settings_.regularization;
  qp.P.triangularView<Eigen::StrictlyUpper>() = qp.P.transpose();
  return out;
}

double Problem::cost(const Eigen::VectorXd& x, const CompiledProblem& compiled,
                     const Eigen::VectorXd& slack) const {
  double total = 0.0;
  for (const ObjectiveTerm& term : objectives_) {
    total += term.weight * term.expression.value(x).squaredNorm();
  }
  Eigen::Index slack_offset = 0;
  for (const SlackBlock& block : compiled.slacks) {
    const Constraint& c = constraints_[block.constraint];
    const Eigen::VectorXd residual =
        c.expression().value(x) + slack.segment(slack_offset, block.variable.size);
    total += c.priority().weight * residual.squaredNorm();
    slack_offset += block.variable.size;
  }
  for (const Constraint& c : constraints_) {
    if (c.priority().is_soft() && c.relation() == Relation::equal_zero) {
      total += c.priority().weight * c.expression().value(x).squaredNorm();
    }
  }
  return total;
}

ProblemSolution Problem::solve() const {
  const CompiledProblem compiled = compile();

  auto relabel = [&](const InfeasibleError& error, Eigen::Index original_row) -> InfeasibleError {
    const std::vector<RowOrigin>& origins = error.block() == ConstraintBlock::equality
                                                ? compiled.equality_origin
                                                : compiled.inequality_origin;
    if (original_row < 0 || original_row >= static_cast<Eigen::Index>(origins.size())) {
      return error;
    }
    const RowOrigin& origin = origins[static_cast<std::size_t>(original_row)];
    const std::string label = constraint_label(constraints_[origin.constraint], origin.constraint);
    return InfeasibleError(error.block(), original_row, label,
                           "infeasible hard constraint '" + label + "' (row " +
                               std::to_string(origin.row) + "): " + error.what());
  };

  EqualityFilter filter;
  try {
    filter = drop_redundant_equalities(compiled.qp);
  } catch (const InfeasibleError& error) {
    throw relabel(error, error.row());
  }
  const StandardQP& qp = filter.qp;

  SolveResult result;
  Eigen::VectorXd x_full;
  ProblemSolution solution;
  try {
    if (settings_.use_qr_reduction && qp.equalities() > 0) {
      const ReducedQP reduced = reduce_qr(qp);
      result = solve_qp(reduced.inner, settings_.max_iterations);
      x_full = recover_solution(reduced, result.x);
      solution.solved_dimension = reduced.inner.variables();
    } else {
      result = solve_qp(qp, settings_.max_iterations);
      x_full = result.x;
      solution.solved_dimension = qp.variables();
    }
  } catch (const InfeasibleError& error) {
    Eigen::Index row = error.row();
    if (error.block() == ConstraintBlock::equality) {
      row = filter.kept_rows[static_cast<std::size_t>(row)];
    }
    throw relabel(error, row);
  }

  const Eigen::Index n_user = compiled.user_dimension;
  solution.x = x_full.head(n_user);
  solution.slack = x_full.tail(x_full.size() - n_user);
  solution.iterations = result.iterations;
  solution.kkt_residual = result.kkt_residual;
  solution.cost = cost(solution.x, compiled, solution.slack);

  solution.constraints.resize(constraints_.size());
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const Constraint& c = constraints_[i];
    ConstraintReport& report = solution.constraints[i];
    report.name = constraint_label(c, i);
    const Eigen::VectorXd value = c.expression().value(solution.x);
    if (value.size() > 0) {
      report.violation = c.relation() == Relation::equal_zero ? value.cwiseAbs().maxCoeff()
                                                              : value.maxCoeff();
    }
  }
  for (Eigen::Index row : result.active_set) {
    const RowOrigin& origin = compiled.inequality_origin[static_cast<std::size_t>(row)];
    if (!origin.slack_bound) solution.constraints[origin.constraint].active_rows.push_back(origin.row);
  }
  Eigen::Index slack_offset = 0;
  for (const SlackBlock& block : compiled.slacks) {
    solution.constraints[block.constraint].slack =
        solution.slack.segment(slack_offset, block.variable.size);
    slack_offset += block.variable.size;
  }
  return solution;
}

}  // namespace taskqp
