#pragma once

#include "taskqp/expression.hpp"
#include "taskqp/standard_qp.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace taskqp {

struct Priority {
  enum class Kind { hard, soft };
  Kind kind = Kind::hard;
  double weight = 1.0;

  static Priority hard() { return {Kind::hard, 1.0}; }
  static Priority soft(double weight) { return {Kind::soft, weight}; }
  bool is_soft() const { return kind == Kind::soft; }
};

/// Parses "hard" / "soft"; throws InvalidArgument otherwise.
Priority::Kind parse_priority_kind(const std::string& text);

struct ObjectiveTerm {
  Expression expression;
  double weight = 1.0;
  std::string name;
};

/// A constraint registered in a Problem. Hard by default.
class Constraint {
 public:
  Constraint(ConstraintExpr expr, std::string name);

  /// Soft priority requires weight > 0.
  void configure(Priority::Kind kind, double weight = 1.0);
  void configure(const std::string& name, Priority::Kind kind, double weight = 1.0);

  const Expression& expression() const { return expression_; }
  Relation relation() const { return relation_; }
  const Priority& priority() const { return priority_; }
  const std::string& name() const { return name_; }

 private:
  Expression expression_;
  Relation relation_;
  Priority priority_;
  std::string name_;
};

struct ProblemSettings {
  /// Ridge added to the whole Hessian, slack columns included.
  double regularization = 1e-8;
  bool use_qr_reduction = true;
  std::optional<int> max_iterations;
};

/// Which user constraint produced a row of the compiled QP.
struct RowOrigin {
  std::size_t constraint = 0;
  Eigen::Index row = 0;
  /// Row is the implicit s >= 0 bound of a soft inequality's slack.
  bool slack_bound = false;
};

struct SlackBlock {
  std::size_t constraint = 0;
  Variable variable;
};

struct CompiledProblem {
  StandardQP qp;
  Eigen::Index user_dimension = 0;
  std::vector<SlackBlock> slacks;
  std::vector<RowOrigin> equality_origin;
  std::vector<RowOrigin> inequality_origin;
};

struct ConstraintReport {
  std::string name;
  /// Hard inequality rows of this constraint in the active set.
  std::vector<Eigen::Index> active_rows;
  /// Slack values (soft inequalities only).
  Eigen::VectorXd slack;
  /// max(expression) for inequalities, max|expression| for equalities,
  /// evaluated at the solution without slack.
  double violation = 0.0;
};

struct ProblemSolution {
  /// Decision vector without slack entries.
  Eigen::VectorXd x;
  /// Slack entries, in SlackBlock order.
  Eigen::VectorXd slack;
  std::vector<ConstraintReport> constraints;
  /// Sum of weighted squared residuals of objectives and soft constraints
  /// (constants included, ridge excluded).
  double cost = 0.0;
  int iterations = 0;
  double kkt_residual = 0.0;
  /// Number of variables the solver actually saw (after QR reduction).
  Eigen::Index solved_dimension = 0;
};

/// Declarative QP: variables, weighted least-squares objectives and
/// hard/soft constraints, compiled to StandardQP.
class Problem {
 public:
  /// Throws InvalidArgument when size < 1.
  Variable add_variable(Eigen::Index size);

  /// Adds weight * ||expr||^2. Throws InvalidArgument when weight <= 0.
  ObjectiveTerm& add_objective(Expression expr, double weight = 1.0, std::string name = {});

  Constraint& add_constraint(ConstraintExpr expr, std::string name = {});

  Eigen::Index dimension() const { return dimension_; }
  const std::deque<ObjectiveTerm>& objectives() const { return objectives_; }
  const std::deque<Constraint>& constraints() const { return constraints_; }

  ProblemSettings& settings() { return settings_; }
  const ProblemSettings& settings() const { return settings_; }

  /// Throws EmptyProblemError when there are no variables.
  CompiledProblem compile() const;

  /// Compiles and solves. Throws InfeasibleError (labelled with the
  /// constraint name) or NonConvergenceError.
  ProblemSolution solve() const;

  /// Full least-squares cost at x (user dimension) with the given slack.
  double cost(const Eigen::VectorXd& x, const CompiledProblem& compiled,
              const Eigen::VectorXd& slack) const;

 private:
  Eigen::Index dimension_ = 0;
  std::deque<ObjectiveTerm> objectives_;
  std::deque<Constraint> constraints_;
  ProblemSettings settings_;
};

}  // namespace taskqp
