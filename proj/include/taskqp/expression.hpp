#pragma once

#include <Eigen/Core>

namespace taskqp {

class Expression;

/// A contiguous block of the decision vector.
struct Variable {
  Eigen::Index offset = 0;
  Eigen::Index size = 0;

  /// Identity expression over this variable's entries.
  Expression expr() const;
  /// Identity expression over entries [start, start + rows) of this variable.
  Expression expr(Eigen::Index start, Eigen::Index rows = 1) const;
};

/// Affine map of the decision vector: linear() * x + constant().
///
/// Storage is dense over the leading columns of the decision vector; columns
/// past cols() (variables added later) have zero coefficients.
class Expression {
 public:
  Expression() = default;
  Expression(Eigen::MatrixXd linear, Eigen::VectorXd constant);

  static Expression from_variable(const Variable& variable);
  static Expression constant(const Eigen::VectorXd& value);

  Eigen::Index rows() const { return linear_.rows(); }
  Eigen::Index cols() const { return linear_.cols(); }
  const Eigen::MatrixXd& linear() const { return linear_; }
  const Eigen::VectorXd& constant() const { return constant_; }

  /// Same expression with the linear block zero-padded to `cols` columns.
  Expression padded(Eigen::Index cols) const;
  Expression slice(Eigen::Index start, Eigen::Index count) const;
  Expression row(Eigen::Index index) const { return slice(index, 1); }

  /// Evaluates at x; x may be longer than cols().
  Eigen::VectorXd value(const Eigen::VectorXd& x) const;

  Expression& operator+=(const Expression& other);
  Expression& operator-=(const Expression& other);
  Expression& operator*=(double factor);
  Expression& operator+=(const Eigen::VectorXd& shift);
  Expression& operator-=(const Eigen::VectorXd& shift);
  /// Adds `shift` to every row.
  Expression& operator+=(double shift);
  Expression& operator-=(double shift);

 private:
  Eigen::MatrixXd linear_;
  Eigen::VectorXd constant_;
};

/// Vertical concatenation.
Expression stack(const Expression& top, const Expression& bottom);

Expression operator+(Expression lhs, const Expression& rhs);
Expression operator-(Expression lhs, const Expression& rhs);
Expression operator-(Expression e);
Expression operator*(Expression e, double factor);
Expression operator*(double factor, Expression e);
Expression operator+(Expression e, const Eigen::VectorXd& shift);
Expression operator-(Expression e, const Eigen::VectorXd& shift);
Expression operator+(Expression e, double shift);
Expression operator-(Expression e, double shift);
/// Left multiplication by a matrix: (M * linear, M * constant).
Expression operator*(const Eigen::MatrixXd& matrix, const Expression& e);

enum class Relation { equal_zero, nonpositive };

/// A relation already normalized to `expression = 0` or `expression <= 0`.
struct ConstraintExpr {
  Expression expression;
  Relation relation = Relation::nonpositive;
};

ConstraintExpr operator<=(const Expression& lhs, const Expression& rhs);
ConstraintExpr operator<=(const Expression& lhs, double rhs);
ConstraintExpr operator<=(const Expression& lhs, const Eigen::VectorXd& rhs);
ConstraintExpr operator>=(const Expression& lhs, const Expression& rhs);
ConstraintExpr operator>=(const Expression& lhs, double rhs);
ConstraintExpr operator>=(const Expression& lhs, const Eigen::VectorXd& rhs);
ConstraintExpr operator==(const Expression& lhs, const Expression& rhs);
ConstraintExpr operator==(const Expression& lhs, double rhs);
ConstraintExpr operator==(const Expression& lhs, const Eigen::VectorXd& rhs);

}  // namespace taskqp
