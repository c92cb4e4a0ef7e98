#include "taskqp/expression.hpp"

#include "taskqp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace taskqp {

namespace {

void require_same_rows(const Expression& lhs, const Expression& rhs, const char* op) {
  if (lhs.rows() != rhs.rows()) {
    throw DimensionError(std::string("expression ") + op + ": row mismatch (" +
                         std::to_string(lhs.rows()) + " vs " + std::to_string(rhs.rows()) + ")");
  }
}

}  // namespace

Expression Variable::expr() const { return Expression::from_variable(*this); }

Expression Variable::expr(Eigen::Index start, Eigen::Index rows) const {
  if (start < 0 || rows < 0 || start + rows > size) {
    throw DimensionError("variable slice [" + std::to_string(start) + ", " +
                         std::to_string(start + rows) + ") out of range for size " +
                         std::to_string(size));
  }
  return Expression::from_variable(*this).slice(start, rows);
}

Expression::Expression(Eigen::MatrixXd linear, Eigen::VectorXd constant)
    : linear_(std::move(linear)), constant_(std::move(constant)) {
  if (linear_.rows() != constant_.size()) {
    throw DimensionError("expression: linear part has " + std::to_string(linear_.rows()) +
                         " rows but constant has " + std::to_string(constant_.size()));
  }
}

Expression Expression::from_variable(const Variable& variable) {
  Eigen::MatrixXd linear = Eigen::MatrixXd::Zero(variable.size, variable.offset + variable.size);
  linear.rightCols(variable.size).setIdentity();
  return Expression(std::move(linear), Eigen::VectorXd::Zero(variable.size));
}

Expression Expression::constant(const Eigen::VectorXd& value) {
  return Expression(Eigen::MatrixXd::Zero(value.size(), 0), value);
}

Expression Expression::padded(Eigen::Index cols) const {
  if (cols <= linear_.cols()) return *this;
  Eigen::MatrixXd linear = Eigen::MatrixXd::Zero(rows(), cols);
  linear.leftCols(linear_.cols()) = linear_;
  return Expression(std::move(linear), constant_);
}

Expression Expression::slice(Eigen::Index start, Eigen::Index count) const {
  if (start < 0 || count < 0 || start + count > rows()) {
    throw DimensionError("expression slice [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of range for " +
                         std::to_string(rows()) + " rows");
  }
  return Expression(linear_.middleRows(start, count), constant_.segment(start, count));
}

Eigen::VectorXd Expression::value(const Eigen::VectorXd& x) const {
  if (x.size() < cols()) {
    throw DimensionError("expression spans " + std::to_string(cols()) +
                         " columns but x has " + std::to_string(x.size()) + " entries");
  }
  return linear_ * x.head(cols()) + constant_;
}

Expression& Expression::operator+=(const Expression& other) {
  require_same_rows(*this, other, "add");
  if (other.cols() > cols()) *this = padded(other.cols());
  linear_.leftCols(other.cols()) += other.linear_;
  constant_ += other.constant_;
  return *this;
}

Expression& Expression::operator-=(const Expression& other) {
  require_same_rows(*this, other, "subtract");
  if (other.cols() > cols()) *this = padded(other.cols());
  linear_.leftCols(other.cols()) -= other.linear_;
  constant_ -= other.constant_;
  return *this;
}

Expression& Expression::operator*=(double factor) {
  if (!std::isfinite(factor)) throw InvalidArgument("expression scale factor must be finite");
  linear_ *= factor;
  constant_ *= factor;
  return *this;
}

Expression& Expression::operator+=(const Eigen::VectorXd& shift) {
  if (shift.size() != rows()) {
    throw DimensionError("expression shift: expected " + std::to_string(rows()) +
                         " entries, got " + std::to_string(shift.size()));
  }
  constant_ += shift;
  return *this;
}

Expression& Expression::operator-=(const Eigen::VectorXd& shift) { return *this += Eigen::VectorXd(-shift); }

Expression& Expression::operator+=(double shift) {
  constant_.array() += shift;
  return *this;
}

Expression& Expression::operator-=(double shift) { return *this += -shift; }

Expression stack(const Expression& top, const Expression& bottom) {
  const Eigen::Index cols = std::max(top.cols(), bottom.cols());
  Eigen::MatrixXd linear = Eigen::MatrixXd::Zero(top.rows() + bottom.rows(), cols);
  linear.topLeftCorner(top.rows(), top.cols()) = top.linear();
  linear.bottomLeftCorner(bottom.rows(), bottom.cols()) = bottom.linear();
  Eigen::VectorXd constant(top.rows() + bottom.rows());
  constant << top.constant(), bottom.constant();
  return Expression(std::move(linear), std::move(constant));
}

Expression operator+(Expression lhs, const Expression& rhs) { return lhs += rhs; }
Expression operator-(Expression lhs, const Expression& rhs) { return lhs -= rhs; }
Expression operator-(Expression e) { return e *= -1.0; }
Expression operator*(Expression e, double factor) { return e *= factor; }
Expression operator*(double factor, Expression e) { return e *= factor; }
Expression operator+(Expression e, const Eigen::VectorXd& shift) { return e += shift; }
Expression operator-(Expression e, const Eigen::VectorXd& shift) { return e -= shift; }
Expression operator+(Expression e, double shift) { return e += shift; }
Expression operator-(Expression e, double shift) { return e -= shift; }

Expression operator*(const Eigen::MatrixXd& matrix, const Expression& e) {
  if (matrix.cols() != e.rows()) {
    throw DimensionError("matrix-expression product: " + std::to_string(matrix.cols()) +
                         " columns vs " + std::to_string(e.rows()) + " rows");
  }
  return Expression(matrix * e.linear(), matrix * e.constant());
}

ConstraintExpr operator<=(const Expression& lhs, const Expression& rhs) {
  return {lhs - rhs, Relation::nonpositive};
}
ConstraintExpr operator<=(const Expression& lhs, double rhs) { return {lhs - rhs, Relation::nonpositive}; }
ConstraintExpr operator<=(const Expression& lhs, const Eigen::VectorXd& rhs) {
  return {lhs - rhs, Relation::nonpositive};
}
ConstraintExpr operator>=(const Expression& lhs, const Expression& rhs) {
  return {rhs - lhs, Relation::nonpositive};
}
ConstraintExpr operator>=(const Expression& lhs, double rhs) { return {-(lhs - rhs), Relation::nonpositive}; }
ConstraintExpr operator>=(const Expression& lhs, const Eigen::VectorXd& rhs) {
  return {-(lhs - rhs), Relation::nonpositive};
}
ConstraintExpr operator==(const Expression& lhs, const Expression& rhs) {
  return {lhs - rhs, Relation::equal_zero};
}
ConstraintExpr operator==(const Expression& lhs, double rhs) { return {lhs - rhs, Relation::equal_zero}; }
ConstraintExpr operator==(const Expression& lhs, const Eigen::VectorXd& rhs) {
  return {lhs - rhs, Relation::equal_zero};
}

}  // namespace taskqp
