#include "taskqp/errors.hpp"
#include "taskqp/expression.hpp"
#include "taskqp/problem.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <limits>

namespace taskqp {
namespace {

TEST(Variable, OffsetsAreContiguous) {
  Problem problem;
  const Variable a = problem.add_variable(10);
  EXPECT_EQ(a.offset, 0);
  EXPECT_EQ(a.size, 10);

  Problem other;
  other.add_variable(3);
  const Variable b = other.add_variable(2);
  EXPECT_EQ(b.offset, 3);
  EXPECT_EQ(b.size, 2);
  EXPECT_EQ(other.dimension(), 5);
}

TEST(Variable, ZeroSizeRejected) {
  Problem problem;
  EXPECT_THROW(problem.add_variable(0), InvalidArgument);
  EXPECT_EQ(problem.dimension(), 0);
}

TEST(Expression, FromVariableIsSelector) {
  Problem problem;
  problem.add_variable(3);
  const Variable v = problem.add_variable(2);
  const Expression e = v.expr();
  ASSERT_EQ(e.rows(), 2);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(2, 5);
  expected(0, 3) = 1.0;
  expected(1, 4) = 1.0;
  EXPECT_EQ(e.padded(5).linear(), expected);
  EXPECT_EQ(e.constant(), Eigen::VectorXd::Zero(2));
}

TEST(Expression, ScaleThenSubtractIsIdentity) {
  testing::Rng rng(1);
  const Expression e(rng.matrix(3, 4), rng.vector(3));
  const Expression f = e * 2.0 - e;
  EXPECT_LE((f.linear() - e.linear()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE(testing::max_abs(f.constant() - e.constant()), 1e-15);
}

TEST(Expression, StackConcatenatesRows) {
  testing::Rng rng(2);
  const Expression e1(rng.matrix(2, 3), rng.vector(2));
  const Expression e2(rng.matrix(1, 5), rng.vector(1));
  const Expression s = stack(e1, e2);
  ASSERT_EQ(s.rows(), 3);
  const Eigen::VectorXd x = rng.vector(5);
  Eigen::VectorXd expected(3);
  expected << e1.value(x), e2.value(x);
  EXPECT_LE(testing::max_abs(s.value(x) - expected), 1e-15);
}

TEST(Expression, RowMismatchThrows) {
  const Expression e1(Eigen::MatrixXd::Ones(2, 2), Eigen::VectorXd::Zero(2));
  const Expression e2(Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Zero(3));
  EXPECT_THROW(e1 + e2, DimensionError);
  EXPECT_THROW(e1 - e2, DimensionError);
  EXPECT_THROW(Expression(Eigen::MatrixXd::Ones(2, 2), Eigen::VectorXd::Zero(3)), DimensionError);
}

TEST(Expression, NonFiniteScaleThrows) {
  const Expression e(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1));
  EXPECT_THROW(e * std::numeric_limits<double>::infinity(), InvalidArgument);
  EXPECT_THROW(e * std::numeric_limits<double>::quiet_NaN(), InvalidArgument);
}

TEST(Expression, AffineCompositionMatchesEvaluation) {
  testing::Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Expression e1(rng.matrix(3, 4), rng.vector(3));
    const Expression e2(rng.matrix(3, 6), rng.vector(3));
    const Eigen::MatrixXd M = rng.matrix(2, 3);
    const Eigen::VectorXd shift = rng.vector(3);
    const Eigen::VectorXd x = rng.vector(6);
    const Expression composed = M * (1.5 * e1 - e2 + shift) + 0.25;
    const Eigen::VectorXd expected =
        M * (1.5 * e1.value(x) - e2.value(x) + shift) + Eigen::VectorXd::Constant(2, 0.25);
    EXPECT_LE(testing::max_abs(composed.value(x) - expected), 1e-13);
    EXPECT_LE(testing::max_abs((-e1).value(x) + e1.value(x)), 1e-15);
  }
}

TEST(Expression, RelationsNormalize) {
  Problem problem;
  const Variable x = problem.add_variable(1);
  const ConstraintExpr le = x.expr() <= 2.0;
  EXPECT_EQ(le.relation, Relation::nonpositive);
  EXPECT_DOUBLE_EQ(le.expression.constant()(0), -2.0);
  EXPECT_DOUBLE_EQ(le.expression.linear()(0, 0), 1.0);

  const ConstraintExpr ge = x.expr() >= 2.0;  // 2 - x <= 0
  EXPECT_EQ(ge.relation, Relation::nonpositive);
  EXPECT_DOUBLE_EQ(ge.expression.constant()(0), 2.0);
  EXPECT_DOUBLE_EQ(ge.expression.linear()(0, 0), -1.0);

  const ConstraintExpr eq = x.expr() == x.expr() * 3.0;
  EXPECT_EQ(eq.relation, Relation::equal_zero);
  EXPECT_DOUBLE_EQ(eq.expression.linear()(0, 0), -2.0);
}

TEST(Expression, SliceOutOfRangeThrows) {
  Problem problem;
  const Variable v = problem.add_variable(3);
  EXPECT_THROW(v.expr(2, 2), DimensionError);
  EXPECT_NO_THROW(v.expr(2, 1));
  EXPECT_THROW(v.expr().row(3), DimensionError);
}

}  // namespace
}  // namespace taskqp
