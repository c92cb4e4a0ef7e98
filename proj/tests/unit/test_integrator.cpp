#include "taskqp/errors.hpp"
#include "taskqp/integrator.hpp"
#include "taskqp/problem.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <chrono>
#include <cmath>

namespace taskqp {
namespace {

using testing::Rng;

double factorial(int k) { return k <= 1 ? 1.0 : k * factorial(k - 1); }

// Fixed 50-term series after scaling by 2^s, then s squarings.
Eigen::MatrixXd series_oracle(const Eigen::MatrixXd& m) {
  const int s = 8;
  const Eigen::MatrixXd scaled = m / std::pow(2.0, s);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  Eigen::MatrixXd term = sum;
  for (int k = 1; k < 50; ++k) {
    term = (term * scaled / k).eval();
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = (sum * sum).eval();
  return sum;
}

// Classical RK4 on dy/dt = D y + E u with u held constant.
Eigen::VectorXd rk4(const LinearSystem& sys, Eigen::VectorXd y, const Eigen::VectorXd& u, double duration,
                    int substeps) {
  const double h = duration / substeps;
  auto f = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return sys.D * v + sys.E * u; };
  for (int i = 0; i < substeps; ++i) {
    const Eigen::VectorXd k1 = f(y);
    const Eigen::VectorXd k2 = f(y + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(y + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

Eigen::MatrixXd closed_form_chain_d(int order, double dt) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(order, order);
  for (int i = 0; i < order; ++i)
    for (int j = i; j < order; ++j) d(i, j) = std::pow(dt, j - i) / factorial(j - i);
  return d;
}

Eigen::VectorXd closed_form_chain_e(int order, double dt) {
  Eigen::VectorXd e(order);
  for (int i = 0; i < order; ++i) e(i) = std::pow(dt, order - i) / factorial(order - i);
  return e;
}

TEST(Discretize, TripleIntegratorClosedForm) {
  const Discretization d = discretize(integrator_chain(3), 0.1);
  Eigen::Matrix3d D;
  D << 1, 0.1, 0.005, 0, 1, 0.1, 0, 0, 1;
  const Eigen::Vector3d E(0.1 * 0.1 * 0.1 / 6.0, 0.005, 0.1);
  EXPECT_LE((d.D_d - D).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(testing::max_abs(d.E_d.col(0) - E), 1e-12);
}

TEST(Discretize, TripleIntegratorAnyStep) {
  for (double dt : {1e-4, 0.003, 0.1, 0.5, 1.0, 2.0, 7.5}) {
    const Discretization d = discretize(integrator_chain(3), dt);
    Eigen::Matrix3d D;
    D << 1, dt, dt * dt / 2, 0, 1, dt, 0, 0, 1;
    const Eigen::Vector3d E(dt * dt * dt / 6, dt * dt / 2, dt);
    EXPECT_LE((d.D_d - D).cwiseAbs().maxCoeff(), 1e-12) << dt;
    EXPECT_LE(testing::max_abs(d.E_d.col(0) - E), 1e-12) << dt;
  }
}

TEST(Discretize, PureIntegrator) {
  LinearSystem sys{Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2)};
  const Discretization d = discretize(sys, 2.0);
  EXPECT_EQ(d.D_d, Eigen::MatrixXd::Identity(2, 2));
  EXPECT_EQ(d.E_d, 2.0 * Eigen::MatrixXd::Identity(2, 2));
}

TEST(Discretize, LowerBlocksAreZeroAndIdentity) {
  Rng rng(40);
  const Eigen::MatrixXd D = rng.matrix(3, 3);
  const Eigen::MatrixXd E = rng.matrix(3, 2);
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(5, 5);
  block.topLeftCorner(3, 3) = D * 0.3;
  block.topRightCorner(3, 2) = E * 0.3;
  const Eigen::MatrixXd e = expm(block);
  EXPECT_LE(e.bottomLeftCorner(2, 3).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((e.bottomRightCorner(2, 2) - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Discretize, RandomStableMatchesSeriesOracle) {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd D = rng.matrix(3, 3);
    D.diagonal().array() -= 2.0;  // shifted to be stable
    const LinearSystem sys{D, rng.matrix(3, 1)};
    const double tau = rng.uniform(0.01, 1.0);
    const Discretization d = discretize(sys, tau);
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(4, 4);
    block.topLeftCorner(3, 3) = D * tau;
    block.topRightCorner(3, 1) = sys.E * tau;
    const Eigen::MatrixXd oracle = series_oracle(block);
    EXPECT_LE((d.D_d - oracle.topLeftCorner(3, 3)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((d.E_d - oracle.topRightCorner(3, 1)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Expm, MatchesEigenMatrixFunctions) {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd m = rng.matrix(5, 5, -3.0, 3.0);
    const Eigen::MatrixXd reference = m.exp();
    EXPECT_LE((expm(m) - reference).cwiseAbs().maxCoeff(), 1e-10 * (1.0 + reference.cwiseAbs().maxCoeff()));
  }
}

TEST(Discretize, NonPositiveDurationRejected) {
  EXPECT_THROW(discretize(integrator_chain(2), 0.0), InvalidArgument);
  EXPECT_THROW(discretize(integrator_chain(2), -0.1), InvalidArgument);
}

TEST(IntegratorProperty, ChainClosedForm) {
  for (int order = 1; order <= 6; ++order) {
    for (double dt : {0.01, 0.1, 0.7}) {
      Problem problem;
      const Variable v = problem.add_variable(5);
      const Integrator integ(v, Eigen::VectorXd::Zero(order), order, dt);
      EXPECT_LE((integ.discrete().D_d - closed_form_chain_d(order, dt)).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LE(testing::max_abs(integ.discrete().E_d.col(0) - closed_form_chain_e(order, dt)), 1e-12);
    }
  }
}

TEST(IntegratorProperty, Semigroup) {
  Rng rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd D = rng.matrix(3, 3);
    const LinearSystem sys{D, rng.matrix(3, 2)};
    const double a = rng.uniform(0.01, 0.5);
    const double b = rng.uniform(0.01, 0.5);
    const Discretization da = discretize(sys, a);
    const Discretization db = discretize(sys, b);
    const Discretization dab = discretize(sys, a + b);
    EXPECT_LE((da.D_d * db.D_d - dab.D_d).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((da.D_d * db.E_d + da.E_d - dab.E_d).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Integrator, ChainSetupAndValidation) {
  Problem problem;
  const Variable v = problem.add_variable(10);
  const Integrator integ(v, Eigen::VectorXd::Zero(3), 3, 0.1);
  EXPECT_EQ(integ.steps(), 10);
  for (Eigen::Index k = 0; k < 10; ++k) {
    EXPECT_LE((integ.power(k + 1) - integ.discrete().D_d * integ.power(k)).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_EQ(integ.power(0), Eigen::MatrixXd::Identity(3, 3));
  EXPECT_THROW(Integrator(v, Eigen::VectorXd::Zero(3), 3, 0.1, 9), DimensionError);
  EXPECT_THROW(Integrator(v, Eigen::VectorXd::Zero(2), 3, 0.1), DimensionError);
  EXPECT_THROW(Integrator(v, Eigen::VectorXd::Zero(3), 0, 0.1), InvalidArgument);
  const LinearSystem two_inputs{Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Ones(1, 3)};
  EXPECT_THROW(Integrator(v, Eigen::VectorXd::Zero(1), two_inputs, 0.1), DimensionError);
}

TEST(Integrator, OrderOne) {
  Problem problem;
  const Variable v = problem.add_variable(4);
  const Integrator integ(v, Eigen::VectorXd::Constant(1, 0.3), 1, 0.25);
  EXPECT_DOUBLE_EQ(integ.discrete().D_d(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(integ.discrete().E_d(0, 0), 0.25);
  // telescoping: y_2 = y0 + dt (x0 + x1)
  const Expression y2 = integ.expr(2, 0);
  EXPECT_DOUBLE_EQ(y2.constant()(0), 0.3);
  EXPECT_DOUBLE_EQ(y2.linear()(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(y2.linear()(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(y2.linear()(0, 2), 0.0);
}

TEST(Integrator, CustomSystemEqualsChain) {
  Problem problem;
  const Variable v = problem.add_variable(6);
  LinearSystem sys;
  sys.D = Eigen::Matrix2d{{0.0, 1.0}, {0.0, 0.0}};
  sys.E = Eigen::Vector2d(0.0, 1.0);
  const Integrator custom(v, Eigen::Vector2d(1.0, -1.0), sys, 0.2);
  const Integrator chain(v, Eigen::Vector2d(1.0, -1.0), 2, 0.2);
  EXPECT_EQ(custom.discrete().D_d, chain.discrete().D_d);
  EXPECT_EQ(custom.discrete().E_d, chain.discrete().E_d);
}

TEST(Integrator, StepZeroIsInitialState) {
  Problem problem;
  problem.add_variable(2);
  const Variable v = problem.add_variable(5);
  const Integrator integ(v, Eigen::Vector3d(0.4, -0.2, 0.1), 3, 0.1);
  const Expression e = integ.expr(0, 1);
  EXPECT_DOUBLE_EQ(e.constant()(0), -0.2);
  EXPECT_TRUE(e.linear().isZero(0.0));
  EXPECT_THROW(integ.expr(6, 0), InvalidArgument);
  EXPECT_THROW(integ.expr(0, 3), InvalidArgument);
  EXPECT_THROW(integ.expr_t(0.51, 0), InvalidArgument);
  EXPECT_THROW(integ.expr_t(-0.01, 0), InvalidArgument);
}

TEST(IntegratorProperty, ExpressionsMatchSimulation) {
  Rng rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const LinearSystem sys{rng.matrix(3, 3), rng.matrix(3, 2)};
    Problem problem;
    problem.add_variable(rng.integer(1, 3));
    const Variable v = problem.add_variable(16);
    const Eigen::VectorXd y0 = rng.vector(3);
    const Integrator integ(v, y0, sys, 0.05);
    const Eigen::VectorXd x = rng.vector(problem.dimension());
    Eigen::VectorXd y = y0;
    for (Eigen::Index k = 0; k <= 8; ++k) {
      EXPECT_LE(testing::max_abs(integ.state(k).value(x) - y), 1e-10 * (1.0 + testing::max_abs(y)));
      if (k < 8) y = integ.discrete().D_d * y + integ.discrete().E_d * x.segment(v.offset + 2 * k, 2);
    }
  }
}

TEST(Integrator, ConstantJerkMatchesRungeKutta) {
  Problem problem;
  const Variable v = problem.add_variable(10);
  const Eigen::Vector3d y0(0.1, -0.3, 0.2);
  const Integrator integ(v, y0, 3, 0.1);
  const double jerk = 1.7;
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(10, jerk);
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, jerk);
  for (Eigen::Index k = 0; k <= 10; ++k) {
    const Eigen::VectorXd oracle = rk4(integ.system(), y0, u, 0.1 * k, 200 * static_cast<int>(k) + 1);
    EXPECT_LE(testing::max_abs(integ.state(k).value(x) - oracle), 1e-9) << k;
  }
  const Eigen::VectorXd oracle = rk4(integ.system(), y0, u, 0.35, 700);
  EXPECT_NEAR(integ.expr_t(0.35, 0).value(x)(0), oracle(0), 1e-9);
  EXPECT_LE(testing::max_abs(integ.state_t(0.35).value(x) - oracle), 1e-9);
}

TEST(Integrator, VaryingInputMatchesRungeKuttaBetweenSteps) {
  Rng rng(45);
  Problem problem;
  const Variable v = problem.add_variable(6);
  const Eigen::Vector3d y0 = rng.vector(3);
  const Integrator integ(v, y0, 3, 0.2);
  const Eigen::VectorXd x = rng.vector(6);
  const double t = 0.73;
  Eigen::VectorXd y = y0;
  for (int k = 0; k < 3; ++k) y = rk4(integ.system(), y, x.segment(k, 1), 0.2, 400);
  y = rk4(integ.system(), y, x.segment(3, 1), t - 0.6, 400);
  EXPECT_LE(testing::max_abs(integ.state_t(t).value(x) - y), 1e-9);
}

TEST(Integrator, BoundaryTimesUseStepExpression) {
  Rng rng(46);
  Problem problem;
  const Variable v = problem.add_variable(10);
  const Integrator integ(v, rng.vector(3), 3, 0.1);
  for (Eigen::Index k = 0; k <= 10; ++k) {
    const double t = 0.1 * static_cast<double>(k);
    const Expression a = integ.state_t(t);
    const Expression b = integ.state(k);
    EXPECT_LE((a.padded(10).linear() - b.padded(10).linear()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(testing::max_abs(a.constant() - b.constant()), 1e-12);
  }
}

TEST(JerkWaypoints, ConstraintsHoldAndSolveIsFast) {
  const auto start = std::chrono::steady_clock::now();
  Problem problem;
  const Variable dddx = problem.add_variable(10);
  const Integrator integ(dddx, Eigen::VectorXd::Zero(3), 3, 0.1);
  problem.add_constraint(integ.expr(3, 0) <= -0.5);
  problem.add_constraint(integ.expr(7, 0) >= 1.5);
  problem.add_constraint(integ.expr(10, 0) == 1.0);
  problem.add_constraint(integ.expr(10, 1) == 0.0);
  problem.add_constraint(integ.expr(10, 2) == 0.0);
  const ProblemSolution s = problem.solve();
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LE(integ.expr(3, 0).value(s.x)(0), -0.5 + 1e-6);
  EXPECT_GE(integ.expr(7, 0).value(s.x)(0), 1.5 - 1e-6);
  EXPECT_NEAR(integ.expr(10, 0).value(s.x)(0), 1.0, 1e-6);
  EXPECT_NEAR(integ.expr(10, 1).value(s.x)(0), 0.0, 1e-6);
  EXPECT_NEAR(integ.expr(10, 2).value(s.x)(0), 0.0, 1e-6);
  EXPECT_EQ(s.solved_dimension, 7);
  EXPECT_LT(elapsed, 0.05);
}

}  // namespace
}  // namespace taskqp
