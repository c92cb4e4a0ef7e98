#include "taskqp/integrator.hpp"

#include "taskqp/errors.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace taskqp {

namespace {

bool strictly_upper_triangular(const Eigen::MatrixXd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = j; i < m.rows(); ++i)
      if (m(i, j) != 0.0) return false;
  return true;
}

// Taylor series, summed until the terms stop contributing.
Eigen::MatrixXd taylor(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= 40; ++k) {
    term = term * m / static_cast<double>(k);
    if (term.isZero(0.0)) break;
    sum += term;
    if (term.cwiseAbs().maxCoeff() <= 1e-18 * sum.cwiseAbs().maxCoeff()) break;
  }
  return sum;
}

}  // namespace

void LinearSystem::validate() const {
  if (D.rows() != D.cols()) throw DimensionError("linear system: D must be square");
  if (E.rows() != D.rows()) {
    throw DimensionError("linear system: E has " + std::to_string(E.rows()) + " rows, D has " +
                         std::to_string(D.rows()));
  }
  if (D.rows() == 0 || E.cols() == 0) throw DimensionError("linear system: empty state or input");
  if (!D.allFinite() || !E.allFinite()) throw InvalidArgument("linear system: non-finite entries");
}

LinearSystem integrator_chain(int order) {
  if (order < 1) throw InvalidArgument("integrator chain order must be >= 1, got " + std::to_string(order));
  LinearSystem sys;
  sys.D = Eigen::MatrixXd::Zero(order, order);
  sys.D.diagonal(1).setOnes();
  sys.E = Eigen::MatrixXd::Zero(order, 1);
  sys.E(order - 1, 0) = 1.0;
  return sys;
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DimensionError("expm: matrix must be square");
  if (m.size() == 0) return m;
  if (!m.allFinite()) throw InvalidArgument("expm: non-finite entries");
  if (strictly_upper_triangular(m)) return taylor(m);

  const double norm = m.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  Eigen::MatrixXd result = taylor(m / std::ldexp(1.0, squarings));
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

Discretization discretize(const LinearSystem& system, double tau) {
  system.validate();
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw InvalidArgument("discretize: duration must be positive, got " + std::to_string(tau));
  }
  const Eigen::Index m = system.states();
  const Eigen::Index p = system.inputs();
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(m + p, m + p);
  block.topLeftCorner(m, m) = system.D * tau;
  block.topRightCorner(m, p) = system.E * tau;
  const Eigen::MatrixXd e = expm(block);
  return {e.topLeftCorner(m, m), e.topRightCorner(m, p)};
}

Integrator::Integrator(const Variable& input, Eigen::VectorXd y0, LinearSystem system, double dt,
                       Eigen::Index steps)
    : input_(input), y0_(std::move(y0)), system_(std::move(system)), dt_(dt) {
  system_.validate();
  const Eigen::Index m = system_.states();
  const Eigen::Index p = system_.inputs();
  if (y0_.size() != m) {
    throw DimensionError("integrator: initial state has " + std::to_string(y0_.size()) +
                         " entries, system has " + std::to_string(m) + " states");
  }
  if (steps < 0) {
    if (input_.size % p != 0) {
      throw DimensionError("integrator: variable size " + std::to_string(input_.size) +
                           " is not a multiple of the input dimension " + std::to_string(p));
    }
    steps = input_.size / p;
  }
  if (steps < 1 || input_.size != steps * p) {
    throw DimensionError("integrator: variable size " + std::to_string(input_.size) + " != N * p = " +
                         std::to_string(steps) + " * " + std::to_string(p));
  }
  steps_ = steps;
  discrete_ = discretize(system_, dt_);
  powers_.reserve(static_cast<std::size_t>(steps_ + 1));
  powers_.push_back(Eigen::MatrixXd::Identity(m, m));
  for (Eigen::Index k = 1; k <= steps_; ++k) powers_.push_back(discrete_.D_d * powers_.back());
}

Integrator::Integrator(const Variable& input, Eigen::VectorXd y0, int order, double dt, Eigen::Index steps)
    : Integrator(input, std::move(y0), integrator_chain(order), dt, steps) {}

const Eigen::MatrixXd& Integrator::power(Eigen::Index k) const {
  if (k < 0 || k > steps_) {
    throw InvalidArgument("integrator: power " + std::to_string(k) + " outside [0, " +
                          std::to_string(steps_) + "]");
  }
  return powers_[static_cast<std::size_t>(k)];
}

void Integrator::check_row(Eigen::Index row) const {
  if (row < 0 || row >= system_.states()) {
    throw InvalidArgument("integrator: state row " + std::to_string(row) + " outside [0, " +
                          std::to_string(system_.states()) + ")");
  }
}

Expression Integrator::state(Eigen::Index step) const {
  if (step < 0 || step > steps_) {
    throw InvalidArgument("integrator: step " + std::to_string(step) + " outside [0, " +
                          std::to_string(steps_) + "]");
  }
  const Eigen::Index m = system_.states();
  const Eigen::Index p = system_.inputs();
  Eigen::MatrixXd linear = Eigen::MatrixXd::Zero(m, input_.offset + input_.size);
  // y_k = D^k y0 + sum_{i<k} D^{k-1-i} E_d x_i
  for (Eigen::Index i = 0; i < step; ++i) {
    linear.middleCols(input_.offset + i * p, p) = powers_[static_cast<std::size_t>(step - 1 - i)] * discrete_.E_d;
  }
  return Expression(std::move(linear), powers_[static_cast<std::size_t>(step)] * y0_);
}

Expression Integrator::expr(Eigen::Index step, Eigen::Index row) const {
  check_row(row);
  return state(step).row(row);
}

Expression Integrator::input(Eigen::Index step) const {
  if (step < 0 || step >= steps_) {
    throw InvalidArgument("integrator: input " + std::to_string(step) + " outside [0, " +
                          std::to_string(steps_) + ")");
  }
  const Eigen::Index p = system_.inputs();
  return Variable{input_.offset + step * p, p}.expr();
}

Expression Integrator::state_t(double t) const {
  const double horizon = static_cast<double>(steps_) * dt_;
  const double position = t / dt_;
  const double nearest = std::round(position);
  if (!std::isfinite(t) || position < -1e-9 || position > static_cast<double>(steps_) + 1e-9) {
    throw InvalidArgument("integrator: time " + std::to_string(t) + " outside [0, " +
                          std::to_string(horizon) + "]");
  }
  if (std::abs(position - nearest) < 1e-9) return state(static_cast<Eigen::Index>(nearest));

  const auto k = static_cast<Eigen::Index>(std::floor(position));
  const double tau = t - static_cast<double>(k) * dt_;
  const Discretization partial = discretize(system_, tau);
  Expression out = partial.D_d * state(k);
  out += partial.E_d * input(k);
  return out;
}

Expression Integrator::expr_t(double t, Eigen::Index row) const {
  check_row(row);
  return state_t(t).row(row);
}

}  // namespace taskqp
