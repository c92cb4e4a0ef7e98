#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <utility>

namespace taskqp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class EmptyProblemError : public Error {
 public:
  using Error::Error;
};

/// Raised when an equality matrix does not have full row rank.
class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(Eigen::Index row, const std::string& what)
      : Error(what), row_(row) {}
  Eigen::Index row() const { return row_; }

 private:
  Eigen::Index row_;
};

enum class ConstraintBlock { equality, inequality };

/// The hard constraint set admits no solution. `row` indexes the offending
/// row in the equality or inequality block of the standard-form QP; `label`
/// carries the user-facing name when one is known.
class InfeasibleError : public Error {
 public:
  InfeasibleError(ConstraintBlock block, Eigen::Index row, std::string label,
                  const std::string& what)
      : Error(what), block_(block), row_(row), label_(std::move(label)) {}

  ConstraintBlock block() const { return block_; }
  Eigen::Index row() const { return row_; }
  const std::string& label() const { return label_; }

 private:
  ConstraintBlock block_;
  Eigen::Index row_;
  std::string label_;
};

class NonConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A frame, joint, link, task or constraint name that does not resolve.
class UnknownNameError : public Error {
 public:
  UnknownNameError(std::string name, const std::string& what)
      : Error(what), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

enum class ModelErrorKind {
  invalid,
  malformed_xml,
  dangling_reference,
  cycle,
  unsupported_joint,
  duplicate_name,
  missing_primitives,
  zero_mass,
};

/// Model construction or query failure. `element` is a path such as
/// "robot/joint[@name='knee']/limit" when the error comes from a document.
class ModelError : public Error {
 public:
  explicit ModelError(const std::string& what) : Error(what) {}
  ModelError(ModelErrorKind kind, std::string element, const std::string& what)
      : Error(element.empty() ? what : element + ": " + what), kind_(kind), element_(std::move(element)) {}

  ModelErrorKind kind() const { return kind_; }
  const std::string& element() const { return element_; }

 private:
  ModelErrorKind kind_ = ModelErrorKind::invalid;
  std::string element_;
};

}  // namespace taskqp
