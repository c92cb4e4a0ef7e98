#pragma once

// Internal to the scenario runner: a JSON view that remembers where it is in
// the document, so every validation message names the offending entry.

#include "taskqp/model/model.hpp"
#include "taskqp/scenario/scenario.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Core>

#include <initializer_list>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace taskqp::scenario::detail {

using json = nlohmann::json;

class Node {
 public:
  Node(const json& value, std::string path) : value_(&value), path_(std::move(path)) {}

  const json& value() const { return *value_; }
  const std::string& path() const { return path_; }
  [[noreturn]] void fail(const std::string& what) const;

  bool has(const std::string& key) const;
  /// Required member. Fails unless this is an object holding `key`.
  Node at(const std::string& key) const;
  std::optional<Node> find(const std::string& key) const;
  Node at(std::size_t index) const;
  /// Array length; fails on non-arrays.
  std::size_t size() const;
  /// Fails unless this is an object whose keys all appear in `allowed`.
  void allow_keys(std::initializer_list<const char*> allowed) const;
  std::vector<std::string> keys() const;

  bool is_string() const { return value_->is_string(); }
  bool is_object() const { return value_->is_object(); }
  bool is_array() const { return value_->is_array(); }

  double number() const;
  double positive() const;
  double nonnegative() const;
  long long integer() const;
  bool boolean() const;
  std::string string() const;
  /// Array of numbers, of length `n` unless n < 0.
  Eigen::VectorXd vector(Eigen::Index n = -1) const;
  std::vector<std::string> strings() const;

  double number_or(const std::string& key, double fallback) const;
  long long integer_or(const std::string& key, long long fallback) const;
  bool boolean_or(const std::string& key, bool fallback) const;
  std::string string_or(const std::string& key, const std::string& fallback) const;

 private:
  const json* value_;
  std::string path_;
};

/// Parsed document plus whatever was loaded from it.
struct Document {
  std::string name;
  std::string kind;
  std::string base_dir;
  json root;
  std::shared_ptr<const RigidBodyModel> model;

  Node node() const { return Node(root, ""); }
  std::string resolve_path(const std::string& path) const;
};

/// Piecewise-linear signal over time; one point means constant.
struct Signal {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;

  Eigen::VectorXd at(double t) const;
  bool timed() const { return times.size() > 1; }
};

void validate_kinematics(Document& doc);
QpDimensions check_kinematics(const Document& doc, const RunOptions& options);
RunOutcome run_kinematics(const Document& doc, const RunOptions& options);

void validate_problem(const Document& doc);
QpDimensions check_problem(const Document& doc, const RunOptions& options);
RunOutcome run_problem(const Document& doc, const RunOptions& options);

/// Exit code of a solver failure, nullopt for anything else.
std::optional<ExitCode> failure_code(const std::exception& error);

}  // namespace taskqp::scenario::detail
