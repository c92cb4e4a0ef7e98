#pragma once

// Batch scenarios: a JSON document describing either a kinematics run (model,
// tasks, constraints, time-varying targets, checks) or a standalone QP over an
// integrator chain. See README.md for the format.

#include "taskqp/errors.hpp"
#include "taskqp/kinematics/solver.hpp"
#include "taskqp/model/model.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace taskqp::scenario {

enum class ExitCode : int { pass = 0, checks_failed = 1, invalid = 2, infeasible = 3, nonconvergence = 4 };

/// Malformed or inconsistent scenario. `where` locates the offending entry,
/// e.g. "tasks[2].frame".
class ScenarioError : public Error {
 public:
  ScenarioError(std::string where, const std::string& what)
      : Error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

struct RunOptions {
  std::optional<int> max_steps;
  /// Inner-iteration tolerance on max |dq| (kinematics) or check tolerance
  /// override (problem).
  std::optional<double> tolerance;
  std::optional<std::uint64_t> seed;
  /// Writes the standard-form QP of every recorded solve here.
  std::optional<std::string> dump_qp_dir;
};

struct CheckOutcome {
  std::string kind;
  std::string subject;
  bool passed = false;
  /// Worst value seen and the bound it is compared with.
  double worst = 0.0;
  double limit = 0.0;
  /// Recorded step of the worst value, -1 when not step-based.
  int step = -1;
};

/// Delimiter-separated trajectory. NaN entries are written as empty fields.
struct Trajectory {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column index by header name; throws UnknownNameError.
  std::size_t column(const std::string& name) const;
};

struct RunOutcome {
  ExitCode code = ExitCode::pass;
  std::string message;
  Trajectory trajectory;
  std::vector<CheckOutcome> checks;
  QpDimensions dimensions;
  /// Total QP solves.
  int solves = 0;
  /// Kinematics runs: configuration of every recorded step.
  std::vector<Configuration> configurations;
  /// Named scalar results for the diagnostics report.
  std::vector<std::pair<std::string, double>> metrics;
};

class Scenario {
 public:
  /// Parses, validates and dry-builds the scenario. Relative paths in the
  /// document resolve against `base_dir`. Throws ScenarioError, ModelError,
  /// UnknownNameError, InvalidArgument.
  static Scenario parse(const std::string& text, const std::string& base_dir, const std::string& default_name = "scenario");
  static Scenario load_file(const std::string& path);

  Scenario(Scenario&&) noexcept;
  Scenario& operator=(Scenario&&) noexcept;
  ~Scenario();

  const std::string& name() const;
  /// "kinematics" or "problem".
  const std::string& kind() const;
  /// Loaded model of a kinematics scenario, nullptr for problems.
  const RigidBodyModel* model() const;

  /// Dimensions of the first QP (at the initial configuration) without
  /// solving. `reduced` counts variables left after dropping redundant
  /// equalities and QR elimination.
  QpDimensions check(const RunOptions& options = {}) const;

  /// Runs every step. Solver failures end the run early with code 3 or 4;
  /// the outcome still carries the records written so far.
  RunOutcome run(const RunOptions& options = {}) const;

 private:
  struct Impl;
  explicit Scenario(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

/// %.17g fields, comma separated, header first.
std::string format_csv(const Trajectory& trajectory);
/// Structured report of a run (no timings, byte-stable).
std::string format_diagnostics(const Scenario& scenario, const RunOutcome& outcome);

}  // namespace taskqp::scenario
