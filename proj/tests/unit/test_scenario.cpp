#include "taskqp/errors.hpp"
#include "taskqp/model/algorithms.hpp"
#include "taskqp/scenario/scenario.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>

namespace taskqp::scenario {
namespace {

const std::string models_dir = TASKQP_MODELS_DIR;
const std::string scenarios_dir = TASKQP_SCENARIOS_DIR;

Scenario bundled(const std::string& name) { return Scenario::load_file(scenarios_dir + "/" + name + ".scenario"); }

// Small arm scenario; `tasks` and `extra` are spliced into the document.
std::string arm_text(const std::string& tasks, const std::string& extra = "",
                     const std::string& run = R"({"dt": 0.01, "steps": 5})") {
  return R"({"name": "arm", "model": "planar_arm.urdf", "settings": {"mask_floating_base": true},
             "tasks": [)" +
         tasks + "], \"run\": " + run + extra + "}";
}

std::string error_of(const std::string& text) {
  try {
    Scenario::parse(text, models_dir);
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

TEST(Parse, EmptyScenarioIsInvalid) {
  EXPECT_THROW(Scenario::parse("", models_dir), ScenarioError);
  EXPECT_THROW(Scenario::parse("  \n", models_dir), ScenarioError);
  EXPECT_THROW(Scenario::parse("{}", models_dir), ScenarioError);
  EXPECT_NE(error_of("{}").find("empty scenario"), std::string::npos);
}

TEST(Parse, MalformedJsonIsInvalid) {
  EXPECT_NE(error_of("{\"name\": ").find("malformed JSON"), std::string::npos);
  EXPECT_THROW(Scenario::parse("[1, 2]", models_dir), ScenarioError);
}

TEST(Parse, MissingFrameIsNamed) {
  const std::string message =
      error_of(arm_text(R"({"kind": "position", "frame": "gripper", "target": [0.1, 0, 0.2]})"));
  EXPECT_NE(message.find("gripper"), std::string::npos) << message;
  EXPECT_NE(message.find("tasks[0].frame"), std::string::npos) << message;
}

TEST(Parse, UnknownKeyIsRejected) {
  const std::string message =
      error_of(arm_text(R"({"kind": "position", "frame": "effector", "target": "current", "wieght": 2})"));
  EXPECT_NE(message.find("wieght"), std::string::npos) << message;
}

TEST(Parse, HardTaskWithWeightIsRejected) {
  EXPECT_THROW(Scenario::parse(arm_text(R"({"kind": "position", "frame": "effector", "target": "current",
                                            "priority": "hard", "weight": 3})"),
                               models_dir),
               ScenarioError);
}

TEST(Parse, ProblemWithoutObjectivesIsRejected) {
  const std::string message = error_of(R"({"kind": "problem", "integrator": {"order": 2, "dt": 0.1, "steps": 4}})");
  EXPECT_NE(message.find("no objectives or constraints"), std::string::npos) << message;
}

TEST(Check, JerkWaypointDimensions) {
  const QpDimensions d = bundled("jerk_waypoints").check();
  EXPECT_EQ(d.variables, 10);
  EXPECT_EQ(d.equalities, 3);
  EXPECT_EQ(d.inequalities, 2);
  EXPECT_EQ(d.reduced, 7);
}

TEST(Check, QuadrupedHasNineHardEqualityRows) {
  const QpDimensions d = bundled("quadruped").check();
  EXPECT_EQ(d.equalities, 9);
  EXPECT_EQ(d.variables, 18);
}

TEST(Run, JerkWaypointsSatisfyConstraints) {
  const RunOutcome out = bundled("jerk_waypoints").run();
  ASSERT_EQ(out.code, ExitCode::pass) << out.message;
  const Trajectory& t = out.trajectory;
  const auto& first = t.rows.front();
  const auto& last = t.rows.back();
  EXPECT_NEAR(last[t.column("pos")], 1.0, 1e-9);
  EXPECT_NEAR(last[t.column("vel")], 0.0, 1e-9);
  EXPECT_EQ(first[t.column("pos")], 0.0);
  EXPECT_TRUE(std::isnan(last[t.column("jerk")]));
  EXPECT_LE(t.rows[3][t.column("pos")], -0.5 + 1e-9);
  EXPECT_GE(t.rows[7][t.column("pos")], 1.5 - 1e-9);
}

TEST(Run, OutputIsDeterministic) {
  const Scenario s = bundled("quadruped");
  RunOptions options;
  options.max_steps = 40;
  const RunOutcome a = s.run(options);
  const RunOutcome b = s.run(options);
  EXPECT_EQ(format_csv(a.trajectory), format_csv(b.trajectory));
  EXPECT_EQ(format_diagnostics(s, a), format_diagnostics(s, b));
  EXPECT_EQ(a.trajectory.rows.size(), 41u);
}

// Logged frame and CoM columns must agree with forward kinematics of the
// logged configuration.
TEST(Run, LoggedQuantitiesMatchForwardKinematics) {
  const Scenario s = bundled("quadruped");
  RunOptions options;
  options.max_steps = 30;
  const RunOutcome out = s.run(options);
  ASSERT_EQ(out.code, ExitCode::pass) << out.message;
  const Trajectory& t = out.trajectory;
  ASSERT_EQ(out.configurations.size(), t.rows.size());
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const Configuration& q = out.configurations[k];
    const auto& row = t.rows[k];
    for (const std::string frame : {"leg1", "leg4", "body"}) {
      const Eigen::Vector3d p = frame_placement(*s.model(), q, frame).translation;
      EXPECT_NEAR(row[t.column(frame + ".x")], p.x(), 1e-12);
      EXPECT_NEAR(row[t.column(frame + ".y")], p.y(), 1e-12);
      EXPECT_NEAR(row[t.column(frame + ".z")], p.z(), 1e-12);
    }
    const Eigen::Vector3d c = com(*s.model(), q);
    EXPECT_NEAR(row[t.column("com.x")], c.x(), 1e-12);
    EXPECT_NEAR(row[t.column("com.y")], c.y(), 1e-12);
  }
}

TEST(Run, StanceFeetStayPut) {
  const RunOutcome out = bundled("quadruped").run();
  ASSERT_EQ(out.code, ExitCode::pass) << out.message;
  const Trajectory& t = out.trajectory;
  for (std::size_t k = 1; k < t.rows.size(); ++k) {
    for (const std::string c : {"leg1.x", "leg1.y", "leg1.z", "leg2.z", "leg3.x"}) {
      EXPECT_LT(std::abs(t.rows[k][t.column(c)] - t.rows[k - 1][t.column(c)]), 1e-8) << c << " step " << k;
    }
  }
}

TEST(Run, GearCouplingHoldsFromEitherSide) {
  for (const std::string name : {"differential", "differential_gears"}) {
    const RunOutcome out = bundled(name).run();
    ASSERT_EQ(out.code, ExitCode::pass) << name << ": " << out.message;
    const Trajectory& t = out.trajectory;
    for (const auto& row : t.rows) {
      const double upper = row[t.column("q.upper")];
      const double lower = row[t.column("q.lower")];
      EXPECT_NEAR(row[t.column("q.alpha")], upper - lower, 1e-8);
      EXPECT_NEAR(row[t.column("q.beta")], 0.5 * (upper + lower), 1e-8);
    }
  }
}

TEST(Run, InfeasibleHardTaskNamesConstraint) {
  const Scenario s = Scenario::parse(
      arm_text(R"({"kind": "joints", "name": "reach", "priority": "hard", "joints": {"elbow": 3.5}})",
               R"(, "constraints": [{"kind": "joint_limits", "name": "stops"}])"),
      models_dir);
  const RunOutcome out = s.run();
  EXPECT_EQ(out.code, ExitCode::infeasible);
  EXPECT_NE(out.message.find("stops"), std::string::npos) << out.message;
}

TEST(Run, IterationCapIsNonconvergence) {
  const Scenario s = Scenario::parse(
      arm_text(R"({"kind": "position", "frame": "effector", "target": {"waypoints": [
                   {"time": 0, "value": [0, 0, 0]}, {"time": 0.05, "value": [-0.3, 0.3, 0]}], "relative": true}})",
               R"(, "initial": {"joints": {"shoulder": 0.3, "elbow": 0.8}})",
               R"({"dt": 0.01, "steps": 5, "max_iterations": 1})"),
      models_dir);
  const RunOutcome out = s.run();
  EXPECT_EQ(out.code, ExitCode::nonconvergence);
  EXPECT_EQ(out.trajectory.rows.size(), 1u);
}

TEST(Run, FailedCheckIsReported) {
  const Scenario s = Scenario::parse(
      arm_text(R"({"kind": "joints", "name": "tip", "joints": {"elbow": 3.5}})",
               R"(, "constraints": [{"kind": "joint_limits"}],
                   "checks": [{"kind": "task_error", "task": "tip", "at": "final", "max": 1e-6}])"),
      models_dir);
  const RunOutcome out = s.run();
  ASSERT_EQ(out.checks.size(), 1u);
  EXPECT_FALSE(out.checks[0].passed);
  EXPECT_NEAR(out.checks[0].worst, 0.4, 1e-9);
  EXPECT_EQ(out.code, ExitCode::checks_failed);
}

TEST(Format, CsvWritesNanAsEmptyField) {
  Trajectory t;
  t.header = {"a", "b"};
  t.rows = {{0.1, std::nan("")}};
  EXPECT_EQ(format_csv(t), "a,b\n0.10000000000000001,\n");
  EXPECT_THROW(t.column("c"), UnknownNameError);
}

}  // namespace
}  // namespace taskqp::scenario
