#include "model_support.hpp"

#include "taskqp/errors.hpp"
#include "taskqp/kinematics/solver.hpp"
#include "taskqp/model/spatial.hpp"
#include "taskqp/model/urdf.hpp"

#include <gtest/gtest.h>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>

#include <cmath>

namespace taskqp {
namespace {

using testing::Rng;

constexpr double kPi = 3.14159265358979323846;

Eigen::Matrix3d rot_z(double angle) { return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix(); }

Linearization linearize(const KinematicsSolver& solver, const Task& task) {
  const KinematicsContext context{solver.model(), solver.configuration(),
                                  link_placements(solver.model(), solver.configuration())};
  return task.linearize(context);
}

Linearization linearize(const KinematicsSolver& solver, const KinematicConstraint& c) {
  const KinematicsContext context{solver.model(), solver.configuration(),
                                  link_placements(solver.model(), solver.configuration())};
  return c.linearize(context, solver.settings().dt);
}

// ---------------------------------------------------------------- examples

TEST(Linearize, PositionAtTargetHasZeroError) {
  const RigidBodyModel m = testing::load_fixture("planar_arm");
  KinematicsSolver solver(m);
  const Eigen::Vector3d p = frame_placement(m, solver.configuration(), "effector").translation;
  const PositionTask& t = solver.add_position_task("effector", p);
  EXPECT_EQ(linearize(solver, t).e, Eigen::Vector3d::Zero());
}

TEST(Linearize, OrientationErrorExample) {
  const RigidBodyModel m = testing::load_fixture("two_link");
  KinematicsSolver solver(m);
  const OrientationTask& t = solver.add_orientation_task("base", rot_z(0.3));
  const Linearization lin = linearize(solver, t);
  EXPECT_LT((lin.e - Eigen::Vector3d(0, 0, -0.3)).norm(), 1e-15);
}

TEST(Linearize, GearExample) {
  const RigidBodyModel m = testing::load_fixture("differential");
  KinematicsSolver solver(m);
  Configuration q = m.neutral();
  q.joints(m.joint("alpha").q_index) = 0.2;
  q.joints(m.joint("upper").q_index) = 0.5;
  q.joints(m.joint("lower").q_index) = 0.1;
  solver.set_configuration(q);
  GearTask& gear = solver.add_gear_task();
  gear.add_gear("alpha", "upper", 1.0);
  gear.add_gear("alpha", "lower", -1.0);
  const Linearization lin = linearize(solver, gear);
  ASSERT_EQ(lin.e.size(), 1);
  EXPECT_NEAR(lin.e(0), -0.2, 1e-15);
  Eigen::RowVectorXd expected = Eigen::RowVectorXd::Zero(m.nv());
  expected(m.velocity_index("alpha")) = 1.0;
  expected(m.velocity_index("upper")) = -1.0;
  expected(m.velocity_index("lower")) = 1.0;
  EXPECT_EQ(lin.J.row(0), expected);
}

TEST(Linearize, VelocityLimitRows) {
  const RigidBodyModel m = load_urdf(R"(<robot><link name="a"/><link name="b"/>
    <joint name="j" type="revolute"><parent link="a"/><child link="b"/><limit velocity="1"/></joint></robot>)");
  KinematicsSolver solver(m);
  solver.settings().dt = 0.01;
  const Linearization lin = linearize(solver, solver.enable_velocity_limits());
  ASSERT_EQ(lin.e.size(), 2);
  // dq - 0.01 <= 0 and -dq - 0.01 <= 0
  EXPECT_DOUBLE_EQ(lin.e(0), -0.01);
  EXPECT_DOUBLE_EQ(lin.e(1), -0.01);
  EXPECT_EQ(lin.J(0, 6), 1.0);
  EXPECT_EQ(lin.J(1, 6), -1.0);
  EXPECT_EQ(lin.J.leftCols<6>().norm(), 0.0);
}

TEST(Linearize, JointLimitRowsSkipUnboundedJoints) {
  const RigidBodyModel m = testing::load_fixture("planar_loop");
  KinematicsSolver solver(m);
  // motors are bounded, passive joints are continuous
  EXPECT_EQ(linearize(solver, solver.enable_joint_limits()).e.size(), 4);
}

TEST(Polygon, InwardNormalOfUnitSquare) {
  const ComPolygonConstraint c("square", {{0, 0}, {0, 1}, {1, 1}, {1, 0}}, 0.0);
  EXPECT_LT((c.normal(0) - Eigen::Vector2d(1, 0)).norm(), 1e-15);
  EXPECT_LT((c.normal(1) - Eigen::Vector2d(0, -1)).norm(), 1e-15);
  EXPECT_NEAR(c.signed_margin({0.5, 0.5}), 0.5, 1e-15);
  EXPECT_NEAR(c.signed_margin({0.2, 0.5}), 0.2, 1e-15);
  EXPECT_LT(c.signed_margin({1.5, 0.5}), 0.0);
}

TEST(Polygon, Validation) {
  EXPECT_THROW(ComPolygonConstraint("p", {{0, 0}, {1, 0}, {1, 1}, {0, 1}}, 0.0), InvalidArgument);  // counter-clockwise
  EXPECT_THROW(ComPolygonConstraint("p", {{0, 0}, {0, 1}}, 0.0), InvalidArgument);
  EXPECT_THROW(ComPolygonConstraint("p", {{0, 0}, {0, 1}, {0, 1}, {1, 0}}, 0.0), InvalidArgument);
  EXPECT_THROW(ComPolygonConstraint("p", {{0, 0}, {0, 1}, {1, 0}}, -0.1), InvalidArgument);
  try {
    ComPolygonConstraint("p", {{0, 0}, {1, 0}, {0, 1}}, 0.0);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("clockwise"), std::string::npos);
  }
}

RigidBodyModel two_spheres() {
  RigidBodyModel m = testing::load_fixture("two_spheres");
  load_collision_sidecar_file(m, testing::model_path("two_spheres.collision.json"));
  return m;
}

TEST(SelfCollision, GatedByActivationDistance) {
  const RigidBodyModel m = two_spheres();
  KinematicsSolver solver(m);
  // d = 0.3
  EXPECT_EQ(linearize(solver, solver.add_self_collision_constraint(0.05, 0.2)).e.size(), 0);
  const SelfCollisionConstraint& wide = solver.add_self_collision_constraint(0.05, 0.4);
  const Linearization lin = linearize(solver, wide);
  ASSERT_EQ(lin.e.size(), 1);
  EXPECT_NEAR(lin.e(0), 0.05 - 0.3, 1e-15);
  // moving ball_b along +x increases the distance: G = n'(J_A - J_B) = -1
  EXPECT_NEAR(lin.J(0, m.velocity_index("slider")), -1.0, 1e-15);
  EXPECT_THROW(solver.add_self_collision_constraint(0.2, 0.1), InvalidArgument);
  KinematicsSolver bare(testing::load_fixture("two_spheres"));
  EXPECT_THROW(bare.add_self_collision_constraint(0.0, 0.1), InvalidArgument);
}

// ---------------------------------------------------------------- first-order consistency

/// Central differences of the task error along each increment direction must
/// reproduce J (the linearization predicts e(q + dq) = e + J dq).
void expect_consistent(KinematicsSolver& solver, const Task& task, double tolerance = 1e-6) {
  const Configuration q0 = solver.configuration();
  const Linearization lin = linearize(solver, task);
  const double h = 1e-6;
  Eigen::MatrixXd fd(lin.J.rows(), lin.J.cols());
  for (Eigen::Index i = 0; i < lin.J.cols(); ++i) {
    Eigen::VectorXd dq = Eigen::VectorXd::Zero(lin.J.cols());
    dq(i) = h;
    solver.set_configuration(integrate_config(q0, dq));
    const Eigen::VectorXd plus = linearize(solver, task).e;
    solver.set_configuration(integrate_config(q0, -dq));
    const Eigen::VectorXd minus = linearize(solver, task).e;
    fd.col(i) = (plus - minus) / (2 * h);
  }
  solver.set_configuration(q0);
  EXPECT_LT(testing::relative_error(lin.J, fd), tolerance) << task_kind_name(task.kind()) << "\n" << lin.J << "\n\n" << fd;
}

TEST(Linearize, TaskJacobiansMatchFiniteDifferences) {
  Rng rng(41);
  const RigidBodyModel m = testing::load_fixture("quadruped");
  for (int sample = 0; sample < 10; ++sample) {
    KinematicsSolver solver(m);
    solver.set_configuration(testing::random_configuration(rng, m, 1.0));
    const Placement target = testing::random_placement(rng);
    expect_consistent(solver, solver.add_position_task("leg4", target.translation));
    expect_consistent(solver, solver.add_orientation_task("leg2", target.rotation));
    FrameTask& frame = solver.add_frame_task("body", target);
    frame.orientation_mask.set_axes("xz");
    expect_consistent(solver, frame);
    expect_consistent(solver, solver.add_relative_position_task("leg1", "leg3", target.translation));
    expect_consistent(solver, solver.add_relative_orientation_task("leg1", "leg3", target.rotation));
    expect_consistent(solver, solver.add_relative_frame_task("body", "leg4", target));
    expect_consistent(solver, solver.add_com_task(target.translation));
    JointsTask& joints = solver.add_joints_task();
    joints.set_joints({{"knee1", 0.3}, {"hip_roll3", -0.1}});
    expect_consistent(solver, joints);
    GearTask& gear = solver.add_gear_task();
    gear.add_gear("knee2", "knee1", 0.5);
    gear.add_gear("knee2", "hip_pitch3", -2.0);
    expect_consistent(solver, gear);
  }
}

TEST(Linearize, MaskSelectsRows) {
  const RigidBodyModel m = testing::load_fixture("quadruped");
  KinematicsSolver solver(m);
  PositionTask& t = solver.add_position_task("leg1", Eigen::Vector3d(1, 2, 3));
  const Linearization full = linearize(solver, t);
  t.mask.set_axes("zx");
  EXPECT_EQ(t.mask.axes(), "xz");
  const Linearization masked = linearize(solver, t);
  ASSERT_EQ(masked.e.size(), 2);
  EXPECT_EQ(masked.e(0), full.e(0));
  EXPECT_EQ(masked.e(1), full.e(2));
  EXPECT_EQ(masked.J.row(1), full.J.row(2));
  EXPECT_THROW(t.mask.set_axes(""), InvalidArgument);
  EXPECT_THROW(t.mask.set_axes("xw"), InvalidArgument);
  EXPECT_THROW(t.mask.set_axes("xx"), InvalidArgument);
  EXPECT_EQ(solver.assemble().dimensions.variables, m.nv());
}

// ---------------------------------------------------------------- registry

TEST(Registry, NamesAndErrors) {
  const RigidBodyModel m = testing::load_fixture("quadruped");
  KinematicsSolver solver(m);
  EXPECT_THROW(solver.add_position_task("nope", Eigen::Vector3d::Zero()), UnknownNameError);
  PositionTask& a = solver.add_position_task("leg1", Eigen::Vector3d::Zero());
  PositionTask& b = solver.add_position_task("leg1", Eigen::Vector3d::Zero());
  EXPECT_NE(a.name(), b.name());
  a.configure("foot", "hard", 1.0);
  EXPECT_THROW(b.configure("foot", "soft", 1.0), InvalidArgument);
  EXPECT_THROW(b.configure("other", "soft", 0.0), InvalidArgument);
  EXPECT_THROW(b.configure("other", "medium", 1.0), InvalidArgument);
  a.configure("foot", "soft", 2.0);  // renaming to its own name is fine
  EXPECT_EQ(solver.task("foot").priority().weight, 2.0);
  EXPECT_THROW(solver.task("missing"), UnknownNameError);
  EXPECT_THROW(solver.add_joints_task().set_joint("foot1", 0.0), InvalidArgument);  // fixed joint
  EXPECT_THROW(solver.add_joints_task().set_joint("nope", 0.0), UnknownNameError);
  EXPECT_THROW(solver.add_gear_task().add_gear("knee1", "knee1", 1.0), InvalidArgument);
  EXPECT_THROW(solver.add_orientation_task("leg1", 2.0 * Eigen::Matrix3d::Identity()), InvalidArgument);
  solver.remove_task("foot");
  EXPECT_THROW(solver.task("foot"), UnknownNameError);
  EXPECT_EQ(&solver.enable_joint_limits(), &solver.enable_joint_limits());
}

// ---------------------------------------------------------------- solving

/// Two-link planar IK in closed form: both elbow branches.
std::array<Eigen::Vector2d, 2> two_link_ik(double l1, double l2, double x, double y) {
  const double c2 = (x * x + y * y - l1 * l1 - l2 * l2) / (2 * l1 * l2);
  std::array<Eigen::Vector2d, 2> out;
  for (int k = 0; k < 2; ++k) {
    const double q2 = (k == 0 ? 1 : -1) * std::acos(std::clamp(c2, -1.0, 1.0));
    const double q1 = std::atan2(y, x) - std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
    out[static_cast<std::size_t>(k)] = {q1, q2};
  }
  return out;
}

double angle_distance(double a, double b) { return std::abs(std::remainder(a - b, 2 * kPi)); }

TEST(Solve, TwoLinkArmMatchesAnalyticIk) {
  const RigidBodyModel m = testing::load_fixture("planar_arm");
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    KinematicsSolver solver(m);
    solver.settings().mask_floating_base = true;
    Configuration q = m.neutral();
    q.joints << rng.uniform(-1, 1), rng.uniform(0.3, 1.5);
    solver.set_configuration(q);
    // undamped Gauss-Newton converges locally: targets come from a bounded
    // joint perturbation that keeps the elbow away from 0 and pi
    Configuration goal = q;
    goal.joints(0) += rng.uniform(-0.6, 0.6);
    goal.joints(1) = std::clamp(goal.joints(1) + rng.uniform(-0.6, 0.6), 0.3, 2.6);
    const Eigen::Vector3d target = frame_placement(m, goal, "effector").translation;
    PositionTask& task = solver.add_position_task("effector", target);
    task.configure("reach", "hard", 1.0);
    int steps = 0;
    while (steps < 100) {
      const IkReport& report = solver.step();
      ++steps;
      if (report.dq.norm() < 1e-12) break;
    }
    const Configuration& qf = solver.configuration();
    EXPECT_LT((frame_placement(m, qf, "effector").translation - target).norm(), 1e-6) << trial;
    EXPECT_LT(qf.base.translation.norm(), 1e-12);
    const auto branches = two_link_ik(1.0, 0.8, target.x(), target.y());
    double best = 1e9;
    for (const Eigen::Vector2d& b : branches) {
      best = std::min(best, std::max(angle_distance(qf.joints(0), b(0)), angle_distance(qf.joints(1), b(1))));
    }
    EXPECT_LT(best, 1e-6) << trial;
  }
}

TEST(Solve, ConflictingHardTasksAreInfeasible) {
  const RigidBodyModel m = testing::load_fixture("planar_arm");
  KinematicsSolver solver(m);
  solver.add_position_task("effector", Eigen::Vector3d(1, 0, 0)).configure("here", "hard", 1);
  solver.add_position_task("effector", Eigen::Vector3d(0, 1, 0)).configure("there", "hard", 1);
  try {
    solver.solve();
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    const std::string label = e.label();
    EXPECT_TRUE(label == "here" || label == "there") << label;
  }
}

TEST(Solve, WeightRatioMatchesClosedFormLeastSquares) {
  const RigidBodyModel m = testing::load_fixture("planar_arm");
  KinematicsSolver solver(m);
  solver.settings().mask_floating_base = true;
  Configuration q = m.neutral();
  q.joints << 0.3, 0.9;
  solver.set_configuration(q);
  const Eigen::Vector3d p = frame_placement(m, q, "effector").translation;
  PositionTask& strong = solver.add_position_task("effector", p + Eigen::Vector3d(0.01, 0.0, 0.0));
  strong.configure("strong", "soft", 1e3);
  PositionTask& weak = solver.add_position_task("effector", p + Eigen::Vector3d(-0.01, 0.01, 0.0));
  weak.configure("weak", "soft", 1.0);
  const IkReport report = solver.solve();

  // oracle on the joint columns only (the base is pinned)
  const Linearization ls = linearize(solver, strong);
  const Linearization lw = linearize(solver, weak);
  const double eps = solver.settings().epsilon;
  const Eigen::MatrixXd Js = ls.J.rightCols(2), Jw = lw.J.rightCols(2);
  const Eigen::MatrixXd H = 1e3 * Js.transpose() * Js + Jw.transpose() * Jw + eps * Eigen::MatrixXd::Identity(2, 2);
  const Eigen::VectorXd rhs = -(1e3 * Js.transpose() * ls.e + Jw.transpose() * lw.e);
  const Eigen::VectorXd expected = H.ldlt().solve(rhs);
  EXPECT_LT((report.dq.tail(2) - expected).norm(), 1e-9);
  EXPECT_LT(report.dq.head(6).norm(), 1e-12);

  // predicted displacement lands within 0.2% of the strong target offset
  const Eigen::Vector3d moved = -ls.J * report.dq;  // J = -Jt
  const Eigen::Vector3d wanted(0.01, 0.0, 0.0);
  const Eigen::Vector3d blend = (1e3 * wanted + Eigen::Vector3d(-0.01, 0.01, 0.0)) / (1e3 + 1.0);
  EXPECT_LT((moved - blend).norm(), 1e-6);
  const double angle = std::acos(std::clamp(moved.normalized().dot(wanted.normalized()), -1.0, 1.0));
  EXPECT_LT(angle, 2e-3);
}

TEST(Solve, ZeroErrorGivesZeroStep) {
  const RigidBodyModel m = testing::load_fixture("quadruped");
  KinematicsSolver solver(m);
  Rng rng(43);
  solver.set_configuration(testing::random_configuration(rng, m, 0.5));
  const Configuration& q = solver.configuration();
  for (const char* leg : {"leg1", "leg2", "leg3"}) {
    solver.add_position_task(leg, frame_placement(m, q, leg).translation).configure(leg, "hard", 1);
  }
  solver.add_frame_task("body", frame_placement(m, q, "body")).configure("body", "soft", 1.0);
  solver.add_com_task(com(m, q)).configure("com", "soft", 10.0);
  const IkReport report = solver.solve();
  EXPECT_LT(report.dq.norm(), 1e-9);
}

TEST(Solve, HardResidualAndReportBookkeeping) {
  const RigidBodyModel m = testing::load_fixture("quadruped");
  Rng rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    KinematicsSolver solver(m);
    solver.set_configuration(testing::random_configuration(rng, m, 0.6));
    const Configuration& q = solver.configuration();
    for (const char* leg : {"leg1", "leg2", "leg3"}) {
      solver.add_position_task(leg, frame_placement(m, q, leg).translation + rng.vector(3, -0.01, 0.01))
          .configure(leg, "hard", 1);
    }
    PositionTask& free_leg = solver.add_position_task("leg4", rng.vector(3));
    free_leg.configure("leg4", "soft", 1e3);
    free_leg.mask.set_axes("xy");
    solver.add_frame_task("body", Placement::identity()).configure("body", "soft", 1.0);
    const IkReport report = solver.solve();
    ASSERT_EQ(report.tasks.size(), 5u);
    for (const TaskReport& t : report.tasks) {
      if (!t.priority.is_soft()) EXPECT_LT(t.residual_max, 1e-8) << t.name;
    }
    EXPECT_EQ(report.dimensions.equalities, 9);
    EXPECT_EQ(report.dimensions.variables, m.nv());
    EXPECT_EQ(report.dimensions.reduced, m.nv() - 9);
    EXPECT_LT(report.kkt_residual, 1e-8);
  }
}

TEST(Solve, SoftWeightMonotonicity) {
  // raising a soft task's weight never increases its linearized residual
  const RigidBodyModel m = testing::load_fixture("quadruped");
  Rng rng(45);
  for (int trial = 0; trial < 20; ++trial) {
    KinematicsSolver solver(m);
    solver.set_configuration(testing::random_configuration(rng, m, 0.6));
    PositionTask& reach = solver.add_position_task("leg4", rng.vector(3));
    solver.add_frame_task("body", testing::random_placement(rng)).configure("body", "soft", 1.0);
    solver.add_com_task(rng.vector(3)).configure("com", "soft", 5.0);
    double previous = std::numeric_limits<double>::infinity();
    for (double w : {0.01, 0.1, 1.0, 10.0, 100.0, 1e3}) {
      reach.configure("reach", "soft", w);
      const IkReport report = solver.solve();
      const double residual = report.tasks.front().residual;
      EXPECT_LE(residual, previous * (1 + 1e-9) + 1e-12) << w;
      previous = residual;
    }
  }
}

TEST(Solve, PriorityCanSwitchBetweenSolves) {
  const RigidBodyModel m = testing::load_fixture("planar_arm");
  KinematicsSolver solver(m);
  solver.settings().mask_floating_base = true;
  Configuration q = m.neutral();
  q.joints << 0.2, 0.7;
  solver.set_configuration(q);
  const Eigen::Vector3d p = frame_placement(m, q, "effector").translation;
  PositionTask& t = solver.add_position_task("effector", p + Eigen::Vector3d(0.05, 0.02, 0));
  t.configure("reach", "soft", 1.0);
  const IkReport soft = solver.solve();
  t.configure("reach", "hard", 1.0);
  const IkReport hard = solver.solve();
  EXPECT_GT(soft.tasks[0].residual, 1e-8);
  EXPECT_LT(hard.tasks[0].residual_max, 1e-10);
  EXPECT_EQ(soft.dimensions.equalities, 6);  // floating base only
  EXPECT_EQ(hard.dimensions.equalities, 9);
}

TEST(Solve, VelocityLimitedStep) {
  const RigidBodyModel m = testing::load_fixture("differential");
  KinematicsSolver solver(m);
  solver.settings().mask_floating_base = true;
  solver.settings().dt = 0.01;
  solver.enable_velocity_limits();
  solver.add_joints_task().set_joints({{"upper", 2.0}, {"lower", -1.5}});
  for (int i = 0; i < 20; ++i) {
    const IkReport& report = solver.step();
    EXPECT_LE(std::abs(report.dq(m.velocity_index("upper"))), 2.0 * 0.01 + 1e-9);
    EXPECT_LE(std::abs(report.dq(m.velocity_index("lower"))), 2.0 * 0.01 + 1e-9);
  }
  // 20 steps at the limit
  EXPECT_NEAR(solver.configuration().joints(m.joint("upper").q_index), 0.4, 1e-9);
}

TEST(Solve, VelocityReferenceBoundsWholeTick) {
  const RigidBodyModel m = testing::load_fixture("differential");
  KinematicsSolver solver(m);
  solver.settings().mask_floating_base = true;
  solver.settings().dt = 0.01;
  solver.enable_velocity_limits();
  solver.add_joints_task().set_joints({{"upper", 2.0}, {"lower", -1.5}});
  const int upper = m.joint("upper").q_index;
  for (int tick = 0; tick < 5; ++tick) {
    const Eigen::VectorXd start = solver.configuration().joints;
    solver.set_velocity_reference(start);
    for (int i = 0; i < 4; ++i) solver.step();
    const Eigen::VectorXd moved = solver.configuration().joints - start;
    EXPECT_LE(std::abs(moved(upper)), 0.02 + 1e-9);
    EXPECT_NEAR(moved(upper), 0.02, 1e-9);
  }
  EXPECT_THROW(solver.set_velocity_reference(Eigen::VectorXd::Zero(1)), DimensionError);
}

TEST(Solve, JointLimitsHold) {
  const RigidBodyModel m = testing::load_fixture("planar_arm");
  KinematicsSolver solver(m);
  solver.settings().mask_floating_base = true;
  solver.enable_joint_limits();
  solver.add_joints_task().set_joints({{"shoulder", 5.0}, {"elbow", -5.0}});
  for (int i = 0; i < 10; ++i) solver.step();
  EXPECT_NEAR(solver.configuration().joints(0), 3.1, 1e-9);
  EXPECT_NEAR(solver.configuration().joints(1), -3.1, 1e-9);
}

TEST(Solve, GearCouplingInBothDirections) {
  const RigidBodyModel m = testing::load_fixture("differential");
  for (bool passive_side : {false, true}) {
    KinematicsSolver solver(m);
    solver.settings().mask_floating_base = true;
    GearTask& gear = solver.add_gear_task();
    gear.configure("gear", "hard", 1);
    gear.add_gear("alpha", "upper", 1);
    gear.add_gear("alpha", "lower", -1);
    gear.add_gear("beta", "upper", 0.5);
    gear.add_gear("beta", "lower", 0.5);
    JointsTask& joints = solver.add_joints_task();
    if (passive_side) {
      joints.set_joints({{"alpha", 0.4}, {"beta", -0.3}});
    } else {
      joints.set_joints({{"lower", 0.2}, {"upper", 0.5}});
    }
    for (int i = 0; i < 5; ++i) solver.step();
    const Eigen::VectorXd& q = solver.configuration().joints;
    const double upper = q(m.joint("upper").q_index), lower = q(m.joint("lower").q_index);
    const double alpha = q(m.joint("alpha").q_index), beta = q(m.joint("beta").q_index);
    EXPECT_LT(std::abs(alpha - (upper - lower)), 1e-8);
    EXPECT_LT(std::abs(beta - 0.5 * (upper + lower)), 1e-8);
    if (passive_side) {
      EXPECT_NEAR(upper, -0.3 + 0.2, 1e-6);
      EXPECT_NEAR(lower, -0.3 - 0.2, 1e-6);
    } else {
      EXPECT_NEAR(alpha, 0.3, 1e-6);
      EXPECT_NEAR(beta, 0.35, 1e-6);
    }
  }
}

TEST(Solve, SelfCollisionNeverBelowMargin) {
  const RigidBodyModel m = two_spheres();
  KinematicsSolver solver(m);
  solver.settings().mask_floating_base = true;
  solver.settings().dt = 0.01;
  solver.enable_velocity_limits();  // 1 cm per step, well below d_active - d_min
  solver.add_self_collision_constraint(0.05, 0.15).configure("collision", "hard", 1);
  solver.add_joints_task().set_joint("slider", -0.6);  // drives ball_b through ball_a
  const CollisionPair pair = m.collision_pairs().front();
  for (int i = 0; i < 80; ++i) {
    solver.step();
    const double d = collision_distance(m, solver.configuration(), pair).distance;
    EXPECT_GE(d, 0.05 - 1e-6) << i;
  }
  EXPECT_NEAR(collision_distance(m, solver.configuration(), pair).distance, 0.05, 1e-6);
}

TEST(Solve, SoftCollisionUsesSlack) {
  const RigidBodyModel m = two_spheres();
  KinematicsSolver solver(m);
  solver.settings().mask_floating_base = true;
  SelfCollisionConstraint& c = solver.add_self_collision_constraint(0.05, 0.5);
  c.configure("collision", "soft", 1.0);
  solver.add_joints_task().set_joint("slider", -0.5);
  const IkReport report = solver.solve();
  ASSERT_EQ(report.constraints.size(), 1u);
  EXPECT_EQ(report.constraints[0].slack.size(), 1);
  EXPECT_EQ(report.dimensions.slack, 1);
}

TEST(Solve, PolygonContainsCom) {
  const RigidBodyModel m = testing::load_fixture("quadruped");
  KinematicsSolver solver(m);
  Configuration q = m.neutral();
  for (int leg = 1; leg <= 4; ++leg) {
    q.joints(m.joint("hip_pitch" + std::to_string(leg)).q_index) = 0.6;
    q.joints(m.joint("knee" + std::to_string(leg)).q_index) = -1.2;
  }
  solver.set_configuration(q);
  std::vector<Eigen::Vector2d> polygon;
  for (const char* leg : {"leg1", "leg2", "leg3"}) {
    const Eigen::Vector3d p = frame_placement(m, q, leg).translation;
    solver.add_position_task(leg, p).configure(leg, "hard", 1);
    polygon.push_back(p.head<2>());
  }
  solver.add_com_polygon_constraint(polygon, 0.02).configure("support", "hard", 1);
  solver.add_position_task("leg4", frame_placement(m, q, "leg4").translation + Eigen::Vector3d(0, 0.3, 0.1))
      .configure("reach", "soft", 1e3);
  const ComPolygonConstraint& support = dynamic_cast<const ComPolygonConstraint&>(solver.constraint("support"));
  for (int i = 0; i < 40; ++i) {
    solver.step();
    // the linearized constraint holds at every step; after the transient the
    // nonlinear margin holds too
    EXPECT_LE(solver.last_report()->constraints[0].violation_after, 1e-8);
  }
  EXPECT_GE(support.signed_margin(com(m, solver.configuration()).head<2>()), 0.02 - 1e-8);
}

}  // namespace
}  // namespace taskqp
