#pragma once

// Task-space inverse kinematics. Each solve linearizes every task and
// constraint at the current configuration, builds one QP over the increment
// dq (size 6 + n, see model/algorithms.hpp for the convention) and solves it.
//
// Sign convention: a task linearizes to (J, e) with J = de/d(dq), so the
// residual after a step is e + J dq. The QP minimizes
//   sum_soft w_i ||e_i + J_i dq||^2 + eps ||dq||^2
// subject to e_j + J_j dq = 0 for hard tasks and g + G dq <= 0 for hard
// constraints (soft constraints go through the slack machinery of Problem).
// Position-like errors are target - current (J = -Jacobian); orientation
// errors are Log(R_target' R) (J = Jr^-1(e) R' Jw).

#include "taskqp/model/algorithms.hpp"
#include "taskqp/model/model.hpp"
#include "taskqp/problem.hpp"

#include <Eigen/Core>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace taskqp {

/// Subset of {x, y, z} selecting the rows of a 3-D error block.
class AxisMask {
 public:
  /// Any combination of 'x', 'y', 'z' (case-insensitive, no repeats).
  /// Throws InvalidArgument on an empty or malformed string.
  void set_axes(const std::string& axes);
  const std::vector<int>& indices() const { return indices_; }
  std::string axes() const;
  bool full() const { return indices_.size() == 3; }

 private:
  std::vector<int> indices_{0, 1, 2};
};

/// First-order model of a task or constraint at the current configuration.
struct Linearization {
  Eigen::MatrixXd J;  ///< rows x (6 + n)
  Eigen::VectorXd e;  ///< error (tasks) or g (constraints)
};

/// Everything a task needs to linearize itself.
struct KinematicsContext {
  const RigidBodyModel& model;
  const Configuration& q;
  std::vector<Placement> placements;
  /// Joint values at the start of the control tick, when the tick is split
  /// into several solves. Velocity limits then bound q + dq - reference.
  const Eigen::VectorXd* velocity_reference = nullptr;

  Placement frame(int frame_index) const;
};

class Labelled {
 public:
  virtual ~Labelled() = default;
  const std::string& name() const { return name_; }
  const Priority& priority() const { return priority_; }

  /// Renames and sets the priority ("hard" or "soft"). Soft needs weight > 0.
  /// Throws InvalidArgument when the name is taken by another task or
  /// constraint of the same solver.
  void configure(const std::string& name, const std::string& priority, double weight = 1.0);
  void configure(const std::string& name, Priority::Kind kind, double weight = 1.0);

 protected:
  friend class KinematicsSolver;
  Labelled(std::string name, Priority priority) : name_(std::move(name)), priority_(priority) {}

 private:
  std::string name_;
  Priority priority_;
  const class KinematicsSolver* owner_ = nullptr;
};

enum class TaskKind { position, orientation, frame, relative_position, relative_orientation, relative_frame, com, joints, gear };

std::string task_kind_name(TaskKind kind);

class Task : public Labelled {
 public:
  virtual TaskKind kind() const = 0;
  /// Masked rows only. Throws UnknownNameError for names that no longer
  /// resolve and InvalidArgument when nothing is left to constrain.
  virtual Linearization linearize(const KinematicsContext& context) const = 0;

 protected:
  using Labelled::Labelled;
};

class PositionTask : public Task {
 public:
  PositionTask(std::string name, int frame, Eigen::Vector3d target);
  TaskKind kind() const override { return TaskKind::position; }
  Linearization linearize(const KinematicsContext& context) const override;

  int frame;
  Eigen::Vector3d target;
  AxisMask mask;
};

class OrientationTask : public Task {
 public:
  OrientationTask(std::string name, int frame, const Eigen::Matrix3d& target);
  TaskKind kind() const override { return TaskKind::orientation; }
  Linearization linearize(const KinematicsContext& context) const override;

  int frame;
  Eigen::Matrix3d target;
  AxisMask mask;
};

/// Position and orientation blocks stacked (not a screw error). The two
/// blocks share the task weight unless orientation_weight is set.
class FrameTask : public Task {
 public:
  FrameTask(std::string name, int frame, const Placement& target);
  TaskKind kind() const override { return TaskKind::frame; }
  Linearization linearize(const KinematicsContext& context) const override;
  /// Row scaling applied to the orientation rows of a soft task.
  double orientation_scale() const;

  int frame;
  Placement target;
  AxisMask position_mask;
  AxisMask orientation_mask;
  std::optional<double> orientation_weight;
};

/// Translation of frame b expressed in frame a.
class RelativePositionTask : public Task {
 public:
  RelativePositionTask(std::string name, int frame_a, int frame_b, Eigen::Vector3d target);
  TaskKind kind() const override { return TaskKind::relative_position; }
  Linearization linearize(const KinematicsContext& context) const override;

  int frame_a;
  int frame_b;
  Eigen::Vector3d target;
  AxisMask mask;
};

class RelativeOrientationTask : public Task {
 public:
  RelativeOrientationTask(std::string name, int frame_a, int frame_b, const Eigen::Matrix3d& target);
  TaskKind kind() const override { return TaskKind::relative_orientation; }
  Linearization linearize(const KinematicsContext& context) const override;

  int frame_a;
  int frame_b;
  Eigen::Matrix3d target;
  AxisMask mask;
};

class RelativeFrameTask : public Task {
 public:
  RelativeFrameTask(std::string name, int frame_a, int frame_b, const Placement& target);
  TaskKind kind() const override { return TaskKind::relative_frame; }
  Linearization linearize(const KinematicsContext& context) const override;
  double orientation_scale() const;

  int frame_a;
  int frame_b;
  Placement target;
  AxisMask position_mask;
  AxisMask orientation_mask;
  std::optional<double> orientation_weight;
};

class ComTask : public Task {
 public:
  ComTask(std::string name, Eigen::Vector3d target);
  TaskKind kind() const override { return TaskKind::com; }
  Linearization linearize(const KinematicsContext& context) const override;

  Eigen::Vector3d target;
  AxisMask mask;
};

/// One row per listed joint: target - q_j.
class JointsTask : public Task {
 public:
  JointsTask(std::string name, const RigidBodyModel& model);
  TaskKind kind() const override { return TaskKind::joints; }
  Linearization linearize(const KinematicsContext& context) const override;

  /// Replaces the target map. Throws UnknownNameError for unknown joints and
  /// InvalidArgument for fixed joints.
  void set_joints(const std::map<std::string, double>& targets);
  void set_joint(const std::string& joint, double target);
  const std::map<std::string, double>& targets() const { return targets_; }

 private:
  const RigidBodyModel& model_;
  std::map<std::string, double> targets_;
};

/// q_target = sum_k ratio_k q_source_k for every declared target joint.
class GearTask : public Task {
 public:
  GearTask(std::string name, const RigidBodyModel& model);
  TaskKind kind() const override { return TaskKind::gear; }
  Linearization linearize(const KinematicsContext& context) const override;

  /// Adds ratio to W(target, source). Throws UnknownNameError for unknown
  /// joints, InvalidArgument for fixed joints or target == source.
  void add_gear(const std::string& target, const std::string& source, double ratio);
  /// (target joint, [(source joint, ratio)]) in declaration order.
  const std::vector<std::pair<std::string, std::vector<std::pair<std::string, double>>>>& gears() const {
    return gears_;
  }

 private:
  const RigidBodyModel& model_;
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, double>>>> gears_;
};

enum class ConstraintKind { joint_limits, velocity_limits, com_polygon, self_collision };

std::string constraint_kind_name(ConstraintKind kind);

/// Rows g + G dq <= 0.
class KinematicConstraint : public Labelled {
 public:
  virtual ConstraintKind kind() const = 0;
  virtual Linearization linearize(const KinematicsContext& context, double dt) const = 0;
  bool enabled = true;

 protected:
  using Labelled::Labelled;
};

/// q_min <= q + dq <= q_max on actuated joints with bounds.
class JointLimitsConstraint : public KinematicConstraint {
 public:
  using KinematicConstraint::KinematicConstraint;
  ConstraintKind kind() const override { return ConstraintKind::joint_limits; }
  Linearization linearize(const KinematicsContext& context, double dt) const override;
};

/// |dq_j| <= v_max,j dt on actuated joints with a velocity limit (or
/// |q_j + dq_j - reference_j| <= v_max,j dt with a velocity reference).
class VelocityLimitsConstraint : public KinematicConstraint {
 public:
  using KinematicConstraint::KinematicConstraint;
  ConstraintKind kind() const override { return ConstraintKind::velocity_limits; }
  Linearization linearize(const KinematicsContext& context, double dt) const override;
};

/// Keeps the horizontal CoM inside a convex polygon with margin:
/// n_i'(y - V_i) >= margin for each edge, vertices clockwise.
class ComPolygonConstraint : public KinematicConstraint {
 public:
  ComPolygonConstraint(std::string name, std::vector<Eigen::Vector2d> vertices, double margin);
  ConstraintKind kind() const override { return ConstraintKind::com_polygon; }
  Linearization linearize(const KinematicsContext& context, double dt) const override;

  /// Throws InvalidArgument for fewer than 3 vertices, a zero-length edge,
  /// counter-clockwise order or a negative margin.
  void set_polygon(std::vector<Eigen::Vector2d> vertices, double margin);
  const std::vector<Eigen::Vector2d>& vertices() const { return vertices_; }
  double margin() const { return margin_; }
  /// Unit inward normal of edge i.
  Eigen::Vector2d normal(std::size_t i) const;
  /// min_i n_i'(y - V_i).
  double signed_margin(const Eigen::Vector2d& y) const;

 private:
  std::vector<Eigen::Vector2d> vertices_;
  double margin_ = 0.0;
};

/// d_AB + n'(J_B - J_A) dq >= d_min for every declared pair with
/// d_AB <= d_active.
class SelfCollisionConstraint : public KinematicConstraint {
 public:
  SelfCollisionConstraint(std::string name, double d_min, double d_active);
  ConstraintKind kind() const override { return ConstraintKind::self_collision; }
  Linearization linearize(const KinematicsContext& context, double dt) const override;

  double d_min;
  double d_active;
};

struct KinematicsSettings {
  /// Weight of the eps ||dq||^2 regularization objective.
  double epsilon = 1e-6;
  /// Control step used by velocity limits, seconds.
  double dt = 0.01;
  /// Adds a hard dq_base = 0 block: the base does not move.
  bool mask_floating_base = false;
  bool use_qr_reduction = true;
  std::optional<int> max_iterations;
};

struct TaskReport {
  std::string name;
  TaskKind kind;
  Priority priority;
  /// ||e|| at the linearization point.
  double error = 0.0;
  /// ||e + J dq|| (linearized residual after the step).
  double residual = 0.0;
  /// max |e + J dq|.
  double residual_max = 0.0;
};

struct ConstraintStatus {
  std::string name;
  ConstraintKind kind;
  Priority priority;
  Eigen::Index rows = 0;
  /// max(g) before the step, -inf for zero rows.
  double violation_before = 0.0;
  /// max(g + G dq) after the step.
  double violation_after = 0.0;
  std::vector<Eigen::Index> active_rows;
  Eigen::VectorXd slack;
};

struct QpDimensions {
  Eigen::Index variables = 0;
  Eigen::Index equalities = 0;
  Eigen::Index inequalities = 0;
  Eigen::Index slack = 0;
  /// Variables left after QR reduction (equals `variables` without it).
  Eigen::Index reduced = 0;
};

struct IkReport {
  Eigen::VectorXd dq;
  std::vector<TaskReport> tasks;
  std::vector<ConstraintStatus> constraints;
  QpDimensions dimensions;
  int iterations = 0;
  double kkt_residual = 0.0;
};

/// The QP of one solve, before solving.
struct Assembly {
  Problem problem;
  Variable dq;
  std::vector<Linearization> tasks;        ///< parallel to solver.tasks()
  std::vector<Linearization> constraints;  ///< parallel to solver.constraints()
  QpDimensions dimensions;
};

class KinematicsSolver {
 public:
  /// The model must outlive the solver and is never modified.
  explicit KinematicsSolver(const RigidBodyModel& model);
  KinematicsSolver(const KinematicsSolver&) = delete;
  KinematicsSolver& operator=(const KinematicsSolver&) = delete;

  const RigidBodyModel& model() const { return model_; }
  const Configuration& configuration() const { return q_; }
  /// Throws DimensionError / InvalidArgument on a malformed configuration.
  void set_configuration(const Configuration& q);
  KinematicsSettings& settings() { return settings_; }
  const KinematicsSettings& settings() const { return settings_; }

  PositionTask& add_position_task(const std::string& frame, const Eigen::Vector3d& target);
  OrientationTask& add_orientation_task(const std::string& frame, const Eigen::Matrix3d& target);
  FrameTask& add_frame_task(const std::string& frame, const Placement& target);
  RelativePositionTask& add_relative_position_task(const std::string& a, const std::string& b,
                                                   const Eigen::Vector3d& target);
  RelativeOrientationTask& add_relative_orientation_task(const std::string& a, const std::string& b,
                                                         const Eigen::Matrix3d& target);
  RelativeFrameTask& add_relative_frame_task(const std::string& a, const std::string& b, const Placement& target);
  ComTask& add_com_task(const Eigen::Vector3d& target);
  JointsTask& add_joints_task();
  GearTask& add_gear_task();

  ComPolygonConstraint& add_com_polygon_constraint(std::vector<Eigen::Vector2d> vertices, double margin = 0.0);
  SelfCollisionConstraint& add_self_collision_constraint(double d_min, double d_active);
  /// Idempotent: returns the existing constraint when already enabled.
  JointLimitsConstraint& enable_joint_limits(bool enable = true);
  VelocityLimitsConstraint& enable_velocity_limits(bool enable = true);

  const std::vector<std::unique_ptr<Task>>& tasks() const { return tasks_; }
  const std::vector<std::unique_ptr<KinematicConstraint>>& constraints() const { return constraints_; }
  /// Throws UnknownNameError.
  Task& task(const std::string& name);
  KinematicConstraint& constraint(const std::string& name);
  void remove_task(const std::string& name);

  /// Linearizes everything at the current configuration and builds the QP.
  Assembly assemble() const;
  /// Builds and solves the QP; the configuration is not changed. Throws
  /// InfeasibleError (labelled with the task or constraint name) or
  /// NonConvergenceError.
  IkReport solve() const;
  /// solve() followed by q <- integrate_config(q, dq).
  const IkReport& step();
  /// Makes velocity limits bound the motion accumulated since `joints`
  /// instead of a single increment. Throws DimensionError.
  void set_velocity_reference(const Eigen::VectorXd& joints);
  void clear_velocity_reference() { velocity_reference_.reset(); }
  const std::optional<IkReport>& last_report() const { return last_; }

  /// True when `name` is used by a task or constraint other than `self`.
  bool name_taken(const std::string& name, const Labelled* self) const;

 private:
  template <typename T>
  T& own_task(std::unique_ptr<T> task);
  template <typename T>
  T& own_constraint(std::unique_ptr<T> constraint);
  std::string fresh_name(const std::string& stem) const;

  const RigidBodyModel& model_;
  Configuration q_;
  KinematicsSettings settings_;
  std::vector<std::unique_ptr<Task>> tasks_;
  std::vector<std::unique_ptr<KinematicConstraint>> constraints_;
  std::optional<IkReport> last_;
  std::optional<Eigen::VectorXd> velocity_reference_;
};

}  // namespace taskqp
