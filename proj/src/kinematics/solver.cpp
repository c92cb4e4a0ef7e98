#include "taskqp/kinematics/solver.hpp"

#include "taskqp/errors.hpp"
#include "taskqp/model/spatial.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace taskqp {

namespace {

/// Keeps the masked rows of a 3-row block.
Linearization select_rows(const Eigen::MatrixXd& J, const Eigen::VectorXd& e, const AxisMask& mask) {
  const std::vector<int>& rows = mask.indices();
  Linearization out{Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), J.cols()),
                    Eigen::VectorXd(static_cast<Eigen::Index>(rows.size()))};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.J.row(static_cast<Eigen::Index>(i)) = J.row(rows[i]);
    out.e(static_cast<Eigen::Index>(i)) = e(rows[i]);
  }
  return out;
}

Linearization stack(const Linearization& top, const Linearization& bottom) {
  Linearization out{Eigen::MatrixXd(top.J.rows() + bottom.J.rows(), top.J.cols()),
                    Eigen::VectorXd(top.e.size() + bottom.e.size())};
  out.J << top.J, bottom.J;
  out.e << top.e, bottom.e;
  return out;
}

/// e = target - p, J = -Jt
Linearization position_rows(const KinematicsContext& c, int frame, const Eigen::Vector3d& target) {
  const Frame& f = c.model.frames()[static_cast<std::size_t>(frame)];
  const Placement world = c.frame(frame);
  return {-point_jacobian(c.model, c.placements, f.link, world.translation), target - world.translation};
}

/// e = Log(R_t' R), J = Jr^-1(e) R' Jw
Linearization orientation_rows(const Eigen::Matrix3d& R, const Eigen::Matrix3d& target, const Eigen::MatrixXd& Jw) {
  const Eigen::Vector3d e = so3_log(target.transpose() * R);
  return {so3_right_jacobian_inverse(e) * R.transpose() * Jw, e};
}

Linearization orientation_rows(const KinematicsContext& c, int frame, const Eigen::Matrix3d& target) {
  const Frame& f = c.model.frames()[static_cast<std::size_t>(frame)];
  return orientation_rows(c.frame(frame).rotation, target, angular_jacobian(c.model, c.placements, f.link));
}

struct RelativeRows {
  Placement relative;
  FrameJacobian jacobian;
};

RelativeRows relative_rows(const KinematicsContext& c, int a, int b) {
  const Frame& fa = c.model.frames()[static_cast<std::size_t>(a)];
  const Frame& fb = c.model.frames()[static_cast<std::size_t>(b)];
  const Placement wa = c.frame(a);
  const Placement wb = c.frame(b);
  const Eigen::MatrixXd ja_t = point_jacobian(c.model, c.placements, fa.link, wa.translation);
  const Eigen::MatrixXd jb_t = point_jacobian(c.model, c.placements, fb.link, wb.translation);
  const Eigen::MatrixXd ja_r = angular_jacobian(c.model, c.placements, fa.link);
  const Eigen::MatrixXd jb_r = angular_jacobian(c.model, c.placements, fb.link);
  const Eigen::Matrix3d Rt = wa.rotation.transpose();
  return {wa.inverse() * wb,
          {Rt * (jb_t - ja_t + skew(wb.translation - wa.translation) * ja_r), Rt * (jb_r - ja_r)}};
}

double orientation_scale_for(const Priority& priority, const std::optional<double>& orientation_weight) {
  if (!orientation_weight || !priority.is_soft()) return 1.0;
  return std::sqrt(*orientation_weight / priority.weight);
}

void require_movable(const RigidBodyModel& model, const std::string& joint) {
  if (!model.joint(joint).movable()) {
    throw InvalidArgument("joint '" + joint + "' is fixed and has no degree of freedom");
  }
}

double signed_area(const std::vector<Eigen::Vector2d>& v) {
  double area = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Eigen::Vector2d& a = v[i];
    const Eigen::Vector2d& b = v[(i + 1) % v.size()];
    area += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * area;
}

}  // namespace

// ---------------------------------------------------------------- masks

void AxisMask::set_axes(const std::string& axes) {
  std::vector<int> indices;
  for (char ch : axes) {
    const char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (lower < 'x' || lower > 'z') {
      throw InvalidArgument("axis mask '" + axes + "' may only contain x, y and z");
    }
    const int index = lower - 'x';
    if (std::find(indices.begin(), indices.end(), index) != indices.end()) {
      throw InvalidArgument("axis mask '" + axes + "' repeats an axis");
    }
    indices.push_back(index);
  }
  if (indices.empty()) throw InvalidArgument("axis mask must select at least one axis");
  std::sort(indices.begin(), indices.end());
  indices_ = std::move(indices);
}

std::string AxisMask::axes() const {
  std::string out;
  for (int i : indices_) out += static_cast<char>('x' + i);
  return out;
}

Placement KinematicsContext::frame(int frame_index) const {
  const Frame& f = model.frames()[static_cast<std::size_t>(frame_index)];
  return placements[static_cast<std::size_t>(f.link)] * f.local;
}

// ---------------------------------------------------------------- labels

void Labelled::configure(const std::string& name, const std::string& priority, double weight) {
  configure(name, parse_priority_kind(priority), weight);
}

void Labelled::configure(const std::string& name, Priority::Kind kind, double weight) {
  if (name.empty()) throw InvalidArgument("task and constraint names must not be empty");
  if (owner_ && owner_->name_taken(name, this)) {
    throw InvalidArgument("duplicate task or constraint label '" + name + "'");
  }
  if (kind == Priority::Kind::soft && (!(weight > 0.0) || !std::isfinite(weight))) {
    throw InvalidArgument("'" + name + "': soft weight must be positive and finite, got " + std::to_string(weight));
  }
  name_ = name;
  priority_ = {kind, kind == Priority::Kind::soft ? weight : 1.0};
}

std::string task_kind_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::position: return "position";
    case TaskKind::orientation: return "orientation";
    case TaskKind::frame: return "frame";
    case TaskKind::relative_position: return "relative_position";
    case TaskKind::relative_orientation: return "relative_orientation";
    case TaskKind::relative_frame: return "relative_frame";
    case TaskKind::com: return "com";
    case TaskKind::joints: return "joints";
    case TaskKind::gear: return "gear";
  }
  return "task";
}

std::string constraint_kind_name(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::joint_limits: return "joint_limits";
    case ConstraintKind::velocity_limits: return "velocity_limits";
    case ConstraintKind::com_polygon: return "com_polygon";
    case ConstraintKind::self_collision: return "self_collision";
  }
  return "constraint";
}

// ---------------------------------------------------------------- tasks

PositionTask::PositionTask(std::string name, int frame_, Eigen::Vector3d target_)
    : Task(std::move(name), Priority::soft(1.0)), frame(frame_), target(std::move(target_)) {}

Linearization PositionTask::linearize(const KinematicsContext& context) const {
  const Linearization full = position_rows(context, frame, target);
  return select_rows(full.J, full.e, mask);
}

OrientationTask::OrientationTask(std::string name, int frame_, const Eigen::Matrix3d& target_)
    : Task(std::move(name), Priority::soft(1.0)), frame(frame_), target(target_) {
  check_rotation(target);
}

Linearization OrientationTask::linearize(const KinematicsContext& context) const {
  const Linearization full = orientation_rows(context, frame, target);
  return select_rows(full.J, full.e, mask);
}

FrameTask::FrameTask(std::string name, int frame_, const Placement& target_)
    : Task(std::move(name), Priority::soft(1.0)), frame(frame_), target(target_) {
  check_rotation(target.rotation);
}

double FrameTask::orientation_scale() const { return orientation_scale_for(priority(), orientation_weight); }

Linearization FrameTask::linearize(const KinematicsContext& context) const {
  const Linearization p = position_rows(context, frame, target.translation);
  Linearization r = orientation_rows(context, frame, target.rotation);
  const double scale = orientation_scale();
  r.J *= scale;
  r.e *= scale;
  return stack(select_rows(p.J, p.e, position_mask), select_rows(r.J, r.e, orientation_mask));
}

RelativePositionTask::RelativePositionTask(std::string name, int a, int b, Eigen::Vector3d target_)
    : Task(std::move(name), Priority::soft(1.0)), frame_a(a), frame_b(b), target(std::move(target_)) {}

Linearization RelativePositionTask::linearize(const KinematicsContext& context) const {
  const RelativeRows rel = relative_rows(context, frame_a, frame_b);
  return select_rows(-rel.jacobian.translation, target - rel.relative.translation, mask);
}

RelativeOrientationTask::RelativeOrientationTask(std::string name, int a, int b, const Eigen::Matrix3d& target_)
    : Task(std::move(name), Priority::soft(1.0)), frame_a(a), frame_b(b), target(target_) {
  check_rotation(target);
}

Linearization RelativeOrientationTask::linearize(const KinematicsContext& context) const {
  const RelativeRows rel = relative_rows(context, frame_a, frame_b);
  const Linearization full = orientation_rows(rel.relative.rotation, target, rel.jacobian.rotation);
  return select_rows(full.J, full.e, mask);
}

RelativeFrameTask::RelativeFrameTask(std::string name, int a, int b, const Placement& target_)
    : Task(std::move(name), Priority::soft(1.0)), frame_a(a), frame_b(b), target(target_) {
  check_rotation(target.rotation);
}

double RelativeFrameTask::orientation_scale() const {
  return orientation_scale_for(priority(), orientation_weight);
}

Linearization RelativeFrameTask::linearize(const KinematicsContext& context) const {
  const RelativeRows rel = relative_rows(context, frame_a, frame_b);
  Linearization r = orientation_rows(rel.relative.rotation, target.rotation, rel.jacobian.rotation);
  const double scale = orientation_scale();
  r.J *= scale;
  r.e *= scale;
  return stack(select_rows(-rel.jacobian.translation, target.translation - rel.relative.translation, position_mask),
               select_rows(r.J, r.e, orientation_mask));
}

ComTask::ComTask(std::string name, Eigen::Vector3d target_)
    : Task(std::move(name), Priority::soft(1.0)), target(std::move(target_)) {}

Linearization ComTask::linearize(const KinematicsContext& context) const {
  return select_rows(-com_jacobian(context.model, context.q), target - com(context.model, context.q), mask);
}

JointsTask::JointsTask(std::string name, const RigidBodyModel& model)
    : Task(std::move(name), Priority::soft(1.0)), model_(model) {}

void JointsTask::set_joints(const std::map<std::string, double>& targets) {
  for (const auto& [joint, value] : targets) {
    require_movable(model_, joint);
    if (!std::isfinite(value)) throw InvalidArgument("joint target for '" + joint + "' is not finite");
  }
  targets_ = targets;
}

void JointsTask::set_joint(const std::string& joint, double target) {
  require_movable(model_, joint);
  if (!std::isfinite(target)) throw InvalidArgument("joint target for '" + joint + "' is not finite");
  targets_[joint] = target;
}

Linearization JointsTask::linearize(const KinematicsContext& context) const {
  if (targets_.empty()) throw InvalidArgument("joints task '" + name() + "' has no joint targets");
  const Eigen::Index rows = static_cast<Eigen::Index>(targets_.size());
  Linearization out{Eigen::MatrixXd::Zero(rows, context.model.nv()), Eigen::VectorXd(rows)};
  Eigen::Index r = 0;
  for (const auto& [joint, value] : targets_) {
    const int index = context.model.joint(joint).q_index;
    out.e(r) = value - context.q.joints(index);
    out.J(r, 6 + index) = -1.0;
    ++r;
  }
  return out;
}

GearTask::GearTask(std::string name, const RigidBodyModel& model)
    : Task(std::move(name), Priority::hard()), model_(model) {}

void GearTask::add_gear(const std::string& target, const std::string& source, double ratio) {
  require_movable(model_, target);
  require_movable(model_, source);
  if (target == source) throw InvalidArgument("gear '" + target + "' cannot drive itself");
  if (!std::isfinite(ratio)) throw InvalidArgument("gear ratio must be finite");
  auto it = std::find_if(gears_.begin(), gears_.end(), [&](const auto& g) { return g.first == target; });
  if (it == gears_.end()) {
    gears_.push_back({target, {}});
    it = std::prev(gears_.end());
  }
  auto source_it = std::find_if(it->second.begin(), it->second.end(), [&](const auto& s) { return s.first == source; });
  if (source_it == it->second.end()) {
    it->second.push_back({source, ratio});
  } else {
    source_it->second += ratio;
  }
}

Linearization GearTask::linearize(const KinematicsContext& context) const {
  if (gears_.empty()) throw InvalidArgument("gear task '" + name() + "' has no gears");
  const Eigen::Index rows = static_cast<Eigen::Index>(gears_.size());
  Linearization out{Eigen::MatrixXd::Zero(rows, context.model.nv()), Eigen::VectorXd(rows)};
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& [target, sources] = gears_[static_cast<std::size_t>(r)];
    const int t = context.model.joint(target).q_index;
    // e = S q - W q, J = S - W
    double e = context.q.joints(t);
    out.J(r, 6 + t) += 1.0;
    for (const auto& [source, ratio] : sources) {
      const int s = context.model.joint(source).q_index;
      e -= ratio * context.q.joints(s);
      out.J(r, 6 + s) -= ratio;
    }
    out.e(r) = e;
  }
  return out;
}

// ---------------------------------------------------------------- constraints

Linearization JointLimitsConstraint::linearize(const KinematicsContext& context, double) const {
  std::vector<std::pair<int, double>> rows;  // (increment column, signed g)
  std::vector<double> signs;
  for (const Joint& j : context.model.joints()) {
    if (!j.movable()) continue;
    const double q = context.q.joints(j.q_index);
    if (j.lower) {
      rows.push_back({6 + j.q_index, *j.lower - q});
      signs.push_back(-1.0);
    }
    if (j.upper) {
      rows.push_back({6 + j.q_index, q - *j.upper});
      signs.push_back(1.0);
    }
  }
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  Linearization out{Eigen::MatrixXd::Zero(n, context.model.nv()), Eigen::VectorXd(n)};
  for (Eigen::Index r = 0; r < n; ++r) {
    out.J(r, rows[static_cast<std::size_t>(r)].first) = signs[static_cast<std::size_t>(r)];
    out.e(r) = rows[static_cast<std::size_t>(r)].second;
  }
  return out;
}

Linearization VelocityLimitsConstraint::linearize(const KinematicsContext& context, double dt) const {
  if (!(dt > 0.0)) throw InvalidArgument("velocity limits need dt > 0, got " + std::to_string(dt));
  std::vector<std::pair<int, double>> limited;
  for (const Joint& j : context.model.joints()) {
    if (j.movable() && j.velocity) limited.push_back({6 + j.q_index, *j.velocity * dt});
  }
  const Eigen::Index n = static_cast<Eigen::Index>(limited.size());
  Linearization out{Eigen::MatrixXd::Zero(2 * n, context.model.nv()), Eigen::VectorXd(2 * n)};
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto [col, bound] = limited[static_cast<std::size_t>(r)];
    const double moved =
        context.velocity_reference ? context.q.joints(col - 6) - (*context.velocity_reference)(col - 6) : 0.0;
    out.J(2 * r, col) = 1.0;
    out.e(2 * r) = moved - bound;
    out.J(2 * r + 1, col) = -1.0;
    out.e(2 * r + 1) = -moved - bound;
  }
  return out;
}

ComPolygonConstraint::ComPolygonConstraint(std::string name, std::vector<Eigen::Vector2d> vertices, double margin)
    : KinematicConstraint(std::move(name), Priority::hard()) {
  set_polygon(std::move(vertices), margin);
}

void ComPolygonConstraint::set_polygon(std::vector<Eigen::Vector2d> vertices, double margin) {
  if (vertices.size() < 3) {
    throw InvalidArgument("support polygon needs at least 3 vertices, got " + std::to_string(vertices.size()));
  }
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (!vertices[i].allFinite()) throw InvalidArgument("support polygon vertex " + std::to_string(i) + " is not finite");
    if ((vertices[(i + 1) % vertices.size()] - vertices[i]).norm() < 1e-12) {
      throw InvalidArgument("support polygon edge " + std::to_string(i) + " has zero length");
    }
  }
  if (!(signed_area(vertices) < 0.0)) {
    throw InvalidArgument("support polygon vertices must be ordered clockwise (signed area " +
                          std::to_string(signed_area(vertices)) + ")");
  }
  if (!(margin >= 0.0) || !std::isfinite(margin)) {
    throw InvalidArgument("support polygon margin must be finite and non-negative");
  }
  vertices_ = std::move(vertices);
  margin_ = margin;
}

Eigen::Vector2d ComPolygonConstraint::normal(std::size_t i) const {
  const Eigen::Vector2d edge = vertices_[(i + 1) % vertices_.size()] - vertices_[i];
  return Eigen::Vector2d(edge.y(), -edge.x()) / edge.norm();
}

double ComPolygonConstraint::signed_margin(const Eigen::Vector2d& y) const {
  double out = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vertices_.size(); ++i) out = std::min(out, normal(i).dot(y - vertices_[i]));
  return out;
}

Linearization ComPolygonConstraint::linearize(const KinematicsContext& context, double) const {
  const Eigen::Vector2d y = com(context.model, context.q).head<2>();
  const Eigen::MatrixXd Jy = com_jacobian(context.model, context.q).topRows<2>();
  const Eigen::Index n = static_cast<Eigen::Index>(vertices_.size());
  Linearization out{Eigen::MatrixXd(n, context.model.nv()), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d normal_i = normal(static_cast<std::size_t>(i));
    out.e(i) = margin_ - normal_i.dot(y - vertices_[static_cast<std::size_t>(i)]);
    out.J.row(i) = -normal_i.transpose() * Jy;
  }
  return out;
}

SelfCollisionConstraint::SelfCollisionConstraint(std::string name, double d_min_, double d_active_)
    : KinematicConstraint(std::move(name), Priority::hard()), d_min(d_min_), d_active(d_active_) {
  if (!(d_min >= 0.0) || !std::isfinite(d_active) || !(d_active > d_min)) {
    throw InvalidArgument("self-collision needs d_active > d_min >= 0, got d_min = " + std::to_string(d_min) +
                          ", d_active = " + std::to_string(d_active));
  }
}

Linearization SelfCollisionConstraint::linearize(const KinematicsContext& context, double) const {
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> g;
  for (const CollisionPair& pair : context.model.collision_pairs()) {
    const CollisionResult r = collision_distance(context.model, context.placements, pair);
    if (r.distance > d_active) continue;
    const Eigen::MatrixXd JA = point_jacobian(context.model, context.placements, pair.link_a, r.point_a);
    const Eigen::MatrixXd JB = point_jacobian(context.model, context.placements, pair.link_b, r.point_b);
    rows.push_back(r.normal.transpose() * (JA - JB));
    g.push_back(d_min - r.distance);
  }
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  Linearization out{Eigen::MatrixXd(n, context.model.nv()), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.J.row(i) = rows[static_cast<std::size_t>(i)];
    out.e(i) = g[static_cast<std::size_t>(i)];
  }
  return out;
}

// ---------------------------------------------------------------- solver

KinematicsSolver::KinematicsSolver(const RigidBodyModel& model) : model_(model), q_(model.neutral()) {}

void KinematicsSolver::set_configuration(const Configuration& q) {
  if (q.joints.size() != model_.dof()) {
    throw DimensionError("configuration has " + std::to_string(q.joints.size()) + " joint values, expected " +
                         std::to_string(model_.dof()));
  }
  if (!q.joints.allFinite() || !q.base.translation.allFinite()) {
    throw InvalidArgument("configuration has non-finite entries");
  }
  check_rotation(q.base.rotation);
  q_ = q;
}

bool KinematicsSolver::name_taken(const std::string& name, const Labelled* self) const {
  for (const auto& t : tasks_)
    if (t.get() != self && t->name() == name) return true;
  for (const auto& c : constraints_)
    if (c.get() != self && c->name() == name) return true;
  return false;
}

std::string KinematicsSolver::fresh_name(const std::string& stem) const {
  if (!name_taken(stem, nullptr)) return stem;
  for (int i = 2;; ++i) {
    const std::string candidate = stem + "_" + std::to_string(i);
    if (!name_taken(candidate, nullptr)) return candidate;
  }
}

template <typename T>
T& KinematicsSolver::own_task(std::unique_ptr<T> task) {
  task->owner_ = this;
  T& ref = *task;
  tasks_.push_back(std::move(task));
  return ref;
}

template <typename T>
T& KinematicsSolver::own_constraint(std::unique_ptr<T> constraint) {
  constraint->owner_ = this;
  T& ref = *constraint;
  constraints_.push_back(std::move(constraint));
  return ref;
}

PositionTask& KinematicsSolver::add_position_task(const std::string& frame, const Eigen::Vector3d& target) {
  return own_task(std::make_unique<PositionTask>(fresh_name("position_" + frame), model_.frame_index(frame), target));
}

OrientationTask& KinematicsSolver::add_orientation_task(const std::string& frame, const Eigen::Matrix3d& target) {
  return own_task(
      std::make_unique<OrientationTask>(fresh_name("orientation_" + frame), model_.frame_index(frame), target));
}

FrameTask& KinematicsSolver::add_frame_task(const std::string& frame, const Placement& target) {
  return own_task(std::make_unique<FrameTask>(fresh_name("frame_" + frame), model_.frame_index(frame), target));
}

RelativePositionTask& KinematicsSolver::add_relative_position_task(const std::string& a, const std::string& b,
                                                                   const Eigen::Vector3d& target) {
  return own_task(std::make_unique<RelativePositionTask>(fresh_name("relative_position_" + a + "_" + b),
                                                         model_.frame_index(a), model_.frame_index(b), target));
}

RelativeOrientationTask& KinematicsSolver::add_relative_orientation_task(const std::string& a, const std::string& b,
                                                                         const Eigen::Matrix3d& target) {
  return own_task(std::make_unique<RelativeOrientationTask>(fresh_name("relative_orientation_" + a + "_" + b),
                                                            model_.frame_index(a), model_.frame_index(b), target));
}

RelativeFrameTask& KinematicsSolver::add_relative_frame_task(const std::string& a, const std::string& b,
                                                             const Placement& target) {
  return own_task(std::make_unique<RelativeFrameTask>(fresh_name("relative_frame_" + a + "_" + b),
                                                      model_.frame_index(a), model_.frame_index(b), target));
}

ComTask& KinematicsSolver::add_com_task(const Eigen::Vector3d& target) {
  return own_task(std::make_unique<ComTask>(fresh_name("com"), target));
}

JointsTask& KinematicsSolver::add_joints_task() {
  return own_task(std::make_unique<JointsTask>(fresh_name("joints"), model_));
}

GearTask& KinematicsSolver::add_gear_task() { return own_task(std::make_unique<GearTask>(fresh_name("gear"), model_)); }

ComPolygonConstraint& KinematicsSolver::add_com_polygon_constraint(std::vector<Eigen::Vector2d> vertices,
                                                                   double margin) {
  return own_constraint(std::make_unique<ComPolygonConstraint>(fresh_name("com_polygon"), std::move(vertices), margin));
}

SelfCollisionConstraint& KinematicsSolver::add_self_collision_constraint(double d_min, double d_active) {
  if (model_.collision_pairs().empty()) {
    throw InvalidArgument("model '" + model_.name() + "' declares no collision pairs");
  }
  return own_constraint(std::make_unique<SelfCollisionConstraint>(fresh_name("self_collision"), d_min, d_active));
}

JointLimitsConstraint& KinematicsSolver::enable_joint_limits(bool enable) {
  for (const auto& c : constraints_) {
    if (auto* existing = dynamic_cast<JointLimitsConstraint*>(c.get())) {
      existing->enabled = enable;
      return *existing;
    }
  }
  auto c = std::unique_ptr<JointLimitsConstraint>(new JointLimitsConstraint(fresh_name("joint_limits"), Priority::hard()));
  c->enabled = enable;
  return own_constraint(std::move(c));
}

VelocityLimitsConstraint& KinematicsSolver::enable_velocity_limits(bool enable) {
  for (const auto& c : constraints_) {
    if (auto* existing = dynamic_cast<VelocityLimitsConstraint*>(c.get())) {
      existing->enabled = enable;
      return *existing;
    }
  }
  auto c = std::unique_ptr<VelocityLimitsConstraint>(
      new VelocityLimitsConstraint(fresh_name("velocity_limits"), Priority::hard()));
  c->enabled = enable;
  return own_constraint(std::move(c));
}

Task& KinematicsSolver::task(const std::string& name) {
  for (const auto& t : tasks_)
    if (t->name() == name) return *t;
  throw UnknownNameError(name, "unknown task '" + name + "'");
}

KinematicConstraint& KinematicsSolver::constraint(const std::string& name) {
  for (const auto& c : constraints_)
    if (c->name() == name) return *c;
  throw UnknownNameError(name, "unknown constraint '" + name + "'");
}

void KinematicsSolver::remove_task(const std::string& name) {
  const auto it = std::find_if(tasks_.begin(), tasks_.end(), [&](const auto& t) { return t->name() == name; });
  if (it == tasks_.end()) throw UnknownNameError(name, "unknown task '" + name + "'");
  tasks_.erase(it);
}

Assembly KinematicsSolver::assemble() const {
  if (!(settings_.epsilon > 0.0)) throw InvalidArgument("regularization epsilon must be positive");
  const KinematicsContext context{model_, q_, link_placements(model_, q_),
                                  velocity_reference_ ? &*velocity_reference_ : nullptr};
  Assembly out;
  Problem& problem = out.problem;
  problem.settings().regularization = 0.0;
  problem.settings().use_qr_reduction = settings_.use_qr_reduction;
  problem.settings().max_iterations = settings_.max_iterations;
  out.dq = problem.add_variable(model_.nv());
  const Expression dq = out.dq.expr();

  problem.add_objective(dq, settings_.epsilon, "regularization");
  if (settings_.mask_floating_base) {
    problem.add_constraint(out.dq.expr(0, 6) == 0.0, "floating_base");
  }

  for (const auto& task : tasks_) {
    Linearization lin = task->linearize(context);
    const Expression expr(lin.J, lin.e);
    if (task->priority().is_soft()) {
      problem.add_objective(expr, task->priority().weight, task->name());
    } else {
      problem.add_constraint(expr == 0.0, task->name());
    }
    out.tasks.push_back(std::move(lin));
  }
  for (const auto& constraint : constraints_) {
    Linearization lin = constraint->enabled ? constraint->linearize(context, settings_.dt)
                                            : Linearization{Eigen::MatrixXd(0, model_.nv()), Eigen::VectorXd(0)};
    if (lin.e.size() > 0) {
      Constraint& c = problem.add_constraint(Expression(lin.J, lin.e) <= 0.0, constraint->name());
      c.configure(constraint->priority().kind, constraint->priority().weight);
    }
    out.constraints.push_back(std::move(lin));
  }

  const CompiledProblem compiled = problem.compile();
  out.dimensions.variables = compiled.qp.variables();
  out.dimensions.equalities = compiled.qp.equalities();
  out.dimensions.inequalities = compiled.qp.inequalities();
  for (const SlackBlock& s : compiled.slacks) out.dimensions.slack += s.variable.size;
  out.dimensions.reduced = out.dimensions.variables;
  return out;
}

IkReport KinematicsSolver::solve() const {
  const Assembly assembly = assemble();
  const ProblemSolution solution = assembly.problem.solve();
  IkReport report;
  report.dq = solution.x;
  report.iterations = solution.iterations;
  report.kkt_residual = solution.kkt_residual;
  report.dimensions = assembly.dimensions;
  report.dimensions.reduced = solution.solved_dimension;

  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    const Linearization& lin = assembly.tasks[i];
    const Eigen::VectorXd after = lin.e + lin.J * report.dq;
    report.tasks.push_back({tasks_[i]->name(), tasks_[i]->kind(), tasks_[i]->priority(), lin.e.norm(), after.norm(),
                            after.size() ? after.cwiseAbs().maxCoeff() : 0.0});
  }
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const Linearization& lin = assembly.constraints[i];
    ConstraintStatus status;
    status.name = constraints_[i]->name();
    status.kind = constraints_[i]->kind();
    status.priority = constraints_[i]->priority();
    status.rows = lin.e.size();
    status.violation_before = lin.e.size() ? lin.e.maxCoeff() : -std::numeric_limits<double>::infinity();
    status.violation_after =
        lin.e.size() ? (lin.e + lin.J * report.dq).maxCoeff() : -std::numeric_limits<double>::infinity();
    for (const ConstraintReport& c : solution.constraints) {
      if (c.name == status.name) {
        status.active_rows = c.active_rows;
        status.slack = c.slack;
      }
    }
    report.constraints.push_back(std::move(status));
  }
  return report;
}

void KinematicsSolver::set_velocity_reference(const Eigen::VectorXd& joints) {
  if (joints.size() != model_.dof()) {
    throw DimensionError("velocity reference has " + std::to_string(joints.size()) + " values, expected " +
                         std::to_string(model_.dof()));
  }
  velocity_reference_ = joints;
}

const IkReport& KinematicsSolver::step() {
  IkReport report = solve();
  q_ = integrate_config(q_, report.dq);
  last_ = std::move(report);
  return *last_;
}

}  // namespace taskqp
