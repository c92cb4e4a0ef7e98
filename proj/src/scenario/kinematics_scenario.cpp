#include "document.hpp"

#include "taskqp/model/algorithms.hpp"
#include "taskqp/model/spatial.hpp"
#include "taskqp/model/urdf.hpp"
#include "taskqp/qp_dump.hpp"
#include "taskqp/qr_reduction.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>

namespace taskqp::scenario::detail {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

/// Re-targets one task at time t.
struct Binding {
  std::function<void(double)> apply;
  /// Waypoint times of the target, {0} for constant targets.
  std::vector<double> times{0.0};
};

enum class CheckKind { hard_tasks, stationary, task_error, polygon_margin, collision_distance, velocity_limits, joint_limits };

struct CheckSpec {
  CheckKind kind;
  std::string kind_name;
  std::string subject;
  std::vector<std::string> frames;
  std::string at = "every";
  double limit = 0.0;
};

struct Setup {
  std::shared_ptr<const RigidBodyModel> model;
  std::unique_ptr<KinematicsSolver> solver;
  std::vector<Binding> bindings;  // parallel to solver->tasks()

  double dt = 0.0;
  int steps = 0;
  double tolerance = 1e-10;
  int max_iterations = 50;
  int settle_iterations = 0;

  std::vector<std::string> output_frames;
  bool output_com = false;
  bool output_tasks = false;
  bool output_constraints = false;

  std::vector<CheckSpec> checks;

  void apply_targets(double t) const {
    for (const Binding& b : bindings) {
      if (b.apply) b.apply(t);
    }
  }
};

/// "current", a value, or {"waypoints": [{"time", "value"}], "relative"}.
/// "current" is a zero offset relative to the initial configuration.
struct TargetSpec {
  bool relative = false;
  Signal signal;
};

TargetSpec read_target(const Node& n, const std::function<Eigen::VectorXd(const Node&)>& value, Eigen::Index dim) {
  TargetSpec out;
  if (n.is_string()) {
    if (n.string() != "current") n.fail("expected \"current\", a value or a waypoint list");
    out.relative = true;
    out.signal = {{0.0}, {Eigen::VectorXd::Zero(dim)}};
    return out;
  }
  if (n.is_object() && n.has("waypoints")) {
    n.allow_keys({"waypoints", "relative"});
    out.relative = n.boolean_or("relative", false);
    const Node list = n.at("waypoints");
    if (list.size() == 0) list.fail("needs at least one waypoint");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const Node w = list.at(i);
      w.allow_keys({"time", "value"});
      const double time = w.at("time").nonnegative();
      if (!out.signal.times.empty() && !(time > out.signal.times.back())) {
        w.at("time").fail("waypoint times must be strictly increasing");
      }
      out.signal.times.push_back(time);
      out.signal.values.push_back(value(w.at("value")));
    }
    return out;
  }
  out.signal = {{0.0}, {value(n)}};
  return out;
}

Eigen::VectorXd read_vec3(const Node& n) { return n.vector(3); }

/// {"xyz": [...], "rpy": [...]} as a 6-vector, both parts optional.
Eigen::VectorXd read_pose(const Node& n) {
  n.allow_keys({"xyz", "rpy"});
  Eigen::VectorXd out = Eigen::VectorXd::Zero(6);
  if (auto xyz = n.find("xyz")) out.head<3>() = xyz->vector(3);
  if (auto rpy = n.find("rpy")) out.tail<3>() = rpy->vector(3);
  return out;
}

Eigen::VectorXd read_scalar(const Node& n) { return Eigen::VectorXd::Constant(1, n.number()); }

Binding bind_vector(const TargetSpec& spec, const Eigen::Vector3d& base, std::function<void(const Eigen::Vector3d&)> set) {
  Binding b;
  b.times = spec.signal.times;
  b.apply = [signal = spec.signal, relative = spec.relative, base, set](double t) {
    const Eigen::Vector3d v = signal.at(t);
    set(relative ? Eigen::Vector3d(base + v) : v);
  };
  return b;
}

Binding bind_rotation(const TargetSpec& spec, const Eigen::Matrix3d& base, std::function<void(const Eigen::Matrix3d&)> set) {
  Binding b;
  b.times = spec.signal.times;
  b.apply = [signal = spec.signal, relative = spec.relative, base, set](double t) {
    const Eigen::Matrix3d r = rpy_to_matrix(signal.at(t));
    set(relative ? Eigen::Matrix3d(base * r) : r);
  };
  return b;
}

Binding bind_pose(const TargetSpec& spec, const Placement& base, std::function<void(const Placement&)> set) {
  Binding b;
  b.times = spec.signal.times;
  b.apply = [signal = spec.signal, relative = spec.relative, base, set](double t) {
    const Eigen::VectorXd v = signal.at(t);
    const Eigen::Matrix3d r = rpy_to_matrix(v.tail<3>());
    Placement p;
    p.translation = relative ? Eigen::Vector3d(base.translation + v.head<3>()) : Eigen::Vector3d(v.head<3>());
    p.rotation = relative ? Eigen::Matrix3d(base.rotation * r) : r;
    set(p);
  };
  return b;
}

std::string frame_name(const Node& n, const RigidBodyModel& model) {
  const std::string name = n.string();
  if (!model.has_frame(name)) n.fail("unknown frame '" + name + "'");
  return name;
}

const Joint& movable_joint(const Node& n, const std::string& name, const RigidBodyModel& model) {
  int index = -1;
  try {
    index = model.joint_index(name);
  } catch (const UnknownNameError&) {
    n.fail("unknown joint '" + name + "'");
  }
  const Joint& j = model.joints()[static_cast<std::size_t>(index)];
  if (!j.movable()) n.fail("joint '" + name + "' is fixed");
  return j;
}

void read_mask(AxisMask& mask, const Node& n) {
  try {
    mask.set_axes(n.string());
  } catch (const InvalidArgument& e) {
    n.fail(e.what());
  }
}

void configure(Labelled& item, const Node& n, bool hard_by_default) {
  const std::string priority = n.string_or("priority", hard_by_default ? "hard" : "soft");
  if (priority != "hard" && priority != "soft") n.at("priority").fail("expected \"hard\" or \"soft\"");
  if (priority == "hard" && n.has("weight")) n.at("weight").fail("hard items take no weight");
  const double weight = n.find("weight") ? n.at("weight").positive() : 1.0;
  const std::string name = n.string_or("name", item.name());
  if (name.empty()) n.at("name").fail("must not be empty");
  try {
    item.configure(name, priority, weight);
  } catch (const InvalidArgument& e) {
    n.fail(e.what());
  }
}

Binding add_task(const Node& n, Setup& s, const Configuration& q0) {
  const RigidBodyModel& m = *s.model;
  KinematicsSolver& solver = *s.solver;
  const std::string kind = n.at("kind").string();
  Binding binding;
  Task* task = nullptr;

  if (kind == "position") {
    n.allow_keys({"kind", "name", "priority", "weight", "frame", "target", "mask"});
    const std::string frame = frame_name(n.at("frame"), m);
    const TargetSpec spec = read_target(n.at("target"), read_vec3, 3);
    const Eigen::Vector3d base = frame_placement(m, q0, frame).translation;
    PositionTask& t = solver.add_position_task(frame, base);
    binding = bind_vector(spec, base, [&t](const Eigen::Vector3d& v) { t.target = v; });
    if (auto mask = n.find("mask")) read_mask(t.mask, *mask);
    task = &t;
  } else if (kind == "orientation") {
    n.allow_keys({"kind", "name", "priority", "weight", "frame", "target", "mask"});
    const std::string frame = frame_name(n.at("frame"), m);
    const TargetSpec spec = read_target(n.at("target"), read_vec3, 3);
    const Eigen::Matrix3d base = frame_placement(m, q0, frame).rotation;
    OrientationTask& t = solver.add_orientation_task(frame, base);
    binding = bind_rotation(spec, base, [&t](const Eigen::Matrix3d& r) { t.target = r; });
    if (auto mask = n.find("mask")) read_mask(t.mask, *mask);
    task = &t;
  } else if (kind == "frame") {
    n.allow_keys({"kind", "name", "priority", "weight", "frame", "target", "position_mask", "orientation_mask",
                  "orientation_weight"});
    const std::string frame = frame_name(n.at("frame"), m);
    const TargetSpec spec = read_target(n.at("target"), read_pose, 6);
    const Placement base = frame_placement(m, q0, frame);
    FrameTask& t = solver.add_frame_task(frame, base);
    binding = bind_pose(spec, base, [&t](const Placement& p) { t.target = p; });
    if (auto mask = n.find("position_mask")) read_mask(t.position_mask, *mask);
    if (auto mask = n.find("orientation_mask")) read_mask(t.orientation_mask, *mask);
    if (auto w = n.find("orientation_weight")) t.orientation_weight = w->positive();
    task = &t;
  } else if (kind == "relative_position" || kind == "relative_orientation" || kind == "relative_frame") {
    const bool is_frame = kind == "relative_frame";
    if (is_frame) {
      n.allow_keys({"kind", "name", "priority", "weight", "frame_a", "frame_b", "target", "position_mask",
                    "orientation_mask", "orientation_weight"});
    } else {
      n.allow_keys({"kind", "name", "priority", "weight", "frame_a", "frame_b", "target", "mask"});
    }
    const std::string a = frame_name(n.at("frame_a"), m);
    const std::string b = frame_name(n.at("frame_b"), m);
    const Placement base = relative_placement(m, q0, a, b);
    if (kind == "relative_position") {
      const TargetSpec spec = read_target(n.at("target"), read_vec3, 3);
      RelativePositionTask& t = solver.add_relative_position_task(a, b, base.translation);
      binding = bind_vector(spec, base.translation, [&t](const Eigen::Vector3d& v) { t.target = v; });
      if (auto mask = n.find("mask")) read_mask(t.mask, *mask);
      task = &t;
    } else if (kind == "relative_orientation") {
      const TargetSpec spec = read_target(n.at("target"), read_vec3, 3);
      RelativeOrientationTask& t = solver.add_relative_orientation_task(a, b, base.rotation);
      binding = bind_rotation(spec, base.rotation, [&t](const Eigen::Matrix3d& r) { t.target = r; });
      if (auto mask = n.find("mask")) read_mask(t.mask, *mask);
      task = &t;
    } else {
      const TargetSpec spec = read_target(n.at("target"), read_pose, 6);
      RelativeFrameTask& t = solver.add_relative_frame_task(a, b, base);
      binding = bind_pose(spec, base, [&t](const Placement& p) { t.target = p; });
      if (auto mask = n.find("position_mask")) read_mask(t.position_mask, *mask);
      if (auto mask = n.find("orientation_mask")) read_mask(t.orientation_mask, *mask);
      if (auto w = n.find("orientation_weight")) t.orientation_weight = w->positive();
      task = &t;
    }
  } else if (kind == "com") {
    n.allow_keys({"kind", "name", "priority", "weight", "target", "mask"});
    const TargetSpec spec = read_target(n.at("target"), read_vec3, 3);
    const Eigen::Vector3d base = com(m, q0);
    ComTask& t = solver.add_com_task(base);
    binding = bind_vector(spec, base, [&t](const Eigen::Vector3d& v) { t.target = v; });
    if (auto mask = n.find("mask")) read_mask(t.mask, *mask);
    task = &t;
  } else if (kind == "joints") {
    n.allow_keys({"kind", "name", "priority", "weight", "joints"});
    const Node joints = n.at("joints");
    const std::vector<std::string> names = joints.keys();
    if (names.empty()) joints.fail("needs at least one joint");
    JointsTask& t = solver.add_joints_task();
    std::vector<std::function<void(double)>> setters;
    std::vector<double> times;
    for (const std::string& name : names) {
      const Node entry = joints.at(name);
      const Joint& j = movable_joint(entry, name, m);
      const TargetSpec spec = read_target(entry, read_scalar, 1);
      const double base = q0.joints(j.q_index);
      setters.push_back([&t, name, base, spec](double time) {
        const double v = spec.signal.at(time)(0);
        t.set_joint(name, spec.relative ? base + v : v);
      });
      times.insert(times.end(), spec.signal.times.begin(), spec.signal.times.end());
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    binding.times = times;
    binding.apply = [setters](double time) {
      for (const auto& set : setters) set(time);
    };
    task = &t;
  } else if (kind == "gear") {
    n.allow_keys({"kind", "name", "priority", "weight", "gears"});
    const Node gears = n.at("gears");
    if (gears.size() == 0) gears.fail("needs at least one gear");
    GearTask& t = solver.add_gear_task();
    for (std::size_t i = 0; i < gears.size(); ++i) {
      const Node g = gears.at(i);
      g.allow_keys({"target", "source", "ratio"});
      const std::string target = g.at("target").string();
      const std::string source = g.at("source").string();
      movable_joint(g.at("target"), target, m);
      movable_joint(g.at("source"), source, m);
      try {
        t.add_gear(target, source, g.at("ratio").number());
      } catch (const InvalidArgument& e) {
        g.fail(e.what());
      }
    }
    task = &t;
  } else {
    n.at("kind").fail("unknown task kind '" + kind + "'");
  }
  configure(*task, n, kind == "gear");
  return binding;
}

void add_constraint(const Node& n, Setup& s, const Configuration& q0) {
  const RigidBodyModel& m = *s.model;
  KinematicsSolver& solver = *s.solver;
  const std::string kind = n.at("kind").string();
  KinematicConstraint* c = nullptr;
  if (kind == "joint_limits") {
    n.allow_keys({"kind", "name", "priority", "weight"});
    c = &solver.enable_joint_limits();
  } else if (kind == "velocity_limits") {
    n.allow_keys({"kind", "name", "priority", "weight"});
    c = &solver.enable_velocity_limits();
  } else if (kind == "com_polygon") {
    n.allow_keys({"kind", "name", "priority", "weight", "vertices", "frames", "margin"});
    std::vector<Eigen::Vector2d> vertices;
    if (n.has("vertices") == n.has("frames")) n.fail("give exactly one of 'vertices' or 'frames'");
    if (auto v = n.find("vertices")) {
      for (std::size_t i = 0; i < v->size(); ++i) vertices.push_back(v->at(i).vector(2));
    } else {
      const Node frames = n.at("frames");
      for (std::size_t i = 0; i < frames.size(); ++i) {
        const std::string f = frame_name(frames.at(i), m);
        vertices.push_back(frame_placement(m, q0, f).translation.head<2>());
      }
    }
    const double margin = n.find("margin") ? n.at("margin").nonnegative() : 0.0;
    try {
      c = &solver.add_com_polygon_constraint(vertices, margin);
    } catch (const InvalidArgument& e) {
      n.fail(e.what());
    }
  } else if (kind == "self_collision") {
    n.allow_keys({"kind", "name", "priority", "weight", "d_min", "d_active"});
    try {
      c = &solver.add_self_collision_constraint(n.at("d_min").number(), n.at("d_active").number());
    } catch (const InvalidArgument& e) {
      n.fail(e.what());
    }
  } else {
    n.at("kind").fail("unknown constraint kind '" + kind + "'");
  }
  configure(*c, n, true);
}

Configuration read_initial(const Node& root, const RigidBodyModel& m, std::uint64_t seed) {
  Configuration q = m.neutral();
  const auto init = root.find("initial");
  if (!init) return q;
  init->allow_keys({"base", "joints", "noise"});
  if (auto base = init->find("base")) {
    base->allow_keys({"xyz", "rpy"});
    const Eigen::Vector3d xyz = base->find("xyz") ? Eigen::Vector3d(base->at("xyz").vector(3)) : Eigen::Vector3d::Zero();
    const Eigen::Vector3d rpy = base->find("rpy") ? Eigen::Vector3d(base->at("rpy").vector(3)) : Eigen::Vector3d::Zero();
    q.base = Placement::from_xyz_rpy(xyz, rpy);
  }
  if (auto joints = init->find("joints")) {
    for (const std::string& name : joints->keys()) {
      const Node entry = joints->at(name);
      q.joints(movable_joint(entry, name, m).q_index) = entry.number();
    }
  }
  if (auto noise = init->find("noise")) {
    const double amplitude = noise->nonnegative();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-amplitude, amplitude);
    for (Eigen::Index i = 0; i < q.joints.size(); ++i) q.joints(i) += uniform(rng);
  }
  return q;
}

CheckSpec read_check(const Node& n, const Setup& s) {
  CheckSpec c;
  c.kind_name = n.at("kind").string();
  const std::string& kind = c.kind_name;
  auto need_constraint = [&](ConstraintKind expected) {
    c.subject = n.at("constraint").string();
    try {
      if (s.solver->constraint(c.subject).kind() != expected) {
        n.at("constraint").fail("constraint '" + c.subject + "' is not a " + constraint_kind_name(expected) + " constraint");
      }
    } catch (const UnknownNameError&) {
      n.at("constraint").fail("unknown constraint '" + c.subject + "'");
    }
  };
  if (kind == "hard_tasks") {
    n.allow_keys({"kind", "tolerance"});
    c.kind = CheckKind::hard_tasks;
    c.limit = n.at("tolerance").nonnegative();
  } else if (kind == "stationary") {
    n.allow_keys({"kind", "frames", "tolerance"});
    c.kind = CheckKind::stationary;
    const Node frames = n.at("frames");
    if (frames.size() == 0) frames.fail("needs at least one frame");
    for (std::size_t i = 0; i < frames.size(); ++i) c.frames.push_back(frame_name(frames.at(i), *s.model));
    c.limit = n.at("tolerance").nonnegative();
  } else if (kind == "task_error") {
    n.allow_keys({"kind", "task", "at", "max"});
    c.kind = CheckKind::task_error;
    c.subject = n.at("task").string();
    try {
      s.solver->task(c.subject);
    } catch (const UnknownNameError&) {
      n.at("task").fail("unknown task '" + c.subject + "'");
    }
    c.at = n.string_or("at", "every");
    if (c.at != "every" && c.at != "final" && c.at != "waypoints") {
      n.at("at").fail("expected \"every\", \"final\" or \"waypoints\"");
    }
    c.limit = n.at("max").nonnegative();
  } else if (kind == "polygon_margin") {
    n.allow_keys({"kind", "constraint", "tolerance"});
    c.kind = CheckKind::polygon_margin;
    need_constraint(ConstraintKind::com_polygon);
    c.limit = n.at("tolerance").nonnegative();
  } else if (kind == "collision_distance") {
    n.allow_keys({"kind", "constraint", "tolerance"});
    c.kind = CheckKind::collision_distance;
    need_constraint(ConstraintKind::self_collision);
    c.limit = n.at("tolerance").nonnegative();
  } else if (kind == "velocity_limits") {
    n.allow_keys({"kind", "tolerance"});
    c.kind = CheckKind::velocity_limits;
    c.limit = n.at("tolerance").nonnegative();
  } else if (kind == "joint_limits") {
    n.allow_keys({"kind", "tolerance"});
    c.kind = CheckKind::joint_limits;
    c.limit = n.at("tolerance").nonnegative();
  } else {
    n.at("kind").fail("unknown check kind '" + kind + "'");
  }
  return c;
}

Setup build(const Document& doc, const RunOptions& options) {
  const Node root = doc.node();
  Setup s;
  s.model = doc.model;
  const RigidBodyModel& m = *s.model;

  const std::uint64_t seed =
      options.seed ? *options.seed : static_cast<std::uint64_t>(root.find("seed") ? root.at("seed").integer() : 0);
  const Configuration q0 = read_initial(root, m, seed);
  s.solver = std::make_unique<KinematicsSolver>(m);
  try {
    s.solver->set_configuration(q0);
  } catch (const Error& e) {
    root.at("initial").fail(e.what());
  }

  if (auto settings = root.find("settings")) {
    settings->allow_keys({"epsilon", "mask_floating_base", "use_qr_reduction", "max_qp_iterations"});
    KinematicsSettings& k = s.solver->settings();
    if (auto eps = settings->find("epsilon")) k.epsilon = eps->positive();
    k.mask_floating_base = settings->boolean_or("mask_floating_base", false);
    k.use_qr_reduction = settings->boolean_or("use_qr_reduction", true);
    if (auto it = settings->find("max_qp_iterations")) {
      if (it->integer() < 1) it->fail("must be >= 1");
      k.max_iterations = static_cast<int>(it->integer());
    }
  }

  const Node run = root.at("run");
  run.allow_keys({"dt", "steps", "tolerance", "max_iterations", "settle_iterations"});
  s.dt = run.at("dt").positive();
  const long long steps = run.at("steps").integer();
  if (steps < 1) run.at("steps").fail("must be >= 1");
  s.steps = static_cast<int>(steps);
  if (auto tol = run.find("tolerance")) s.tolerance = tol->positive();
  if (auto it = run.find("max_iterations")) {
    if (it->integer() < 1) it->fail("must be >= 1");
    s.max_iterations = static_cast<int>(it->integer());
  }
  if (auto it = run.find("settle_iterations")) {
    if (it->integer() < 0) it->fail("must be >= 0");
    s.settle_iterations = static_cast<int>(it->integer());
  }
  s.solver->settings().dt = s.dt;

  const Node tasks = root.at("tasks");
  if (tasks.size() == 0) tasks.fail("scenario declares no tasks");
  for (std::size_t i = 0; i < tasks.size(); ++i) s.bindings.push_back(add_task(tasks.at(i), s, q0));
  if (auto constraints = root.find("constraints")) {
    for (std::size_t i = 0; i < constraints->size(); ++i) add_constraint(constraints->at(i), s, q0);
  }

  if (auto outputs = root.find("outputs")) {
    outputs->allow_keys({"frames", "com", "tasks", "constraints"});
    if (auto frames = outputs->find("frames")) {
      for (std::size_t i = 0; i < frames->size(); ++i) s.output_frames.push_back(frame_name(frames->at(i), m));
    }
    s.output_com = outputs->boolean_or("com", false);
    s.output_tasks = outputs->boolean_or("tasks", false);
    s.output_constraints = outputs->boolean_or("constraints", false);
  }
  if (auto checks = root.find("checks")) {
    for (std::size_t i = 0; i < checks->size(); ++i) s.checks.push_back(read_check(checks->at(i), s));
  }

  if (options.max_steps) s.steps = std::min(s.steps, std::max(*options.max_steps, 1));
  if (options.tolerance) s.tolerance = *options.tolerance;

  s.apply_targets(0.0);
  // Linearize once so anything that only fails at evaluation time (empty
  // masks, missing collision primitives) is reported as invalid input.
  try {
    s.solver->assemble();
  } catch (const InfeasibleError&) {
    throw;
  } catch (const Error& e) {
    throw ScenarioError("", e.what());
  }
  return s;
}

/// Joints with a q index, in index order.
std::vector<const Joint*> movable_joints(const RigidBodyModel& m) {
  std::vector<const Joint*> out(static_cast<std::size_t>(m.dof()), nullptr);
  for (const Joint& j : m.joints()) {
    if (j.movable()) out[static_cast<std::size_t>(j.q_index)] = &j;
  }
  return out;
}

struct Record {
  int step = 0;
  double time = 0.0;
  Configuration q;
  std::vector<double> task_errors;
};

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double min_distance(const RigidBodyModel& m, const Configuration& q) {
  double d = inf;
  for (const CollisionPair& pair : m.collision_pairs()) d = std::min(d, collision_distance(m, q, pair).distance);
  return d;
}

/// Largest |dq_j| - v_j dt between consecutive records, and the usage ratio.
std::pair<double, double> velocity_excess(const RigidBodyModel& m, const Configuration& a, const Configuration& b,
                                          double dt) {
  double excess = -inf;
  double usage = 0.0;
  for (const Joint& j : m.joints()) {
    if (!j.movable() || !j.velocity) continue;
    const double moved = std::abs(b.joints(j.q_index) - a.joints(j.q_index));
    excess = std::max(excess, moved - *j.velocity * dt);
    usage = std::max(usage, moved / (*j.velocity * dt));
  }
  return {excess, usage};
}

/// Largest bound violation (negative: clearance) over bounded joints.
double limit_violation(const RigidBodyModel& m, const Configuration& q) {
  double worst = -inf;
  for (const Joint& j : m.joints()) {
    if (!j.movable()) continue;
    const double v = q.joints(j.q_index);
    if (j.lower) worst = std::max(worst, *j.lower - v);
    if (j.upper) worst = std::max(worst, v - *j.upper);
  }
  return worst;
}

std::vector<std::string> make_header(const Setup& s) {
  const RigidBodyModel& m = *s.model;
  std::vector<std::string> h{"step", "time", "base.x", "base.y", "base.z", "base.qw", "base.qx", "base.qy", "base.qz"};
  for (const Joint* j : movable_joints(m)) h.push_back("q." + j->name);
  for (const std::string& f : s.output_frames) {
    for (const char* axis : {".x", ".y", ".z"}) h.push_back(f + axis);
  }
  if (s.output_com) h.insert(h.end(), {"com.x", "com.y", "com.z"});
  if (s.output_tasks) {
    for (const auto& t : s.solver->tasks()) h.push_back("task." + t->name() + ".error");
  }
  if (s.output_constraints) {
    for (const auto& c : s.solver->constraints()) {
      switch (c->kind()) {
        case ConstraintKind::com_polygon: h.push_back("constraint." + c->name() + ".margin"); break;
        case ConstraintKind::self_collision: h.push_back("constraint." + c->name() + ".distance"); break;
        case ConstraintKind::velocity_limits: h.push_back("constraint." + c->name() + ".usage"); break;
        case ConstraintKind::joint_limits: h.push_back("constraint." + c->name() + ".violation"); break;
      }
    }
  }
  return h;
}

std::vector<double> make_row(const Setup& s, const Record& r, const Record* previous) {
  const RigidBodyModel& m = *s.model;
  const Eigen::Quaterniond quat(r.q.base.rotation);
  std::vector<double> row{static_cast<double>(r.step), r.time,      r.q.base.translation.x(), r.q.base.translation.y(),
                          r.q.base.translation.z(),    quat.w(),    quat.x(),                 quat.y(),
                          quat.z()};
  for (Eigen::Index i = 0; i < r.q.joints.size(); ++i) row.push_back(r.q.joints(i));
  for (const std::string& f : s.output_frames) {
    const Eigen::Vector3d p = frame_placement(m, r.q, f).translation;
    row.insert(row.end(), {p.x(), p.y(), p.z()});
  }
  if (s.output_com) {
    const Eigen::Vector3d c = com(m, r.q);
    row.insert(row.end(), {c.x(), c.y(), c.z()});
  }
  if (s.output_tasks) row.insert(row.end(), r.task_errors.begin(), r.task_errors.end());
  if (s.output_constraints) {
    for (const auto& c : s.solver->constraints()) {
      switch (c->kind()) {
        case ConstraintKind::com_polygon:
          row.push_back(static_cast<const ComPolygonConstraint&>(*c).signed_margin(com(m, r.q).head<2>()));
          break;
        case ConstraintKind::self_collision: row.push_back(min_distance(m, r.q)); break;
        case ConstraintKind::velocity_limits:
          row.push_back(previous ? velocity_excess(m, previous->q, r.q, s.dt).second
                                 : std::numeric_limits<double>::quiet_NaN());
          break;
        case ConstraintKind::joint_limits: row.push_back(limit_violation(m, r.q)); break;
      }
    }
  }
  return row;
}

std::vector<double> task_errors(const Setup& s) {
  const KinematicsSolver& solver = *s.solver;
  const KinematicsContext context{solver.model(), solver.configuration(),
                                  link_placements(solver.model(), solver.configuration())};
  std::vector<double> out;
  for (const auto& t : solver.tasks()) out.push_back(max_abs(t->linearize(context).e));
  return out;
}

std::size_t task_position(const Setup& s, const std::string& name) {
  const auto& tasks = s.solver->tasks();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i]->name() == name) return i;
  }
  throw UnknownNameError(name, "unknown task '" + name + "'");
}

CheckOutcome evaluate(const CheckSpec& c, const Setup& s, const std::vector<Record>& records) {
  const RigidBodyModel& m = *s.model;
  CheckOutcome out;
  out.kind = c.kind_name;
  out.subject = c.subject;
  out.limit = c.limit;
  // Track the maximum of `value` (or the minimum when `lower_is_worse`).
  auto track = [&](double value, int step, bool lower_is_worse = false) {
    const bool worse = out.step < 0 || (lower_is_worse ? value < out.worst : value > out.worst);
    if (worse) {
      out.worst = value;
      out.step = step;
    }
  };
  switch (c.kind) {
    case CheckKind::hard_tasks: {
      out.subject = "hard tasks";
      out.worst = 0.0;
      const auto& tasks = s.solver->tasks();
      for (const Record& r : records) {
        for (std::size_t i = 0; i < tasks.size(); ++i) {
          if (!tasks[i]->priority().is_soft()) track(r.task_errors[i], r.step);
        }
      }
      out.passed = out.worst <= c.limit;
      break;
    }
    case CheckKind::stationary: {
      std::string joined;
      for (const std::string& f : c.frames) joined += (joined.empty() ? "" : ",") + f;
      out.subject = joined;
      std::vector<Eigen::Vector3d> start;
      for (const std::string& f : c.frames) start.push_back(frame_placement(m, records.front().q, f).translation);
      for (const Record& r : records) {
        for (std::size_t i = 0; i < c.frames.size(); ++i) {
          track((frame_placement(m, r.q, c.frames[i]).translation - start[i]).cwiseAbs().maxCoeff(), r.step);
        }
      }
      out.passed = out.worst <= c.limit;
      break;
    }
    case CheckKind::task_error: {
      const std::size_t index = task_position(s, c.subject);
      out.subject = c.subject + " (" + c.at + ")";
      if (c.at == "final") {
        track(records.back().task_errors[index], records.back().step);
      } else if (c.at == "every") {
        for (const Record& r : records) track(r.task_errors[index], r.step);
      } else {
        for (double w : s.bindings[index].times) {
          const double k = std::round(w / s.dt);
          if (std::abs(k * s.dt - w) > 1e-9 * s.dt || k > records.back().step) continue;
          const Record& r = records[static_cast<std::size_t>(k)];
          track(r.task_errors[index], r.step);
        }
      }
      out.passed = out.step >= 0 && out.worst <= c.limit;
      break;
    }
    case CheckKind::polygon_margin: {
      const auto& polygon = static_cast<const ComPolygonConstraint&>(s.solver->constraint(c.subject));
      for (const Record& r : records) track(polygon.signed_margin(com(m, r.q).head<2>()), r.step, true);
      out.limit = polygon.margin() - c.limit;
      out.passed = out.worst >= out.limit;
      break;
    }
    case CheckKind::collision_distance: {
      const auto& collision = static_cast<const SelfCollisionConstraint&>(s.solver->constraint(c.subject));
      for (const Record& r : records) track(min_distance(m, r.q), r.step, true);
      out.limit = collision.d_min - c.limit;
      out.passed = out.worst >= out.limit;
      break;
    }
    case CheckKind::velocity_limits: {
      out.subject = "all joints";
      out.worst = -inf;
      for (std::size_t k = 1; k < records.size(); ++k) {
        track(velocity_excess(m, records[k - 1].q, records[k].q, s.dt).first, records[k].step);
      }
      out.passed = out.worst <= c.limit;
      break;
    }
    case CheckKind::joint_limits: {
      out.subject = "all joints";
      for (const Record& r : records) track(limit_violation(m, r.q), r.step);
      out.passed = out.worst <= c.limit;
      break;
    }
  }
  return out;
}

std::string step_file(const std::string& dir, int step) {
  char name[32];
  std::snprintf(name, sizeof(name), "step_%04d.qp", step);
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

void validate_kinematics(Document& doc) {
  const Node root = doc.node();
  root.allow_keys({"name", "kind", "model", "collision", "initial", "seed", "settings", "tasks", "constraints", "run",
                   "outputs", "checks"});
  const std::string model_path = doc.resolve_path(root.at("model").string());
  auto model = std::make_shared<RigidBodyModel>(load_urdf_file(model_path));
  if (auto collision = root.find("collision")) load_collision_sidecar_file(*model, doc.resolve_path(collision->string()));
  doc.model = std::move(model);
  build(doc, {});
}

QpDimensions check_kinematics(const Document& doc, const RunOptions& options) {
  const Setup s = build(doc, options);
  const Assembly assembly = s.solver->assemble();
  QpDimensions dims = assembly.dimensions;
  if (s.solver->settings().use_qr_reduction && dims.equalities > 0) {
    const EqualityFilter filter = drop_redundant_equalities(assembly.problem.compile().qp);
    dims.reduced = dims.variables - filter.qp.equalities();
  }
  return dims;
}

RunOutcome run_kinematics(const Document& doc, const RunOptions& options) {
  Setup s = build(doc, options);
  KinematicsSolver& solver = *s.solver;
  RunOutcome out;
  out.trajectory.header = make_header(s);
  std::vector<Record> records;
  int max_inner = 0;
  double max_kkt = 0.0;
  bool have_dimensions = false;

  if (options.dump_qp_dir) std::filesystem::create_directories(*options.dump_qp_dir);

  auto solve_once = [&](int step, bool first) {
    if (first && options.dump_qp_dir) {
      write_qp_dump(step_file(*options.dump_qp_dir, step), solver.assemble().problem.compile().qp);
    }
    const IkReport& report = solver.step();
    ++out.solves;
    max_kkt = std::max(max_kkt, report.kkt_residual);
    if (!have_dimensions) {
      out.dimensions = report.dimensions;
      have_dimensions = true;
    }
    return max_abs(report.dq);
  };
  auto record = [&](int step, double time) {
    Record r{step, time, solver.configuration(), task_errors(s)};
    out.trajectory.rows.push_back(make_row(s, r, records.empty() ? nullptr : &records.back()));
    out.configurations.push_back(r.q);
    records.push_back(std::move(r));
  };

  int step = 0;
  try {
    s.apply_targets(0.0);
    for (int i = 0; i < s.settle_iterations; ++i) {
      if (solve_once(0, i == 0) <= s.tolerance) break;
    }
    record(0, 0.0);
    for (step = 1; step <= s.steps; ++step) {
      const double t = step * s.dt;
      s.apply_targets(t);
      solver.set_velocity_reference(solver.configuration().joints);
      double change = inf;
      int iterations = 0;
      while (iterations < s.max_iterations && change > s.tolerance) {
        change = solve_once(step, iterations == 0);
        ++iterations;
      }
      solver.clear_velocity_reference();
      max_inner = std::max(max_inner, iterations);
      if (change > s.tolerance) {
        char buffer[160];
        std::snprintf(buffer, sizeof(buffer), "max |dq| = %.3g after %d iterations (tolerance %.3g)", change,
                      iterations, s.tolerance);
        throw NonConvergenceError(buffer);
      }
      record(step, t);
    }
  } catch (const Error& e) {
    const auto code = failure_code(e);
    if (!code) throw;
    out.code = *code;
    out.message = "step " + std::to_string(step) + ": " + e.what();
    return out;
  }

  int failed = 0;
  for (const CheckSpec& c : s.checks) {
    out.checks.push_back(evaluate(c, s, records));
    if (!out.checks.back().passed) ++failed;
  }
  if (failed > 0) {
    out.code = ExitCode::checks_failed;
    out.message = std::to_string(failed) + " of " + std::to_string(s.checks.size()) + " checks failed";
  } else {
    out.message = "completed " + std::to_string(s.steps) + " steps";
  }
  out.metrics.push_back({"max_inner_iterations", max_inner});
  out.metrics.push_back({"max_kkt_residual", max_kkt});
  const auto& tasks = solver.tasks();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    out.metrics.push_back({"final_error." + tasks[i]->name(), records.back().task_errors[i]});
  }
  return out;
}

}  // namespace taskqp::scenario::detail
