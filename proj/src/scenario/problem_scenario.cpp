#include "document.hpp"

#include "taskqp/integrator.hpp"
#include "taskqp/problem.hpp"
#include "taskqp/qp_dump.hpp"
#include "taskqp/qr_reduction.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

namespace taskqp::scenario::detail {

namespace {

enum class CheckKind { constraints, kkt };

struct CheckSpec {
  CheckKind kind;
  std::string kind_name;
  double limit = 0.0;
};

struct Setup {
  Problem problem;
  std::optional<Integrator> integrator;
  std::vector<std::string> state_names;
  std::string input_name = "u";
  int samples = 1;
  std::vector<CheckSpec> checks;
};

/// The expression picked by exactly one of "step", "time" or "input",
/// narrowed to "row" when given.
Expression select(const Node& n, const Integrator& integ) {
  const int given = int(n.has("step")) + int(n.has("time")) + int(n.has("input"));
  if (given != 1) n.fail("give exactly one of 'step', 'time' or 'input'");
  std::optional<Eigen::Index> row;
  if (auto r = n.find("row")) {
    const long long v = r->integer();
    if (v < 0 || v >= integ.system().states()) r->fail("row out of range");
    row = v;
  }
  if (auto step = n.find("step")) {
    const long long k = step->integer();
    if (k < 0 || k > integ.steps()) step->fail("step out of range [0, " + std::to_string(integ.steps()) + "]");
    return row ? integ.expr(k, *row) : integ.state(k);
  }
  if (auto time = n.find("time")) {
    const double t = time->nonnegative();
    if (t > integ.steps() * integ.dt() * (1.0 + 1e-12)) time->fail("time beyond the horizon");
    return row ? integ.expr_t(t, *row) : integ.state_t(t);
  }
  const Node input = n.at("input");
  if (row) n.at("row").fail("'row' does not apply to inputs");
  const long long k = input.integer();
  if (k < 0 || k >= integ.steps()) input.fail("input step out of range");
  return integ.input(k);
}

Eigen::VectorXd read_value(const Node& n, Eigen::Index rows) {
  if (n.value().is_number()) return Eigen::VectorXd::Constant(rows, n.number());
  return n.vector(rows);
}

Setup build(const Document& doc) {
  const Node root = doc.node();
  root.allow_keys({"name", "kind", "integrator", "objectives", "constraints", "settings", "checks", "outputs"});
  Setup s;

  const Node in = root.at("integrator");
  in.allow_keys({"order", "dt", "steps", "initial_state", "state_names", "input_name"});
  const long long order = in.at("order").integer();
  if (order < 1) in.at("order").fail("must be >= 1");
  const double dt = in.at("dt").positive();
  const long long steps = in.at("steps").integer();
  if (steps < 1) in.at("steps").fail("must be >= 1");
  const Eigen::VectorXd y0 = in.find("initial_state") ? in.at("initial_state").vector(order)
                                                        : Eigen::VectorXd::Zero(order);
  if (auto names = in.find("state_names")) {
    s.state_names = names->strings();
    if (static_cast<long long>(s.state_names.size()) != order) names->fail("needs one name per state");
  } else {
    for (long long i = 0; i < order; ++i) s.state_names.push_back("y" + std::to_string(i));
  }
  s.input_name = in.string_or("input_name", "u");

  const Variable input = s.problem.add_variable(steps);
  s.integrator.emplace(input, y0, static_cast<int>(order), dt, steps);
  const Integrator& integ = *s.integrator;

  if (auto settings = root.find("settings")) {
    settings->allow_keys({"regularization", "use_qr_reduction", "max_qp_iterations"});
    ProblemSettings& p = s.problem.settings();
    if (auto r = settings->find("regularization")) p.regularization = r->nonnegative();
    p.use_qr_reduction = settings->boolean_or("use_qr_reduction", true);
    if (auto it = settings->find("max_qp_iterations")) {
      if (it->integer() < 1) it->fail("must be >= 1");
      p.max_iterations = static_cast<int>(it->integer());
    }
  }

  std::size_t declared = 0;
  if (auto objectives = root.find("objectives")) {
    for (std::size_t i = 0; i < objectives->size(); ++i) {
      const Node o = objectives->at(i);
      o.allow_keys({"name", "weight", "step", "time", "input", "inputs", "row", "target"});
      Expression e;
      if (o.has("inputs")) {
        if (o.at("inputs").string() != "all") o.at("inputs").fail("expected \"all\"");
        if (o.has("step") || o.has("time") || o.has("input") || o.has("row")) o.fail("'inputs' stands alone");
        e = input.expr();
      } else {
        e = select(o, integ);
      }
      if (auto target = o.find("target")) e = e - read_value(*target, e.rows());
      const double weight = o.find("weight") ? o.at("weight").positive() : 1.0;
      s.problem.add_objective(e, weight, o.string_or("name", "objective_" + std::to_string(i)));
      ++declared;
    }
  }
  if (auto constraints = root.find("constraints")) {
    for (std::size_t i = 0; i < constraints->size(); ++i) {
      const Node c = constraints->at(i);
      c.allow_keys({"name", "step", "time", "input", "row", "relation", "value", "priority", "weight"});
      const Expression e = select(c, integ);
      const Eigen::VectorXd value = read_value(c.at("value"), e.rows());
      const std::string relation = c.at("relation").string();
      ConstraintExpr expr;
      if (relation == "<=") {
        expr = e <= value;
      } else if (relation == ">=") {
        expr = e >= value;
      } else if (relation == "==") {
        expr = e == value;
      } else {
        c.at("relation").fail("expected \"<=\", \">=\" or \"==\"");
      }
      Constraint& added = s.problem.add_constraint(expr, c.string_or("name", "constraint_" + std::to_string(i)));
      const std::string priority = c.string_or("priority", "hard");
      if (priority == "soft") {
        added.configure(Priority::Kind::soft, c.find("weight") ? c.at("weight").positive() : 1.0);
      } else if (priority != "hard") {
        c.at("priority").fail("expected \"hard\" or \"soft\"");
      } else if (c.has("weight")) {
        c.at("weight").fail("hard items take no weight");
      }
      ++declared;
    }
  }
  if (declared == 0) root.fail("scenario declares no objectives or constraints");

  if (auto outputs = root.find("outputs")) {
    outputs->allow_keys({"samples_per_step"});
    const long long samples = outputs->integer_or("samples_per_step", 1);
    if (samples < 1) outputs->at("samples_per_step").fail("must be >= 1");
    s.samples = static_cast<int>(samples);
  }
  if (auto checks = root.find("checks")) {
    for (std::size_t i = 0; i < checks->size(); ++i) {
      const Node c = checks->at(i);
      c.allow_keys({"kind", "tolerance"});
      CheckSpec spec;
      spec.kind_name = c.at("kind").string();
      if (spec.kind_name == "constraints") {
        spec.kind = CheckKind::constraints;
      } else if (spec.kind_name == "kkt") {
        spec.kind = CheckKind::kkt;
      } else {
        c.at("kind").fail("unknown check kind '" + spec.kind_name + "'");
      }
      spec.limit = c.at("tolerance").nonnegative();
      s.checks.push_back(spec);
    }
  }
  return s;
}

}  // namespace

void validate_problem(const Document& doc) { build(doc); }

QpDimensions check_problem(const Document& doc, const RunOptions&) {
  const Setup s = build(doc);
  const CompiledProblem compiled = s.problem.compile();
  QpDimensions dims;
  dims.variables = compiled.qp.variables();
  dims.equalities = compiled.qp.equalities();
  dims.inequalities = compiled.qp.inequalities();
  for (const SlackBlock& b : compiled.slacks) dims.slack += b.variable.size;
  dims.reduced = dims.variables;
  if (s.problem.settings().use_qr_reduction && dims.equalities > 0) {
    dims.reduced = dims.variables - drop_redundant_equalities(compiled.qp).qp.equalities();
  }
  return dims;
}

RunOutcome run_problem(const Document& doc, const RunOptions& options) {
  const Setup s = build(doc);
  const Integrator& integ = *s.integrator;
  RunOutcome out;
  out.dimensions = check_problem(doc, options);
  if (options.dump_qp_dir) {
    std::filesystem::create_directories(*options.dump_qp_dir);
    write_qp_dump((std::filesystem::path(*options.dump_qp_dir) / "problem.qp").string(), s.problem.compile().qp);
  }

  ProblemSolution solution;
  try {
    solution = s.problem.solve();
  } catch (const Error& e) {
    const auto code = failure_code(e);
    if (!code) throw;
    out.code = *code;
    out.message = e.what();
    return out;
  }
  out.solves = 1;

  Trajectory& traj = out.trajectory;
  traj.header = {"step", "time"};
  traj.header.insert(traj.header.end(), s.state_names.begin(), s.state_names.end());
  traj.header.push_back(s.input_name);
  const Eigen::Index samples = static_cast<Eigen::Index>(integ.steps()) * s.samples;
  for (Eigen::Index j = 0; j <= samples; ++j) {
    const Eigen::Index k = j / s.samples;
    const bool on_step = j % s.samples == 0;
    const double t = on_step ? static_cast<double>(k) * integ.dt()
                             : static_cast<double>(j) * integ.dt() / static_cast<double>(s.samples);
    const Eigen::VectorXd y = on_step ? integ.state(k).value(solution.x) : integ.state_t(t).value(solution.x);
    std::vector<double> row{static_cast<double>(j), t};
    for (Eigen::Index i = 0; i < y.size(); ++i) row.push_back(y(i));
    row.push_back(k < integ.steps() ? integ.input(k).value(solution.x)(0) : std::numeric_limits<double>::quiet_NaN());
    traj.rows.push_back(std::move(row));
  }

  int failed = 0;
  for (const CheckSpec& c : s.checks) {
    CheckOutcome o;
    o.kind = c.kind_name;
    o.limit = options.tolerance ? *options.tolerance : c.limit;
    if (c.kind == CheckKind::constraints) {
      o.subject = "all constraints";
      o.worst = 0.0;
      for (std::size_t i = 0; i < solution.constraints.size(); ++i) {
        if (!s.problem.constraints()[i].priority().is_soft()) o.worst = std::max(o.worst, solution.constraints[i].violation);
      }
    } else {
      o.subject = "solver";
      o.worst = solution.kkt_residual;
    }
    o.passed = o.worst <= o.limit;
    if (!o.passed) ++failed;
    out.checks.push_back(o);
  }
  out.metrics.push_back({"cost", solution.cost});
  out.metrics.push_back({"kkt_residual", solution.kkt_residual});
  out.metrics.push_back({"iterations", solution.iterations});
  for (const ConstraintReport& r : solution.constraints) out.metrics.push_back({"violation." + r.name, r.violation});
  if (failed > 0) {
    out.code = ExitCode::checks_failed;
    out.message = std::to_string(failed) + " of " + std::to_string(s.checks.size()) + " checks failed";
  } else {
    out.message = "solved";
  }
  return out;
}

}  // namespace taskqp::scenario::detail
