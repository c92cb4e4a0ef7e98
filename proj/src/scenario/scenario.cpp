#include "taskqp/scenario/scenario.hpp"

#include "document.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace taskqp::scenario {

struct Scenario::Impl {
  detail::Document doc;
};

Scenario::Scenario(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Scenario::Scenario(Scenario&&) noexcept = default;
Scenario& Scenario::operator=(Scenario&&) noexcept = default;
Scenario::~Scenario() = default;

Scenario Scenario::parse(const std::string& text, const std::string& base_dir, const std::string& default_name) {
  auto impl = std::make_unique<Impl>();
  detail::Document& doc = impl->doc;
  doc.base_dir = base_dir;
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw ScenarioError("", "empty scenario");
  try {
    doc.root = detail::json::parse(text);
  } catch (const detail::json::parse_error& e) {
    throw ScenarioError("", std::string("malformed JSON: ") + e.what());
  }
  const detail::Node root = doc.node();
  if (!root.is_object()) root.fail("a scenario must be a JSON object");
  if (doc.root.empty()) throw ScenarioError("", "empty scenario");
  doc.name = root.string_or("name", default_name);
  if (doc.name.empty()) root.at("name").fail("must not be empty");
  doc.kind = root.string_or("kind", "kinematics");
  if (doc.kind == "kinematics") {
    detail::validate_kinematics(doc);
  } else if (doc.kind == "problem") {
    detail::validate_problem(doc);
  } else {
    root.at("kind").fail("expected \"kinematics\" or \"problem\", got \"" + doc.kind + "\"");
  }
  return Scenario(std::move(impl));
}

Scenario Scenario::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("", "cannot open scenario file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  const std::filesystem::path p(path);
  return parse(text.str(), p.parent_path().string(), p.stem().string());
}

const std::string& Scenario::name() const { return impl_->doc.name; }
const std::string& Scenario::kind() const { return impl_->doc.kind; }
const RigidBodyModel* Scenario::model() const { return impl_->doc.model.get(); }

QpDimensions Scenario::check(const RunOptions& options) const {
  return impl_->doc.kind == "problem" ? detail::check_problem(impl_->doc, options)
                                      : detail::check_kinematics(impl_->doc, options);
}

RunOutcome Scenario::run(const RunOptions& options) const {
  return impl_->doc.kind == "problem" ? detail::run_problem(impl_->doc, options)
                                      : detail::run_kinematics(impl_->doc, options);
}

std::size_t Trajectory::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw UnknownNameError(name, "trajectory has no column '" + name + "'");
}

std::string format_csv(const Trajectory& trajectory) {
  std::string out;
  for (std::size_t i = 0; i < trajectory.header.size(); ++i) {
    if (i) out += ',';
    out += trajectory.header[i];
  }
  out += '\n';
  char buffer[32];
  for (const std::vector<double>& row : trajectory.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      if (std::isnan(row[i])) continue;
      std::snprintf(buffer, sizeof(buffer), "%.17g", row[i]);
      out += buffer;
    }
    out += '\n';
  }
  return out;
}

namespace {

const char* code_name(ExitCode code) {
  switch (code) {
    case ExitCode::pass: return "pass";
    case ExitCode::checks_failed: return "checks_failed";
    case ExitCode::invalid: return "invalid";
    case ExitCode::infeasible: return "infeasible";
    case ExitCode::nonconvergence: return "nonconvergence";
  }
  return "unknown";
}

/// JSON has no infinities or NaN.
nlohmann::ordered_json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

std::string format_diagnostics(const Scenario& scenario, const RunOutcome& outcome) {
  nlohmann::ordered_json j;
  j["scenario"] = scenario.name();
  j["kind"] = scenario.kind();
  j["status"] = code_name(outcome.code);
  j["exit_code"] = static_cast<int>(outcome.code);
  j["message"] = outcome.message;
  j["records"] = outcome.trajectory.rows.size();
  j["solves"] = outcome.solves;
  j["dimensions"] = {{"variables", outcome.dimensions.variables},
                     {"equalities", outcome.dimensions.equalities},
                     {"inequalities", outcome.dimensions.inequalities},
                     {"slack", outcome.dimensions.slack},
                     {"reduced", outcome.dimensions.reduced}};
  j["checks"] = nlohmann::ordered_json::array();
  for (const CheckOutcome& c : outcome.checks) {
    nlohmann::ordered_json entry;
    entry["kind"] = c.kind;
    entry["subject"] = c.subject;
    entry["passed"] = c.passed;
    entry["worst"] = number(c.worst);
    entry["limit"] = number(c.limit);
    if (c.step >= 0) entry["step"] = c.step;
    j["checks"].push_back(entry);
  }
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  for (const auto& [name, value] : outcome.metrics) metrics[name] = number(value);
  j["metrics"] = metrics;
  return j.dump(2) + "\n";
}

}  // namespace taskqp::scenario
