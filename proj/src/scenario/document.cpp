#include "document.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace taskqp::scenario::detail {

namespace {

std::string type_name(const json& j) {
  switch (j.type()) {
    case json::value_t::null: return "null";
    case json::value_t::object: return "an object";
    case json::value_t::array: return "an array";
    case json::value_t::string: return "a string";
    case json::value_t::boolean: return "a boolean";
    case json::value_t::number_integer:
    case json::value_t::number_unsigned:
    case json::value_t::number_float: return "a number";
    default: return "an unsupported value";
  }
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

}  // namespace

void Node::fail(const std::string& what) const { throw ScenarioError(path_, what); }

bool Node::has(const std::string& key) const { return value_->is_object() && value_->contains(key); }

Node Node::at(const std::string& key) const {
  if (!value_->is_object()) fail("expected an object, got " + type_name(*value_));
  auto it = value_->find(key);
  if (it == value_->end()) fail("missing required entry '" + key + "'");
  return Node(*it, join(path_, key));
}

std::optional<Node> Node::find(const std::string& key) const {
  if (!value_->is_object()) fail("expected an object, got " + type_name(*value_));
  auto it = value_->find(key);
  if (it == value_->end() || it->is_null()) return std::nullopt;
  return Node(*it, join(path_, key));
}

Node Node::at(std::size_t index) const {
  if (!value_->is_array() || index >= value_->size()) fail("index " + std::to_string(index) + " out of range");
  return Node((*value_)[index], path_ + "[" + std::to_string(index) + "]");
}

std::size_t Node::size() const {
  if (!value_->is_array()) fail("expected an array, got " + type_name(*value_));
  return value_->size();
}

void Node::allow_keys(std::initializer_list<const char*> allowed) const {
  if (!value_->is_object()) fail("expected an object, got " + type_name(*value_));
  for (auto it = value_->begin(); it != value_->end(); ++it) {
    const bool known =
        std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; });
    if (!known) Node(*it, join(path_, it.key())).fail("unknown entry");
  }
}

std::vector<std::string> Node::keys() const {
  if (!value_->is_object()) fail("expected an object, got " + type_name(*value_));
  std::vector<std::string> out;
  for (auto it = value_->begin(); it != value_->end(); ++it) out.push_back(it.key());
  return out;
}

double Node::number() const {
  if (!value_->is_number()) fail("expected a number, got " + type_name(*value_));
  const double v = value_->get<double>();
  if (!std::isfinite(v)) fail("expected a finite number");
  return v;
}

double Node::positive() const {
  const double v = number();
  if (!(v > 0.0)) fail("must be positive, got " + value_->dump());
  return v;
}

double Node::nonnegative() const {
  const double v = number();
  if (v < 0.0) fail("must be non-negative, got " + value_->dump());
  return v;
}

long long Node::integer() const {
  if (!value_->is_number_integer()) fail("expected an integer, got " + value_->dump());
  return value_->get<long long>();
}

bool Node::boolean() const {
  if (!value_->is_boolean()) fail("expected a boolean, got " + type_name(*value_));
  return value_->get<bool>();
}

std::string Node::string() const {
  if (!value_->is_string()) fail("expected a string, got " + type_name(*value_));
  return value_->get<std::string>();
}

Eigen::VectorXd Node::vector(Eigen::Index n) const {
  const std::size_t len = size();
  if (n >= 0 && static_cast<Eigen::Index>(len) != n) {
    fail("expected " + std::to_string(n) + " numbers, got " + std::to_string(len));
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(len));
  for (std::size_t i = 0; i < len; ++i) out(static_cast<Eigen::Index>(i)) = at(i).number();
  return out;
}

std::vector<std::string> Node::strings() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).string());
  return out;
}

double Node::number_or(const std::string& key, double fallback) const {
  const auto n = find(key);
  return n ? n->number() : fallback;
}

long long Node::integer_or(const std::string& key, long long fallback) const {
  const auto n = find(key);
  return n ? n->integer() : fallback;
}

bool Node::boolean_or(const std::string& key, bool fallback) const {
  const auto n = find(key);
  return n ? n->boolean() : fallback;
}

std::string Node::string_or(const std::string& key, const std::string& fallback) const {
  const auto n = find(key);
  return n ? n->string() : fallback;
}

std::string Document::resolve_path(const std::string& path) const {
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

Eigen::VectorXd Signal::at(double t) const {
  if (times.size() == 1 || t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times.begin());
  const double s = (t - times[i - 1]) / (times[i] - times[i - 1]);
  return (1.0 - s) * values[i - 1] + s * values[i];
}

std::optional<ExitCode> failure_code(const std::exception& error) {
  if (dynamic_cast<const InfeasibleError*>(&error)) return ExitCode::infeasible;
  if (dynamic_cast<const NonConvergenceError*>(&error)) return ExitCode::nonconvergence;
  return std::nullopt;
}

}  // namespace taskqp::scenario::detail
