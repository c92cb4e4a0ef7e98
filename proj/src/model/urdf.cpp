#include "taskqp/model/urdf.hpp"

#include "taskqp/errors.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace taskqp {

namespace {

namespace pt = boost::property_tree;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError(ModelErrorKind::invalid, path, "cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::optional<std::string> attribute(const pt::ptree& node, const std::string& name) {
  if (auto v = node.get_optional<std::string>("<xmlattr>." + name)) return *v;
  return std::nullopt;
}

double parse_number(const std::string& text, const std::string& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ModelError(ModelErrorKind::invalid, path, "expected a number, got '" + text + "'");
  }
}

Eigen::Vector3d parse_triple(const std::string& text, const std::string& path) {
  std::istringstream in(text);
  std::vector<std::string> tokens;
  std::string token;
  while (in >> token) tokens.push_back(token);
  if (tokens.size() != 3) throw ModelError(ModelErrorKind::invalid, path, "expected 3 numbers, got '" + text + "'");
  return {parse_number(tokens[0], path), parse_number(tokens[1], path), parse_number(tokens[2], path)};
}

Placement parse_origin(const pt::ptree& parent, const std::string& path) {
  const auto origin = parent.get_child_optional("origin");
  if (!origin) return Placement::identity();
  const std::string p = path + "/origin";
  Eigen::Vector3d xyz = Eigen::Vector3d::Zero();
  Eigen::Vector3d rpy = Eigen::Vector3d::Zero();
  if (auto v = attribute(*origin, "xyz")) xyz = parse_triple(*v, p + "/@xyz");
  if (auto v = attribute(*origin, "rpy")) rpy = parse_triple(*v, p + "/@rpy");
  return Placement::from_xyz_rpy(xyz, rpy);
}

std::string required_attribute(const pt::ptree& node, const std::string& name, const std::string& path) {
  auto v = attribute(node, name);
  if (!v || v->empty()) throw ModelError(ModelErrorKind::invalid, path, "missing attribute '" + name + "'");
  return *v;
}

Link parse_link(const pt::ptree& node, std::size_t ordinal) {
  Link link;
  link.name = required_attribute(node, "name", "robot/link[" + std::to_string(ordinal + 1) + "]");
  const std::string path = "robot/link[@name='" + link.name + "']";
  if (const auto inertial = node.get_child_optional("inertial")) {
    const std::string ip = path + "/inertial";
    link.com = parse_origin(*inertial, ip).translation;
    if (const auto mass = inertial->get_child_optional("mass")) {
      link.mass = parse_number(required_attribute(*mass, "value", ip + "/mass"), ip + "/mass/@value");
    }
    if (const auto inertia = inertial->get_child_optional("inertia")) {
      auto get = [&](const char* key) {
        auto v = attribute(*inertia, key);
        return v ? parse_number(*v, ip + "/inertia/@" + key) : 0.0;
      };
      const double ixx = get("ixx"), ixy = get("ixy"), ixz = get("ixz");
      const double iyy = get("iyy"), iyz = get("iyz"), izz = get("izz");
      link.inertia << ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz;
    }
  }
  return link;
}

Joint parse_joint(const pt::ptree& node, std::size_t ordinal,
                  const std::unordered_map<std::string, int>& links) {
  Joint joint;
  joint.name = required_attribute(node, "name", "robot/joint[" + std::to_string(ordinal + 1) + "]");
  const std::string path = "robot/joint[@name='" + joint.name + "']";
  const std::string type = required_attribute(node, "type", path);
  if (type == "revolute") {
    joint.type = JointType::revolute;
  } else if (type == "continuous") {
    joint.type = JointType::continuous;
  } else if (type == "prismatic") {
    joint.type = JointType::prismatic;
  } else if (type == "fixed") {
    joint.type = JointType::fixed;
  } else {
    throw ModelError(ModelErrorKind::unsupported_joint, path + "/@type",
                     "unsupported joint type '" + type + "' (supported: revolute, continuous, prismatic, fixed)");
  }

  auto link_reference = [&](const char* element) {
    const auto child = node.get_child_optional(element);
    const std::string p = path + "/" + element;
    if (!child) throw ModelError(ModelErrorKind::invalid, p, "missing element");
    const std::string name = required_attribute(*child, "link", p);
    const auto it = links.find(name);
    if (it == links.end()) {
      throw ModelError(ModelErrorKind::dangling_reference, p + "/@link", "no link named '" + name + "'");
    }
    return it->second;
  };
  joint.parent_link = link_reference("parent");
  joint.child_link = link_reference("child");
  joint.origin = parse_origin(node, path);
  if (const auto axis = node.get_child_optional("axis")) {
    if (auto v = attribute(*axis, "xyz")) joint.axis = parse_triple(*v, path + "/axis/@xyz");
  }
  if (const auto limit = node.get_child_optional("limit")) {
    const std::string lp = path + "/limit";
    if (joint.type == JointType::revolute || joint.type == JointType::prismatic) {
      joint.lower = attribute(*limit, "lower") ? parse_number(*attribute(*limit, "lower"), lp + "/@lower") : 0.0;
      joint.upper = attribute(*limit, "upper") ? parse_number(*attribute(*limit, "upper"), lp + "/@upper") : 0.0;
    }
    if (auto v = attribute(*limit, "velocity")) joint.velocity = parse_number(*v, lp + "/@velocity");
  }
  return joint;
}

Eigen::Vector3d json_triple(const nlohmann::json& j, const char* key, const Eigen::Vector3d& fallback,
                            const std::string& path) {
  if (!j.contains(key)) return fallback;
  const nlohmann::json& v = j.at(key);
  if (!v.is_array() || v.size() != 3) {
    throw ModelError(ModelErrorKind::invalid, path + "/" + key, "expected an array of 3 numbers");
  }
  Eigen::Vector3d out;
  for (int i = 0; i < 3; ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number()) {
      throw ModelError(ModelErrorKind::invalid, path + "/" + key, "expected an array of 3 numbers");
    }
    out(i) = v[static_cast<std::size_t>(i)].get<double>();
  }
  return out;
}

double json_number(const nlohmann::json& j, const char* key, const std::string& path) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ModelError(ModelErrorKind::invalid, path + "/" + key, "expected a number");
  }
  return j.at(key).get<double>();
}

}  // namespace

RigidBodyModel load_urdf(const std::string& xml_text) {
  pt::ptree tree;
  try {
    std::istringstream in(xml_text);
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ModelError(ModelErrorKind::malformed_xml, "line " + std::to_string(e.line()),
                     "malformed XML: " + e.message());
  }
  const auto robot = tree.get_child_optional("robot");
  if (!robot) throw ModelError(ModelErrorKind::malformed_xml, "/", "root element must be <robot>");
  const std::string name = attribute(*robot, "name").value_or("robot");

  std::vector<Link> links;
  std::unordered_map<std::string, int> link_lookup;
  for (const auto& [tag, node] : *robot) {
    if (tag != "link") continue;
    Link link = parse_link(node, links.size());
    if (!link_lookup.emplace(link.name, static_cast<int>(links.size())).second) {
      throw ModelError(ModelErrorKind::duplicate_name, "robot/link[@name='" + link.name + "']",
                       "duplicate link name");
    }
    links.push_back(std::move(link));
  }
  std::vector<Joint> joints;
  for (const auto& [tag, node] : *robot) {
    if (tag == "joint") joints.push_back(parse_joint(node, joints.size(), link_lookup));
  }
  return RigidBodyModel(name, std::move(links), std::move(joints));
}

RigidBodyModel load_urdf_file(const std::string& path) { return load_urdf(read_file(path)); }

void load_collision_sidecar(RigidBodyModel& model, const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError(ModelErrorKind::malformed_xml, "collision", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ModelError(ModelErrorKind::invalid, "collision", "expected a JSON object");

  auto unknown_link = [&](const std::string& link, const std::string& path) {
    try {
      model.link_index(link);
    } catch (const UnknownNameError&) {
      throw ModelError(ModelErrorKind::dangling_reference, path, "no link named '" + link + "'");
    }
  };

  if (doc.contains("links")) {
    for (const auto& [link, primitives] : doc.at("links").items()) {
      const std::string lp = "collision/links/" + link;
      unknown_link(link, lp);
      if (!primitives.is_array()) throw ModelError(ModelErrorKind::invalid, lp, "expected an array of primitives");
      for (std::size_t i = 0; i < primitives.size(); ++i) {
        const nlohmann::json& p = primitives[i];
        const std::string pp = lp + "[" + std::to_string(i) + "]";
        CollisionPrimitive prim;
        prim.local = Placement::from_xyz_rpy(json_triple(p, "xyz", Eigen::Vector3d::Zero(), pp),
                                             json_triple(p, "rpy", Eigen::Vector3d::Zero(), pp));
        if (p.contains("sphere")) {
          prim.kind = CollisionPrimitive::Kind::sphere;
          prim.radius = json_number(p.at("sphere"), "radius", pp + "/sphere");
        } else if (p.contains("capsule")) {
          const nlohmann::json& c = p.at("capsule");
          prim.kind = CollisionPrimitive::Kind::capsule;
          prim.radius = json_number(c, "radius", pp + "/capsule");
          prim.half_length = json_number(c, "half_length", pp + "/capsule");
          prim.axis = json_triple(c, "axis", Eigen::Vector3d::UnitZ(), pp + "/capsule");
        } else {
          throw ModelError(ModelErrorKind::invalid, pp, "primitive must be 'sphere' or 'capsule'");
        }
        model.add_collision_primitive(link, prim);
      }
    }
  }
  if (doc.contains("pairs")) {
    const nlohmann::json& pairs = doc.at("pairs");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const std::string pp = "collision/pairs[" + std::to_string(i) + "]";
      const nlohmann::json& pair = pairs[i];
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string()) {
        throw ModelError(ModelErrorKind::invalid, pp, "expected a pair of link names");
      }
      const auto a = pair[0].get<std::string>();
      const auto b = pair[1].get<std::string>();
      unknown_link(a, pp);
      unknown_link(b, pp);
      model.add_collision_pair(a, b);
    }
  }
  if (doc.contains("frames")) {
    for (const nlohmann::json& f : doc.at("frames")) {
      const std::string fp = "collision/frames";
      if (!f.contains("name") || !f.contains("link")) {
        throw ModelError(ModelErrorKind::invalid, fp, "frame needs 'name' and 'link'");
      }
      const auto link = f.at("link").get<std::string>();
      unknown_link(link, fp);
      model.add_frame(f.at("name").get<std::string>(), link,
                      Placement::from_xyz_rpy(json_triple(f, "xyz", Eigen::Vector3d::Zero(), fp),
                                              json_triple(f, "rpy", Eigen::Vector3d::Zero(), fp)));
    }
  }
}

void load_collision_sidecar_file(RigidBodyModel& model, const std::string& path) {
  load_collision_sidecar(model, read_file(path));
}

}  // namespace taskqp
