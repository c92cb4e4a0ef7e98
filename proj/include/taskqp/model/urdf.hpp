#pragma once

#include "taskqp/model/model.hpp"

#include <string>

namespace taskqp {

/// Parses the URDF subset: robot, link, joint, origin, axis, limit,
/// inertial, mass (and inertia). Other elements are ignored. Joint types:
/// revolute, continuous, prismatic, fixed.
///
/// Throws ModelError with kind malformed_xml, dangling_reference, cycle,
/// unsupported_joint, duplicate_name or invalid, and the element path.
RigidBodyModel load_urdf(const std::string& xml_text);
RigidBodyModel load_urdf_file(const std::string& path);

/// Collision sidecar (JSON):
///   {
///     "links": {
///       "<link>": [
///         {"sphere": {"radius": r}, "xyz": [..], "rpy": [..]},
///         {"capsule": {"radius": r, "half_length": l, "axis": [..]}, "xyz": [..]}
///       ]
///     },
///     "pairs": [["<link a>", "<link b>"], ...],
///     "frames": [{"name": "..", "link": "..", "xyz": [..], "rpy": [..]}]
///   }
/// "frames" is optional and adds named attachment points.
void load_collision_sidecar(RigidBodyModel& model, const std::string& json_text);
void load_collision_sidecar_file(RigidBodyModel& model, const std::string& path);

}  // namespace taskqp
