#include "tpik/world.hpp"

#include <cmath>

#include "tpik/errors.hpp"
#include "yaml_util.hpp"

namespace tpik {

namespace {

constexpr const char* kDefaultWorldYaml = R"yaml(
# Table top is z = 0, arm base at the origin facing +x.
arm:
  initial_q: [0.0, 3.6, 0.0, 1.9, 0.0, 2.2, 0.0]
objects:
  - id: water
    label: Water bottle
    position: [0.40, -0.15, 0.125]
    yaw: -0.35877067027057225
    grasp_offset: {quaternion: [0.0, 0.7071067811865476, 0.0, 0.7071067811865476]}
    top_offset: {translation: [0, 0, 0.125]}
  - id: coke
    label: Coke bottle
    position: [0.40, 0.15, 0.125]
    yaw: 0.35877067027057225
    grasp_offset: {quaternion: [0.0, 0.7071067811865476, 0.0, 0.7071067811865476]}
    top_offset: {translation: [0, 0, 0.125]}
mouth:
  position: [0.25, -0.50, 0.35]
places:
  left: [0.40, 0.45, 0.125]
  right: [0.40, -0.45, 0.125]
)yaml";

constexpr double kPoseQuatTolerance = 1e-9;

Pose pose_from_node(const YAML::Node& node, const detail::YamlReader& r, const std::string& what) {
  Pose p;
  p.position = r.vec3(r.require(node, "position"), what + ".position");
  if (node["quaternion"]) {
    p.orientation = r.quat(node["quaternion"], what + ".quaternion", kPoseQuatTolerance).normalized();
  } else if (node["yaw"]) {
    p.orientation = Eigen::Quaterniond(
        Eigen::AngleAxisd(r.as<double>(node["yaw"], what + ".yaw"), Eigen::Vector3d::UnitZ()));
  }
  return p;
}

WorldState world_from_node(const YAML::Node& root, const detail::YamlReader& r,
                           std::size_t joint_count) {
  WorldState world;
  const YAML::Node arm = r.require(root, "arm");
  const YAML::Node q0 = r.require(arm, "initial_q");
  if (!q0.IsSequence() || q0.size() != joint_count) {
    r.fail(q0, "arm.initial_q must list " + std::to_string(joint_count) + " joint angles");
  }
  world.arm.q.resize(static_cast<Eigen::Index>(joint_count));
  for (std::size_t i = 0; i < joint_count; ++i) {
    world.arm.q[static_cast<Eigen::Index>(i)] = r.as<double>(q0[i], "arm.initial_q");
  }
  world.arm.qdot = Vector::Zero(world.arm.q.size());

  const YAML::Node objects = r.require(root, "objects");
  if (!objects.IsSequence()) r.fail(objects, "'objects' must be a list");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const YAML::Node o = objects[i];
    const std::string what = "objects[" + std::to_string(i) + "]";
    WorldObject obj;
    obj.id = r.get<std::string>(o, "id");
    obj.label = r.get_or<std::string>(o, "label", obj.id);
    obj.graspable = r.get_or<bool>(o, "graspable", true);
    obj.pose = pose_from_node(o, r, what);
    obj.grasp_offset = r.transform(o["grasp_offset"], what + ".grasp_offset", 1e-12);
    obj.top_offset = r.transform(o["top_offset"], what + ".top_offset", 1e-12);
    if (!world.objects.emplace(obj.id, obj).second) r.fail(o, "duplicate object id '" + obj.id + "'");
  }
  world.mouth = pose_from_node(r.require(root, "mouth"), r, "mouth");
  if (const YAML::Node places = root["places"]) {
    if (!places.IsMap()) r.fail(places, "'places' must be a mapping");
    for (const auto& kv : places) {
      const auto name = r.as<std::string>(kv.first, "place name");
      world.places[name] = r.vec3(kv.second, "places." + name);
    }
  }
  return world;
}

}  // namespace

Transform WorldObject::grasp_tool_pose() const {
  return pose.to_transform() * grasp_offset.inverse();
}

const WorldObject& WorldState::object(const std::string& id) const {
  const auto it = objects.find(id);
  if (it == objects.end()) throw LookupError("unknown object '" + id + "'");
  return it->second;
}

const Pose& Perception::object(const std::string& id) const {
  const auto it = objects.find(id);
  if (it == objects.end()) throw LookupError("unknown object '" + id + "'");
  return it->second;
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw ContractViolation("control period must be positive");
  if (!(duration_cap > 0.0)) throw ContractViolation("duration cap must be positive");
  if (!(velocity_cap > 0.0)) throw ContractViolation("velocity cap must be positive");
  if (!(perception_noise >= 0.0)) throw ContractViolation("noise amplitude must be non-negative");
}

WorldState step(const KinematicChain& chain, const WorldState& world, const Vector& qdot,
                const SimConfig& config) {
  if (qdot.size() != world.arm.q.size()) {
    throw ContractViolation("velocity has " + std::to_string(qdot.size()) + " entries, arm has " +
                            std::to_string(world.arm.q.size()));
  }
  if (!qdot.allFinite()) throw ContractViolation("non-finite joint velocity");
  WorldState next = world;
  next.arm.q = world.arm.q + qdot * config.dt;
  next.arm.qdot = qdot;
  next.tick = world.tick + 1;
  next.clock = static_cast<double>(next.tick) * config.dt;
  if (next.attachment) {
    const Transform tool = forward_kinematics(chain, next.arm.q);
    WorldObject& obj = next.objects.at(next.attachment->object_id);
    obj.pose = Pose::from_transform(tool * next.attachment->tool_to_object);
  }
  return next;
}

Perception perceive(const WorldState& world, const SimConfig& config, std::mt19937_64& rng) {
  Perception out;
  std::uniform_real_distribution<double> noise(-config.perception_noise, config.perception_noise);
  auto perturb = [&](Pose p) {
    if (config.perception_noise > 0.0) {
      for (int i = 0; i < 3; ++i) p.position[i] += noise(rng);
    }
    return p;
  };
  for (const auto& [id, obj] : world.objects) out.objects.emplace(id, perturb(obj.pose));
  out.mouth = perturb(world.mouth);
  return out;
}

std::variant<WorldState, GraspFailure> attach(const KinematicChain& chain, const WorldState& world,
                                              const std::string& object_id,
                                              const GraspTolerance& tolerance) {
  const WorldObject& obj = world.object(object_id);
  if (world.attachment) {
    throw ContractViolation("object '" + world.attachment->object_id + "' is already attached");
  }
  const Transform tool = forward_kinematics(chain, world.arm.q);
  const Transform goal = obj.grasp_tool_pose();
  GraspFailure failure;
  failure.object_id = object_id;
  failure.position_error = (tool.translation() - goal.translation()).norm();
  failure.orientation_error = rotation_angle(Eigen::Quaterniond(goal.rotation()),
                                             Eigen::Quaterniond(tool.rotation()));
  if (!obj.graspable) {
    failure.reason = "object is not graspable";
    return failure;
  }
  if (failure.position_error > tolerance.position ||
      failure.orientation_error > tolerance.orientation) {
    failure.reason = "tool outside grasp tolerance";
    return failure;
  }
  WorldState next = world;
  next.attachment = Attachment{object_id, tool.inverse() * obj.pose.to_transform()};
  return next;
}

WorldState detach(const WorldState& world) {
  if (!world.attachment) throw ContractViolation("nothing is attached");
  WorldState next = world;
  next.attachment.reset();
  return next;
}

Transform tool_to_top(const WorldState& world, const std::string& object_id) {
  const WorldObject& obj = world.object(object_id);
  if (world.attachment && world.attachment->object_id == object_id) {
    return world.attachment->tool_to_object * obj.top_offset;
  }
  return obj.grasp_offset * obj.top_offset;
}

WorldState parse_world(const std::string& yaml_text, const std::string& source_name,
                       std::size_t joint_count) {
  const detail::YamlReader reader(source_name);
  return world_from_node(detail::load_yaml_string(yaml_text, source_name), reader, joint_count);
}

WorldState load_world(const std::string& path, std::size_t joint_count) {
  const detail::YamlReader reader(path);
  return world_from_node(detail::load_yaml_file(path), reader, joint_count);
}

WorldState default_world() { return parse_world(kDefaultWorldYaml, "<default world>", 7); }

}  // namespace tpik
