#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>

#include "tpik/kinematics.hpp"

namespace tpik {

struct WorldObject {
  std::string id;
  std::string label;
  bool graspable = true;
  /// Object frame: origin at the centroid, z up.
  Pose pose;
  /// Object frame expressed in the tool frame when correctly grasped.
  Transform grasp_offset = Transform::Identity();
  /// Object frame -> top (cap) frame.
  Transform top_offset = Transform::Identity();

  /// Tool pose that realizes the grasp for the current object pose.
  Transform grasp_tool_pose() const;
};

struct Attachment {
  std::string object_id;
  /// Tool -> object transform, frozen at attach time.
  Transform tool_to_object = Transform::Identity();
};

struct WorldState {
  JointState arm;
  std::map<std::string, WorldObject> objects;
  Pose mouth;
  /// Preassigned placement positions (e.g. "left", "right"), object centroid.
  std::map<std::string, Eigen::Vector3d> places;
  std::optional<Attachment> attachment;
  std::uint64_t tick = 0;
  double clock = 0.0;

  /// Throws LookupError.
  const WorldObject& object(const std::string& id) const;
};

struct SimConfig {
  double dt = 0.01;
  double duration_cap = 120.0;
  double velocity_cap = 0.8;
  /// Half-width of the zero-mean uniform perturbation on perceived positions, meters.
  double perception_noise = 0.0;
  std::uint64_t seed = 0;

  /// Throws ContractViolation.
  void validate() const;
};

/// Explicit Euler step q <- q + qdot * dt. The attached object follows the tool.
/// Throws ContractViolation on a non-finite or mis-sized velocity.
WorldState step(const KinematicChain& chain, const WorldState& world, const Vector& qdot,
                const SimConfig& config);

struct Perception {
  std::map<std::string, Pose> objects;
  Pose mouth;

  /// Throws LookupError.
  const Pose& object(const std::string& id) const;
};

/// Object and mouth poses as the perception stand-in reports them. With zero
/// noise the ground truth is returned and `rng` is not touched.
Perception perceive(const WorldState& world, const SimConfig& config, std::mt19937_64& rng);

struct GraspTolerance {
  double position = 0.02;
  double orientation = 0.15;
};

struct GraspFailure {
  std::string object_id;
  double position_error = 0.0;
  double orientation_error = 0.0;
  std::string reason;
};

/// Attaches `object_id` if the tool is within tolerance of its grasp pose;
/// the current relative transform is frozen. Throws LookupError for unknown
/// ids and ContractViolation when something is already attached.
std::variant<WorldState, GraspFailure> attach(const KinematicChain& chain, const WorldState& world,
                                              const std::string& object_id,
                                              const GraspTolerance& tolerance = {});

/// Clears the attachment; the object keeps its last pose. Throws
/// ContractViolation when nothing is attached.
WorldState detach(const WorldState& world);

/// Tool -> object-top transform: the frozen attachment when holding
/// `object_id`, otherwise the nominal grasp.
Transform tool_to_top(const WorldState& world, const std::string& object_id);

/// Loads a world layout file (see docs/config.md). Throws ConfigError.
WorldState load_world(const std::string& path, std::size_t joint_count);
WorldState parse_world(const std::string& yaml_text, const std::string& source_name,
                       std::size_t joint_count);

/// Two bottles 0.3 m apart, 0.4 m in front of the base, mouth 0.35 m above the table.
WorldState default_world();

}  // namespace tpik
