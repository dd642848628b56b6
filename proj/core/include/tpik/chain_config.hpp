#pragma once

#include <string>

#include "tpik/kinematics.hpp"

namespace tpik {

/// Loads a chain definition file. Schema (YAML):
///
///   joints:                      # base-to-tool order
///     - axis: [0, 0, 1]          # unit vector in the joint frame
///       offset:                  # from previous frame, applied before rotation
///         translation: [0, 0, 0.2]   # meters
///         quaternion: [1, 0, 0, 0]   # [w, x, y, z], unit
///   tool:
///     translation: [0, 0, 0.1]
///     quaternion: [1, 0, 0, 0]
///
/// Throws ConfigError naming the file and line on any schema violation.
KinematicChain load_chain(const std::string& path);
KinematicChain parse_chain(const std::string& yaml_text, const std::string& source_name);

/// Reference 7-DOF arm: alternating z/x axes, ~0.9 m reach from the shoulder.
/// Pitch joints (indices 1, 3, 5) are straight at q = pi.
KinematicChain reference_chain();

}  // namespace tpik
