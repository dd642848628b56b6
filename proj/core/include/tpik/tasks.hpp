#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tpik/kinematics.hpp"

namespace tpik {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// Five-threshold structure of a scalar set-based task.
///
/// Physical thresholds [lower, upper] bound the valid set. The task becomes
/// active when its value crosses lower + buffer or upper - buffer and is then
/// driven to safe_lower / safe_upper, which sit inside the buffer zone. A
/// one-sided task uses +/-kUnbounded for the missing side; that side never
/// activates.
struct SetBounds {
  double lower = -kUnbounded;
  double upper = kUnbounded;
  double buffer = 0.1;
  double safe_lower = -kUnbounded;
  double safe_upper = kUnbounded;

  /// Safety values placed midway between activation and physical thresholds.
  static SetBounds with_midpoint_safety(double lower, double upper, double buffer);

  double upper_activation() const { return upper - buffer; }
  double lower_activation() const { return lower + buffer; }
  bool has_upper() const { return upper != kUnbounded; }
  bool has_lower() const { return lower != -kUnbounded; }

  /// Throws ContractViolation unless the threshold ordering holds.
  void validate() const;
};

enum class TaskKind { equality, set_based };

/// Extra rigid offset applied after a chain frame, e.g. tool -> grasped bottle cap.
struct TaskFrame {
  std::size_t frame_index = kToolFrame;
  Transform offset = Transform::Identity();
};

struct JointValueBinding {
  std::size_t joint = 0;
};
/// Distance from the origin of `frame` to the point published under `obstacle`.
struct ObstacleDistanceBinding {
  std::string obstacle;
  std::string frame = "tool";
};
struct PositionBinding {
  std::string frame = "tool";
};
struct OrientationBinding {
  std::string frame = "tool";
};
/// Position rows followed by orientation rows (m = 6).
struct PoseBinding {
  std::string frame = "tool";
};
/// sqrt(det(J J^T)) over the selected rows of the 6 x n tool Jacobian.
struct ManipulabilityBinding {
  std::vector<int> rows = {0, 1, 2, 3, 4, 5};
};

using TaskBinding = std::variant<JointValueBinding, ObstacleDistanceBinding, PositionBinding,
                                 OrientationBinding, PoseBinding, ManipulabilityBinding>;

struct TaskSpec {
  std::string id;
  TaskKind kind = TaskKind::equality;
  std::size_t dimension = 1;
  Matrix gain;
  std::optional<SetBounds> bounds;
  TaskBinding binding;

  /// Throws ContractViolation on: empty id, dimension mismatch with the
  /// binding, set-based with m != 1 or without bounds, gain not m x m
  /// symmetric positive definite.
  void validate() const;
};

/// Builds a validated task; `gain_diagonal` of size 1 is broadcast to m.
TaskSpec make_task(std::string id, TaskKind kind, TaskBinding binding, const Vector& gain_diagonal,
                   std::optional<SetBounds> bounds = std::nullopt);

/// Natural dimension of the task function behind a binding.
std::size_t binding_dimension(const TaskBinding& binding);

struct TaskReading {
  Vector value;
  Matrix jacobian;
};

/// Reading plus the equality error sigma_d - sigma (empty for set-based tasks;
/// the solver fills those from the active-stack target).
struct TaskEvaluation {
  TaskReading reading;
  Vector error;
  Vector feedforward;
};

// Task functions ------------------------------------------------------------

TaskReading joint_value_task(const Vector& q, std::size_t joint_index);

/// Throws DegenerateGradient when the distance is below 1e-6 m.
TaskReading obstacle_distance_task(const KinematicChain& chain, const Vector& q,
                                   const TaskFrame& control_point,
                                   const Eigen::Vector3d& obstacle);

/// value = frame position; jacobian = linear rows at that point.
TaskReading position_task(const KinematicChain& chain, const Vector& q, const TaskFrame& frame);

/// value = orientation error toward `desired`; jacobian = angular rows.
TaskReading orientation_task(const KinematicChain& chain, const Vector& q,
                             const TaskFrame& frame, const Eigen::Quaterniond& desired);

/// Jacobian row by central finite differences with `step`.
TaskReading manipulability_task(const KinematicChain& chain, const Vector& q,
                                const std::vector<int>& rows = {0, 1, 2, 3, 4, 5},
                                double step = 1e-6);
double manipulability(const KinematicChain& chain, const Vector& q, const std::vector<int>& rows);

Pose frame_pose(const KinematicChain& chain, const Vector& q, const TaskFrame& frame);

// Evaluation ----------------------------------------------------------------

/// Everything a task binding may reference during one control tick.
struct TaskContext {
  const KinematicChain* chain = nullptr;
  Vector q;
  std::map<std::string, TaskFrame> frames{{"tool", TaskFrame{}}};
  std::map<std::string, Eigen::Vector3d> points;
  /// Equality targets by task id (position and/or orientation part used).
  std::map<std::string, Pose> targets;
  /// Equality targets for scalar bindings (joint value, distance, manipulability).
  std::map<std::string, Vector> values;
};

/// Throws LookupError when the binding references an unknown frame, point or target.
TaskEvaluation evaluate_task(const TaskSpec& task, const TaskContext& context);

}  // namespace tpik
