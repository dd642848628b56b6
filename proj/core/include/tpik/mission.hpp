#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tpik/hierarchy.hpp"
#include "tpik/trajectory_log.hpp"
#include "tpik/wire.hpp"
#include "tpik/world.hpp"

namespace tpik {

struct JointLimitConfig {
  std::size_t joint = 1;  ///< 1-based joint number
  double lower = 0.0;
  double upper = 0.0;
  double buffer = 0.1;
  double gain = 1.0;
};

/// Waypoint geometry, tolerances, gains and safety thresholds of the missions.
struct MissionConfig {
  double approach_height = 0.10;
  double lift_height = 0.10;
  double mouth_standoff = 0.05;
  double drink_tilt = 1.0471975511965976;  ///< 60 degrees
  double position_tolerance = 0.005;
  double orientation_tolerance = 0.02;
  double position_gain = 2.0;
  double orientation_gain = 2.0;
  JointLimitConfig elbow{4, 0.7, 5.5, 0.1, 1.0};
  JointLimitConfig shoulder{2, 1.9, 5.1, 0.1, 1.0};
  double obstacle_min_distance = 0.25;
  double obstacle_buffer = 0.03;
  double obstacle_gain = 1.0;
  GraspTolerance grasp;

  /// Throws ContractViolation.
  void validate() const;
};

/// Loads a mission config file; absent keys keep their defaults. Throws ConfigError.
MissionConfig load_mission_config(const std::string& path);
MissionConfig parse_mission_config(const std::string& yaml_text, const std::string& source_name);

enum class ControlledFrame { tool, bottle_top };
enum class PhaseEvent { none, grasp, release };

struct Phase {
  std::string name;
  ControlledFrame frame = ControlledFrame::tool;
  Pose target;
  double position_tolerance = 0.005;
  double orientation_tolerance = 0.02;
  /// Executed once the phase has converged, before the next phase starts.
  PhaseEvent event = PhaseEvent::none;
};

inline constexpr const char* kPoseTaskId = "pose";
inline constexpr const char* kControlledFrame = "controlled";

struct MissionScript {
  MissionCommand command;
  TaskHierarchy hierarchy;
  std::vector<Phase> phases;
  std::vector<std::string> obstacles;  ///< object ids bound to obstacle tasks
};

std::string_view to_string(ControlledFrame f);
std::string_view to_string(PhaseEvent e);

/// Builds the task stack and waypoint phases for an operator command.
///
/// Move: elbow limit, obstacle distance to every other object, tool pose.
/// Drink: elbow limit, shoulder limit, obstacle distance, tool/bottle-top pose.
/// Waypoints are derived from the perceived object and mouth poses. Throws
/// LookupError for unknown objects or places and ContractViolation for
/// non-graspable objects.
MissionScript compile_mission(const MissionCommand& command, const WorldState& world,
                              const Perception& perception, const MissionConfig& config,
                              std::size_t joint_count);

enum class MissionState { idle, running, paused, stopped_emergency, completed, failed };
std::string_view to_string(MissionState s);

struct MissionStatus {
  MissionState state = MissionState::idle;
  std::size_t phase = 0;
  std::string fault;

  bool terminal() const {
    return state == MissionState::stopped_emergency || state == MissionState::completed ||
           state == MissionState::failed;
  }
};

struct TransitionResult {
  MissionStatus status;
  bool accepted = false;
};

/// running -> paused; anything else is rejected and returned unchanged.
TransitionResult pause(const MissionStatus& status);
/// paused -> running; anything else is rejected and returned unchanged.
TransitionResult resume(const MissionStatus& status);

struct PhaseTiming {
  std::string name;
  double start = 0.0;
  double end = -1.0;  ///< negative while unfinished
};

/// Closest approach of a set-based task to its physical thresholds.
struct BoundReport {
  std::string task_id;
  double lower = 0.0;
  double upper = 0.0;
  double min_value = 0.0;
  double max_value = 0.0;
  double min_margin = 0.0;  ///< min over ticks of distance to the nearest physical bound
  std::size_t activations = 0;
  std::size_t chattering = 0;  ///< single-tick activation flips
};

struct MissionSummary {
  MissionCommand command;
  MissionStatus status;
  double sim_time = 0.0;
  std::uint64_t ticks = 0;
  std::vector<PhaseTiming> phases;
  std::vector<BoundReport> bounds;
  /// Tracking error at the moment each phase converged.
  std::vector<double> phase_position_errors;
  std::vector<double> phase_orientation_errors;
  std::size_t max_active_set_tasks = 0;
  std::size_t empty_feasible_sets = 0;
};

/// One control loop instance: perception, task evaluation, set-based solve,
/// world integration and logging, one tick at a time.
class MissionRunner {
 public:
  MissionRunner(const KinematicChain& chain, MissionScript script, WorldState world,
                SimConfig sim = {}, SolverConfig solver = {}, MissionConfig config = {});

  /// Applies operator commands (stop dominates, the rest in order), then runs
  /// one control period. No-op once the mission is terminal.
  void tick(std::span<const WireMessage> commands = {});

  bool finished() const { return status_.terminal(); }
  const MissionStatus& status() const { return status_; }
  const WorldState& world() const { return world_; }
  const MissionScript& script() const { return script_; }
  const TrajectoryLog& log() const { return log_; }
  const TickRecord* last_record() const { return log_.empty() ? nullptr : &log_.rows().back(); }
  MissionSummary summary() const;

 private:
  void apply_commands(std::span<const WireMessage> commands);
  TaskContext make_context(const Perception& perception) const;
  bool phase_converged(const std::vector<TaskEvaluation>& evaluations) const;
  bool fire_event(const Phase& phase);
  void fail(std::string fault);
  void record(const std::vector<TaskEvaluation>& evaluations, const SolveResult* solve,
              const Vector& qdot);

  const KinematicChain* chain_;
  MissionScript script_;
  WorldState world_;
  SimConfig sim_;
  SolverConfig solver_;
  MissionConfig config_;
  MissionStatus status_;
  std::mt19937_64 rng_;
  Perception perception_;
  TrajectoryLog log_;
  std::vector<PhaseTiming> timings_;
  std::vector<double> phase_pos_err_;
  std::vector<double> phase_ori_err_;
  std::size_t max_active_ = 0;
  std::size_t empty_feasible_ = 0;
};

struct MissionResult {
  MissionStatus status;
  TrajectoryLog log;
  MissionSummary summary;
  WorldState world;
};

/// Runs until the mission is terminal. When an inbox is given it is drained
/// once per tick.
MissionResult run_mission(const KinematicChain& chain, MissionScript script, WorldState world,
                          const SimConfig& sim = {}, const SolverConfig& solver = {},
                          const MissionConfig& config = {}, CommandInbox* inbox = nullptr);

}  // namespace tpik
