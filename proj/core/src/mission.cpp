#include "tpik/mission.hpp"

#include <fmt/format.h>

#include <cmath>

#include "tpik/errors.hpp"
#include "yaml_util.hpp"

namespace tpik {

namespace {

constexpr double kPi = 3.14159265358979323846;

Transform raised(Transform t, double dz) {
  t.translation().z() += dz;
  return t;
}

Eigen::Quaterniond yaw_rotation(double yaw) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()));
}

/// Object frame standing upright at `position`, x axis pointing away from the base.
Transform upright_facing_out(const Eigen::Vector3d& position) {
  Transform t = Transform::Identity();
  t.linear() = yaw_rotation(std::atan2(position.y(), position.x())).toRotationMatrix();
  t.translation() = position;
  return t;
}

Phase make_phase(std::string name, ControlledFrame frame, const Transform& target,
                 const MissionConfig& config, PhaseEvent event = PhaseEvent::none) {
  Phase p;
  p.name = std::move(name);
  p.frame = frame;
  p.target = Pose::from_transform(target);
  p.position_tolerance = config.position_tolerance;
  p.orientation_tolerance = config.orientation_tolerance;
  p.event = event;
  return p;
}

TaskSpec joint_limit_task(const JointLimitConfig& limit) {
  return make_task(fmt::format("joint{}_limit", limit.joint), TaskKind::set_based,
                   JointValueBinding{limit.joint - 1}, Vector::Constant(1, limit.gain),
                   SetBounds::with_midpoint_safety(limit.lower, limit.upper, limit.buffer));
}

void read_limit(const YAML::Node& node, const detail::YamlReader& r, JointLimitConfig& limit) {
  if (!node) return;
  limit.joint = r.get_or<std::size_t>(node, "joint", limit.joint);
  limit.lower = r.get_or<double>(node, "lower", limit.lower);
  limit.upper = r.get_or<double>(node, "upper", limit.upper);
  limit.buffer = r.get_or<double>(node, "buffer", limit.buffer);
  limit.gain = r.get_or<double>(node, "gain", limit.gain);
}

MissionConfig config_from_node(const YAML::Node& root, const detail::YamlReader& r) {
  MissionConfig c;
  if (!root || root.IsNull()) return c;
  if (!root.IsMap()) r.fail(root, "mission config must be a mapping");
  if (const YAML::Node w = root["waypoints"]) {
    c.approach_height = r.get_or(w, "approach_height", c.approach_height);
    c.lift_height = r.get_or(w, "lift_height", c.lift_height);
    c.mouth_standoff = r.get_or(w, "mouth_standoff", c.mouth_standoff);
    if (w["drink_tilt_deg"]) c.drink_tilt = r.get<double>(w, "drink_tilt_deg") * kPi / 180.0;
  }
  if (const YAML::Node t = root["tolerances"]) {
    c.position_tolerance = r.get_or(t, "position", c.position_tolerance);
    c.orientation_tolerance = r.get_or(t, "orientation", c.orientation_tolerance);
  }
  if (const YAML::Node g = root["gains"]) {
    c.position_gain = r.get_or(g, "position", c.position_gain);
    c.orientation_gain = r.get_or(g, "orientation", c.orientation_gain);
  }
  if (const YAML::Node l = root["limits"]) {
    read_limit(l["elbow"], r, c.elbow);
    read_limit(l["shoulder"], r, c.shoulder);
  }
  if (const YAML::Node o = root["obstacle"]) {
    c.obstacle_min_distance = r.get_or(o, "min_distance", c.obstacle_min_distance);
    c.obstacle_buffer = r.get_or(o, "buffer", c.obstacle_buffer);
    c.obstacle_gain = r.get_or(o, "gain", c.obstacle_gain);
  }
  if (const YAML::Node g = root["grasp"]) {
    c.grasp.position = r.get_or(g, "position_tolerance", c.grasp.position);
    c.grasp.orientation = r.get_or(g, "orientation_tolerance", c.grasp.orientation);
  }
  try {
    c.validate();
  } catch (const ContractViolation& e) {
    r.fail(root, e.what());
  }
  return c;
}

}  // namespace

void MissionConfig::validate() const {
  if (!(position_tolerance > 0.0) || !(orientation_tolerance > 0.0)) {
    throw ContractViolation("phase tolerances must be positive");
  }
  if (!(position_gain > 0.0) || !(orientation_gain > 0.0) || !(obstacle_gain > 0.0) ||
      !(elbow.gain > 0.0) || !(shoulder.gain > 0.0)) {
    throw ContractViolation("gains must be positive");
  }
  if (elbow.joint == 0 || shoulder.joint == 0) throw ContractViolation("joint numbers are 1-based");
  SetBounds::with_midpoint_safety(elbow.lower, elbow.upper, elbow.buffer);
  SetBounds::with_midpoint_safety(shoulder.lower, shoulder.upper, shoulder.buffer);
  SetBounds::with_midpoint_safety(obstacle_min_distance, kUnbounded, obstacle_buffer);
}

MissionConfig parse_mission_config(const std::string& yaml_text, const std::string& source_name) {
  const detail::YamlReader reader(source_name);
  return config_from_node(detail::load_yaml_string(yaml_text, source_name), reader);
}

MissionConfig load_mission_config(const std::string& path) {
  const detail::YamlReader reader(path);
  return config_from_node(detail::load_yaml_file(path), reader);
}

std::string_view to_string(ControlledFrame f) {
  return f == ControlledFrame::tool ? "tool" : "bottle_top";
}

std::string_view to_string(PhaseEvent e) {
  switch (e) {
    case PhaseEvent::none: return "none";
    case PhaseEvent::grasp: return "grasp";
    case PhaseEvent::release: return "release";
  }
  return "?";
}

std::string_view to_string(MissionState s) {
  switch (s) {
    case MissionState::idle: return "idle";
    case MissionState::running: return "running";
    case MissionState::paused: return "paused";
    case MissionState::stopped_emergency: return "stopped_emergency";
    case MissionState::completed: return "completed";
    case MissionState::failed: return "failed";
  }
  return "?";
}

MissionScript compile_mission(const MissionCommand& command, const WorldState& world,
                              const Perception& perception, const MissionConfig& config,
                              std::size_t joint_count) {
  config.validate();
  const WorldObject& object = world.object(command.object_id);
  if (!object.graspable) {
    throw ContractViolation("object '" + command.object_id + "' is not graspable");
  }
  if ((command.action == Action::drink) != (command.sub_action == SubAction::none)) {
    throw ContractViolation("sub-action does not fit the action");
  }

  std::vector<TaskSpec> tasks;
  tasks.push_back(joint_limit_task(config.elbow));
  if (command.action == Action::drink) tasks.push_back(joint_limit_task(config.shoulder));
  std::vector<std::string> obstacles;
  for (const auto& [id, other] : world.objects) {
    if (id == command.object_id) continue;
    obstacles.push_back(id);
    tasks.push_back(make_task("obstacle_" + id, TaskKind::set_based,
                              ObstacleDistanceBinding{id, "tool"},
                              Vector::Constant(1, config.obstacle_gain),
                              SetBounds::with_midpoint_safety(config.obstacle_min_distance,
                                                              kUnbounded, config.obstacle_buffer)));
  }
  Vector pose_gain(6);
  pose_gain << Vector::Constant(3, config.position_gain), Vector::Constant(3, config.orientation_gain);
  tasks.push_back(make_task(kPoseTaskId, TaskKind::equality, PoseBinding{kControlledFrame}, pose_gain));

  const Transform object_pose = perception.object(command.object_id).to_transform();
  const Transform grasp_inv = object.grasp_offset.inverse();
  const Transform grasp_tool = object_pose * grasp_inv;
  const auto& c = config;
  constexpr auto tool = ControlledFrame::tool;
  constexpr auto top = ControlledFrame::bottle_top;

  std::vector<Phase> phases;
  phases.push_back(make_phase("approach", tool, raised(grasp_tool, c.approach_height), c));
  phases.push_back(make_phase("grasp", tool, grasp_tool, c, PhaseEvent::grasp));

  if (command.action == Action::move) {
    const std::string side(to_string(command.sub_action));
    const auto place = world.places.find(side);
    if (place == world.places.end()) throw LookupError("no '" + side + "' place in the world layout");
    const Transform place_tool = upright_facing_out(place->second) * grasp_inv;
    phases.push_back(make_phase("lift", tool, raised(grasp_tool, c.lift_height), c));
    phases.push_back(make_phase("transfer", tool, raised(place_tool, c.lift_height), c));
    phases.push_back(make_phase("place", tool, place_tool, c, PhaseEvent::release));
    phases.push_back(make_phase("retreat", tool, raised(place_tool, c.approach_height), c));
  } else {
    const Transform top_pose = object_pose * object.top_offset;
    const Eigen::Vector3d mouth = perception.mouth.position;
    Eigen::Vector3d outward(mouth.x(), mouth.y(), 0.0);
    if (outward.norm() < 1e-9) throw ContractViolation("mouth is above the arm base");
    outward.normalize();
    // Cap upright in front of the mouth, then tilted toward the user about the mouth.
    Transform near_mouth = upright_facing_out(mouth) * object.top_offset;
    near_mouth.translation() = mouth - c.mouth_standoff * outward;
    Transform at_mouth = near_mouth;
    const Eigen::Vector3d tilt_axis = Eigen::Vector3d::UnitZ().cross(outward).normalized();
    at_mouth.linear() = Eigen::AngleAxisd(c.drink_tilt, tilt_axis) * near_mouth.linear();
    at_mouth.translation() = mouth;
    phases.push_back(make_phase("lift", top, raised(top_pose, c.lift_height), c));
    phases.push_back(make_phase("to_mouth", top, near_mouth, c));
    phases.push_back(make_phase("drink", top, at_mouth, c));
    phases.push_back(make_phase("from_mouth", top, near_mouth, c));
    phases.push_back(make_phase("return", top, raised(top_pose, c.lift_height), c));
    phases.push_back(make_phase("place", top, top_pose, c, PhaseEvent::release));
    phases.push_back(make_phase("retreat", tool, raised(grasp_tool, c.approach_height), c));
  }

  return MissionScript{command, TaskHierarchy(std::move(tasks), joint_count), std::move(phases),
                       std::move(obstacles)};
}

TransitionResult pause(const MissionStatus& status) {
  if (status.state != MissionState::running) return {status, false};
  MissionStatus next = status;
  next.state = MissionState::paused;
  return {next, true};
}

TransitionResult resume(const MissionStatus& status) {
  if (status.state != MissionState::paused) return {status, false};
  MissionStatus next = status;
  next.state = MissionState::running;
  return {next, true};
}

// MissionRunner ---------------------------------------------------------------

MissionRunner::MissionRunner(const KinematicChain& chain, MissionScript script, WorldState world,
                             SimConfig sim, SolverConfig solver, MissionConfig config)
    : chain_(&chain),
      script_(std::move(script)),
      world_(std::move(world)),
      sim_(sim),
      solver_(solver),
      config_(std::move(config)),
      rng_(sim.seed) {
  sim_.validate();
  if (script_.phases.empty()) throw ContractViolation("mission has no phases");
  if (static_cast<std::size_t>(world_.arm.q.size()) != chain.joint_count()) {
    throw ContractViolation("world arm state does not match the chain");
  }
  solver_.velocity_cap = std::min(solver_.velocity_cap, sim_.velocity_cap);
  std::vector<LoggedTask> logged;
  for (const auto& task : script_.hierarchy.tasks()) {
    if (task.kind == TaskKind::set_based) logged.push_back({task.id, task.bounds->lower, task.bounds->upper});
  }
  log_ = TrajectoryLog(chain.joint_count(), std::move(logged));
  std::mt19937_64 first = rng_;
  perception_ = perceive(world_, sim_, first);
  status_.state = MissionState::running;
  timings_.push_back({script_.phases[0].name, world_.clock, -1.0});
}

void MissionRunner::apply_commands(std::span<const WireMessage> commands) {
  for (const auto& msg : commands) {
    if (msg.type == MessageType::stop) {
      status_.state = MissionState::stopped_emergency;
      status_.fault = "emergency stop";
      return;
    }
  }
  for (const auto& msg : commands) {
    if (msg.type == MessageType::pause) status_ = pause(status_).status;
    if (msg.type == MessageType::resume) status_ = resume(status_).status;
  }
}

TaskContext MissionRunner::make_context(const Perception& perception) const {
  TaskContext ctx;
  ctx.chain = chain_;
  ctx.q = world_.arm.q;
  const TaskFrame tool{};
  const TaskFrame top{kToolFrame, tool_to_top(world_, script_.command.object_id)};
  ctx.frames["tool"] = tool;
  ctx.frames["bottle_top"] = top;
  const Phase& phase = script_.phases[std::min(status_.phase, script_.phases.size() - 1)];
  ctx.frames[kControlledFrame] = phase.frame == ControlledFrame::tool ? tool : top;
  for (const auto& id : script_.obstacles) ctx.points[id] = perception.object(id).position;
  ctx.targets[kPoseTaskId] = phase.target;
  return ctx;
}

bool MissionRunner::phase_converged(const std::vector<TaskEvaluation>& evaluations) const {
  const std::size_t pose = script_.hierarchy.index_of(kPoseTaskId);
  const Vector& err = evaluations[pose].error;
  const Phase& phase = script_.phases[status_.phase];
  const double angle = 2.0 * std::asin(std::min(1.0, err.tail(3).norm()));
  return err.head(3).norm() < phase.position_tolerance && angle < phase.orientation_tolerance;
}

void MissionRunner::fail(std::string fault) {
  status_.state = MissionState::failed;
  status_.fault = std::move(fault);
}

bool MissionRunner::fire_event(const Phase& phase) {
  if (phase.event == PhaseEvent::grasp) {
    auto outcome = attach(*chain_, world_, script_.command.object_id, config_.grasp);
    if (auto* failure = std::get_if<GraspFailure>(&outcome)) {
      fail(fmt::format("grasp failed: {} (position error {} m, orientation error {} rad)",
                       failure->reason, failure->position_error, failure->orientation_error));
      return false;
    }
    world_ = std::get<WorldState>(std::move(outcome));
  } else if (phase.event == PhaseEvent::release) {
    if (world_.attachment) world_ = detach(world_);
  }
  return true;
}

void MissionRunner::tick(std::span<const WireMessage> commands) {
  if (finished()) return;
  apply_commands(commands);

  const auto n = static_cast<Eigen::Index>(chain_->joint_count());
  Vector qdot = Vector::Zero(n);
  std::vector<TaskEvaluation> evaluations;
  std::optional<SolveResult> solve;
  try {
    if (status_.state == MissionState::running) {
      perception_ = perceive(world_, sim_, rng_);
      evaluations = evaluate_hierarchy(script_.hierarchy, make_context(perception_));
      while (status_.state == MissionState::running && phase_converged(evaluations)) {
        const std::size_t pose = script_.hierarchy.index_of(kPoseTaskId);
        const Vector& err = evaluations[pose].error;
        phase_pos_err_.push_back(err.head(3).norm());
        phase_ori_err_.push_back(2.0 * std::asin(std::min(1.0, err.tail(3).norm())));
        timings_.back().end = world_.clock;
        if (!fire_event(script_.phases[status_.phase])) break;
        if (status_.phase + 1 == script_.phases.size()) {
          status_.state = MissionState::completed;
          break;
        }
        ++status_.phase;
        timings_.push_back({script_.phases[status_.phase].name, world_.clock, -1.0});
        evaluations = evaluate_hierarchy(script_.hierarchy, make_context(perception_));
      }
      if (status_.state == MissionState::running) {
        solve = solve_step(script_.hierarchy, evaluations, solver_);
        qdot = solve->velocity;
        max_active_ = std::max(max_active_, solve->active.set_based_count());
        if (solve->feasible.empty()) ++empty_feasible_;
      }
    } else {
      evaluations = evaluate_hierarchy(script_.hierarchy, make_context(perception_));
    }
  } catch (const Error& e) {
    fail(e.what());
    qdot.setZero();
    solve.reset();
  }

  record(evaluations, solve ? &*solve : nullptr, qdot);
  if (finished()) return;
  world_ = step(*chain_, world_, qdot, sim_);
  if (world_.clock >= sim_.duration_cap) {
    fail(fmt::format("duration cap of {} s exceeded in phase '{}'", sim_.duration_cap,
                     script_.phases[status_.phase].name));
  }
}

void MissionRunner::record(const std::vector<TaskEvaluation>& evaluations,
                           const SolveResult* solve, const Vector& qdot) {
  TickRecord r;
  r.time = world_.clock;
  r.tick = world_.tick;
  r.phase = status_.phase;
  r.state = std::string(to_string(status_.state));
  r.frame = std::string(to_string(script_.phases[status_.phase].frame));
  r.q = world_.arm.q;
  r.qdot = qdot;
  const bool have_eval = evaluations.size() == script_.hierarchy.size();
  for (std::size_t i = 0; i < script_.hierarchy.size(); ++i) {
    if (script_.hierarchy[i].kind != TaskKind::set_based) continue;
    r.set_values.push_back(have_eval ? evaluations[i].reading.value[0]
                                     : std::numeric_limits<double>::quiet_NaN());
  }
  if (have_eval) {
    const Vector& err = evaluations[script_.hierarchy.index_of(kPoseTaskId)].error;
    r.position_error = err.head(3);
    r.orientation_error = err.tail(3);
    r.error_norm = err.norm();
  }
  if (solve != nullptr) {
    r.active_mask = solve->active.hierarchy_mask();
    r.chosen_mask = solve->chosen_hierarchy_mask;
    r.candidates = solve->candidates.size();
    r.feasible = solve->feasible.size();
    for (const auto& c : solve->candidates) r.candidate_norms.push_back(c.velocity.norm());
    r.scale = solve->scale;
  } else if (have_eval) {
    try {
      r.active_mask = build_active_stack(script_.hierarchy, evaluations).hierarchy_mask();
    } catch (const Error&) {
      r.active_mask = 0;
    }
  }
  log_.append(std::move(r));
}

MissionSummary MissionRunner::summary() const {
  MissionSummary s;
  s.command = script_.command;
  s.status = status_;
  s.sim_time = world_.clock;
  s.ticks = log_.rows().size();
  s.phases = timings_;
  s.phase_position_errors = phase_pos_err_;
  s.phase_orientation_errors = phase_ori_err_;
  s.max_active_set_tasks = max_active_;
  s.empty_feasible_sets = empty_feasible_;
  std::size_t column = 0;
  for (std::size_t i = 0; i < script_.hierarchy.size(); ++i) {
    const TaskSpec& task = script_.hierarchy[i];
    if (task.kind != TaskKind::set_based) continue;
    BoundReport b;
    b.task_id = task.id;
    b.lower = task.bounds->lower;
    b.upper = task.bounds->upper;
    b.min_value = kUnbounded;
    b.max_value = -kUnbounded;
    b.min_margin = kUnbounded;
    const auto& rows = log_.rows();
    for (std::size_t t = 0; t < rows.size(); ++t) {
      const double v = rows[t].set_values[column];
      if (std::isnan(v)) continue;
      b.min_value = std::min(b.min_value, v);
      b.max_value = std::max(b.max_value, v);
      b.min_margin = std::min(b.min_margin, std::min(v - b.lower, b.upper - v));
      const bool on = (rows[t].active_mask >> i) & 1U;
      const bool was = t > 0 && ((rows[t - 1].active_mask >> i) & 1U);
      if (on && !was) ++b.activations;
      if (t > 0 && t + 1 < rows.size()) {
        const bool next = (rows[t + 1].active_mask >> i) & 1U;
        if (on != was && on != next) ++b.chattering;
      }
    }
    s.bounds.push_back(b);
    ++column;
  }
  return s;
}

MissionResult run_mission(const KinematicChain& chain, MissionScript script, WorldState world,
                          const SimConfig& sim, const SolverConfig& solver,
                          const MissionConfig& config, CommandInbox* inbox) {
  MissionRunner runner(chain, std::move(script), std::move(world), sim, solver, config);
  while (!runner.finished()) {
    if (inbox != nullptr) {
      const auto commands = inbox->drain();
      runner.tick(commands);
    } else {
      runner.tick();
    }
  }
  return {runner.status(), runner.log(), runner.summary(), runner.world()};
}

}  // namespace tpik
