#include "tpik/tasks.hpp"

#include <cmath>

#include "tpik/errors.hpp"

namespace tpik {

namespace {

constexpr double kMinObstacleDistance = 1e-6;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const TaskFrame& lookup_frame(const TaskContext& ctx, const std::string& name) {
  const auto it = ctx.frames.find(name);
  if (it == ctx.frames.end()) throw LookupError("unknown task frame '" + name + "'");
  return it->second;
}

const Pose& lookup_target(const TaskContext& ctx, const std::string& task_id) {
  const auto it = ctx.targets.find(task_id);
  if (it == ctx.targets.end()) throw LookupError("no target for task '" + task_id + "'");
  return it->second;
}

}  // namespace

SetBounds SetBounds::with_midpoint_safety(double lower, double upper, double buffer) {
  SetBounds b;
  b.lower = lower;
  b.upper = upper;
  b.buffer = buffer;
  b.safe_lower = b.has_lower() ? lower + 0.5 * buffer : -kUnbounded;
  b.safe_upper = b.has_upper() ? upper - 0.5 * buffer : kUnbounded;
  b.validate();
  return b;
}

void SetBounds::validate() const {
  if (!(buffer > 0.0)) throw ContractViolation("set-based buffer must be positive");
  if (!has_lower() && !has_upper()) throw ContractViolation("set-based task needs a bound");
  if (!(lower < upper)) throw ContractViolation("lower bound must be below upper bound");
  if (has_lower() && has_upper() && !(lower_activation() < upper_activation())) {
    throw ContractViolation("activation thresholds overlap");
  }
  if (has_upper() && !(upper_activation() < safe_upper && safe_upper < upper)) {
    throw ContractViolation("upper safety value must lie inside the upper buffer");
  }
  if (has_lower() && !(lower < safe_lower && safe_lower < lower_activation())) {
    throw ContractViolation("lower safety value must lie inside the lower buffer");
  }
}

std::size_t binding_dimension(const TaskBinding& binding) {
  return std::visit(overloaded{
                        [](const JointValueBinding&) -> std::size_t { return 1; },
                        [](const ObstacleDistanceBinding&) -> std::size_t { return 1; },
                        [](const PositionBinding&) -> std::size_t { return 3; },
                        [](const OrientationBinding&) -> std::size_t { return 3; },
                        [](const PoseBinding&) -> std::size_t { return 6; },
                        [](const ManipulabilityBinding&) -> std::size_t { return 1; },
                    },
                    binding);
}

void TaskSpec::validate() const {
  if (id.empty()) throw ContractViolation("task id must not be empty");
  if (dimension != binding_dimension(binding)) {
    throw ContractViolation("task '" + id + "' dimension does not match its binding");
  }
  if (kind == TaskKind::set_based) {
    if (dimension != 1) throw ContractViolation("set-based task '" + id + "' must be scalar");
    if (!bounds) throw ContractViolation("set-based task '" + id + "' has no bounds");
    bounds->validate();
  }
  const auto m = static_cast<Eigen::Index>(dimension);
  if (gain.rows() != m || gain.cols() != m) {
    throw ContractViolation("task '" + id + "' gain must be " + std::to_string(m) + "x" +
                            std::to_string(m));
  }
  if (!gain.isApprox(gain.transpose(), 1e-12)) {
    throw ContractViolation("task '" + id + "' gain must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gain);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw ContractViolation("task '" + id + "' gain must be positive definite");
  }
}

TaskSpec make_task(std::string id, TaskKind kind, TaskBinding binding, const Vector& gain_diagonal,
                   std::optional<SetBounds> bounds) {
  TaskSpec t;
  t.id = std::move(id);
  t.kind = kind;
  t.dimension = binding_dimension(binding);
  t.binding = std::move(binding);
  t.bounds = bounds;
  const auto m = static_cast<Eigen::Index>(t.dimension);
  if (gain_diagonal.size() == 1) {
    t.gain = gain_diagonal[0] * Matrix::Identity(m, m);
  } else if (gain_diagonal.size() == m) {
    t.gain = gain_diagonal.asDiagonal();
  } else {
    throw ContractViolation("task '" + t.id + "' gain diagonal has wrong size");
  }
  t.validate();
  return t;
}

TaskReading joint_value_task(const Vector& q, std::size_t joint_index) {
  if (joint_index >= static_cast<std::size_t>(q.size())) {
    throw ContractViolation("joint index " + std::to_string(joint_index) + " out of range");
  }
  TaskReading r;
  r.value = Vector::Constant(1, q[static_cast<Eigen::Index>(joint_index)]);
  r.jacobian = Matrix::Zero(1, q.size());
  r.jacobian(0, static_cast<Eigen::Index>(joint_index)) = 1.0;
  return r;
}

Pose frame_pose(const KinematicChain& chain, const Vector& q, const TaskFrame& frame) {
  return Pose::from_transform(forward_kinematics(chain, q, frame.frame_index) * frame.offset);
}

TaskReading obstacle_distance_task(const KinematicChain& chain, const Vector& q,
                                   const TaskFrame& control_point,
                                   const Eigen::Vector3d& obstacle) {
  if (!obstacle.allFinite()) throw ContractViolation("obstacle position is not finite");
  const Eigen::Vector3d p = frame_pose(chain, q, control_point).position;
  const Eigen::Vector3d diff = p - obstacle;
  const double dist = diff.norm();
  if (dist < kMinObstacleDistance) {
    throw DegenerateGradient("control point coincides with obstacle");
  }
  const Matrix jac = geometric_jacobian(chain, q, p, control_point.frame_index);
  TaskReading r;
  r.value = Vector::Constant(1, dist);
  r.jacobian = (diff / dist).transpose() * jac.topRows(3);
  return r;
}

TaskReading position_task(const KinematicChain& chain, const Vector& q, const TaskFrame& frame) {
  const Eigen::Vector3d p = frame_pose(chain, q, frame).position;
  TaskReading r;
  r.value = p;
  r.jacobian = geometric_jacobian(chain, q, p, frame.frame_index).topRows(3);
  return r;
}

TaskReading orientation_task(const KinematicChain& chain, const Vector& q,
                             const TaskFrame& frame, const Eigen::Quaterniond& desired) {
  const Pose pose = frame_pose(chain, q, frame);
  TaskReading r;
  r.value = orientation_error(desired, pose.orientation);
  r.jacobian = geometric_jacobian(chain, q, pose.position, frame.frame_index).bottomRows(3);
  return r;
}

double manipulability(const KinematicChain& chain, const Vector& q, const std::vector<int>& rows) {
  const Eigen::Vector3d tip = forward_kinematics(chain, q).translation();
  const Matrix full = geometric_jacobian(chain, q, tip);
  Matrix j(static_cast<Eigen::Index>(rows.size()), full.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] > 5) throw ContractViolation("manipulability row out of range");
    j.row(static_cast<Eigen::Index>(i)) = full.row(rows[i]);
  }
  const double det = (j * j.transpose()).determinant();
  return std::sqrt(std::max(0.0, det));
}

TaskReading manipulability_task(const KinematicChain& chain, const Vector& q,
                                const std::vector<int>& rows, double step) {
  TaskReading r;
  r.value = Vector::Constant(1, manipulability(chain, q, rows));
  r.jacobian = Matrix::Zero(1, q.size());
  Vector probe = q;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    probe[i] = q[i] + step;
    const double plus = manipulability(chain, probe, rows);
    probe[i] = q[i] - step;
    const double minus = manipulability(chain, probe, rows);
    probe[i] = q[i];
    r.jacobian(0, i) = (plus - minus) / (2.0 * step);
  }
  return r;
}

TaskEvaluation evaluate_task(const TaskSpec& task, const TaskContext& ctx) {
  if (ctx.chain == nullptr) throw ContractViolation("task context has no chain");
  const KinematicChain& chain = *ctx.chain;
  TaskEvaluation ev;
  std::visit(
      overloaded{
          [&](const JointValueBinding& b) { ev.reading = joint_value_task(ctx.q, b.joint); },
          [&](const ObstacleDistanceBinding& b) {
            const auto it = ctx.points.find(b.obstacle);
            if (it == ctx.points.end()) throw LookupError("unknown obstacle '" + b.obstacle + "'");
            ev.reading = obstacle_distance_task(chain, ctx.q, lookup_frame(ctx, b.frame), it->second);
          },
          [&](const PositionBinding& b) {
            ev.reading = position_task(chain, ctx.q, lookup_frame(ctx, b.frame));
            ev.error = lookup_target(ctx, task.id).position - ev.reading.value;
          },
          [&](const OrientationBinding& b) {
            const Pose& target = lookup_target(ctx, task.id);
            ev.reading = orientation_task(chain, ctx.q, lookup_frame(ctx, b.frame), target.orientation);
            ev.error = ev.reading.value;
          },
          [&](const PoseBinding& b) {
            const Pose& target = lookup_target(ctx, task.id);
            const TaskFrame& frame = lookup_frame(ctx, b.frame);
            const TaskReading pos = position_task(chain, ctx.q, frame);
            const TaskReading ori = orientation_task(chain, ctx.q, frame, target.orientation);
            ev.reading.value.resize(6);
            ev.reading.value << pos.value, ori.value;
            ev.reading.jacobian.resize(6, pos.jacobian.cols());
            ev.reading.jacobian << pos.jacobian, ori.jacobian;
            ev.error.resize(6);
            ev.error << target.position - pos.value, ori.value;
          },
          [&](const ManipulabilityBinding& b) {
            ev.reading = manipulability_task(chain, ctx.q, b.rows);
          },
      },
      task.binding);
  if (task.kind == TaskKind::set_based) {
    ev.error.resize(0);
  } else if (ev.error.size() == 0) {
    const auto it = ctx.values.find(task.id);
    if (it == ctx.values.end()) throw LookupError("no target for task '" + task.id + "'");
    if (it->second.size() != ev.reading.value.size()) {
      throw ContractViolation("target for task '" + task.id + "' has wrong dimension");
    }
    ev.error = it->second - ev.reading.value;
  }
  ev.feedforward = Vector::Zero(static_cast<Eigen::Index>(task.dimension));
  return ev;
}

}  // namespace tpik
