#include "tpik/hierarchy.hpp"

#include <bit>
#include <cmath>
#include <set>

#include "tpik/errors.hpp"

namespace tpik {

TaskHierarchy::TaskHierarchy(std::vector<TaskSpec> tasks, std::size_t joint_count)
    : tasks_(std::move(tasks)), joint_count_(joint_count) {
  if (joint_count_ == 0) throw ContractViolation("hierarchy needs at least one joint");
  if (tasks_.size() > 63) throw ContractViolation("hierarchy supports at most 63 tasks");
  std::set<std::string> ids;
  std::size_t equality_rows = 0;
  for (const auto& task : tasks_) {
    task.validate();
    if (!ids.insert(task.id).second) {
      throw ContractViolation("duplicate task id '" + task.id + "'");
    }
    if (const auto* jb = std::get_if<JointValueBinding>(&task.binding)) {
      if (jb->joint >= joint_count_) {
        throw ContractViolation("task '" + task.id + "' references joint " +
                                std::to_string(jb->joint) + " outside the chain");
      }
    }
    if (task.kind == TaskKind::equality) equality_rows += task.dimension;
  }
  if (equality_rows > joint_count_) {
    throw OverConstrained("equality tasks need " + std::to_string(equality_rows) +
                          " rows but the chain has " + std::to_string(joint_count_) + " joints");
  }
}

std::size_t TaskHierarchy::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    if (tasks_[i].id == id) return i;
  }
  throw LookupError("unknown task '" + id + "'");
}

std::size_t TaskHierarchy::set_based_count() const {
  std::size_t n = 0;
  for (const auto& t : tasks_) n += t.kind == TaskKind::set_based ? 1 : 0;
  return n;
}

Vector clik_velocity(std::span<const StackLevel> stack, std::size_t joint_count, double damping) {
  const auto n = static_cast<Eigen::Index>(joint_count);
  Vector qdot = Vector::Zero(n);
  Matrix augmented(0, n);
  Matrix projector = Matrix::Identity(n, n);
  for (std::size_t i = 0; i < stack.size(); ++i) {
    const StackLevel& level = stack[i];
    const Eigen::Index m = level.jacobian.rows();
    if (level.jacobian.cols() != n || level.error.size() != m || level.feedforward.size() != m ||
        level.gain.rows() != m || level.gain.cols() != m) {
      throw ContractViolation("stack level " + std::to_string(i) + " has inconsistent dimensions");
    }
    const Vector level_velocity = damped_pseudoinverse(level.jacobian, damping) *
                                  (level.feedforward + level.gain * level.error);
    qdot += projector * level_velocity;
    if (i + 1 == stack.size()) break;
    Matrix stacked(augmented.rows() + m, n);
    stacked << augmented, level.jacobian;
    augmented = std::move(stacked);
    if (augmented.rows() > n) {
      throw OverConstrained("augmented Jacobian of the first " + std::to_string(i + 1) +
                            " levels has " + std::to_string(augmented.rows()) + " rows for " +
                            std::to_string(n) + " joints");
    }
    projector = null_space_projector(augmented);
  }
  return qdot;
}

std::uint64_t ActiveStack::hierarchy_mask() const {
  std::uint64_t mask = 0;
  for (const auto& a : set_based) mask |= std::uint64_t{1} << a.task_index;
  return mask;
}

ActiveStack build_active_stack(const TaskHierarchy& hierarchy,
                               std::span<const TaskEvaluation> evaluations) {
  if (evaluations.size() != hierarchy.size()) {
    throw ContractViolation("expected one evaluation per hierarchy task");
  }
  ActiveStack active;
  for (std::size_t i = 0; i < hierarchy.size(); ++i) {
    const TaskSpec& task = hierarchy[i];
    if (task.kind == TaskKind::equality) {
      active.equality.push_back(i);
      continue;
    }
    const Vector& value = evaluations[i].reading.value;
    if (value.size() != 1) {
      throw ContractViolation("set-based task '" + task.id + "' reading is not scalar");
    }
    const double sigma = value[0];
    const SetBounds& b = *task.bounds;
    if (!std::isfinite(sigma) || sigma > b.upper + kHardLimitMargin ||
        sigma < b.lower - kHardLimitMargin) {
      throw HardLimitBreach("task '" + task.id + "' value " + std::to_string(sigma) +
                            " is outside its hard band");
    }
    if (b.has_upper() && sigma > b.upper_activation()) {
      active.set_based.push_back({i, BoundSide::upper, b.safe_upper});
    } else if (b.has_lower() && sigma < b.lower_activation()) {
      active.set_based.push_back({i, BoundSide::lower, b.safe_lower});
    }
  }
  return active;
}

std::vector<StackLevel> candidate_stack(const TaskHierarchy& hierarchy, const ActiveStack& active,
                                        std::span<const TaskEvaluation> evaluations,
                                        std::uint64_t mask) {
  std::vector<StackLevel> stack;
  std::size_t next_equality = 0;
  std::size_t next_set = 0;
  for (std::size_t i = 0; i < hierarchy.size(); ++i) {
    const TaskSpec& task = hierarchy[i];
    const TaskEvaluation& ev = evaluations[i];
    if (next_equality < active.equality.size() && active.equality[next_equality] == i) {
      ++next_equality;
      stack.push_back({ev.reading.jacobian, ev.feedforward, task.gain, ev.error});
    } else if (next_set < active.set_based.size() && active.set_based[next_set].task_index == i) {
      const std::size_t k = next_set++;
      if ((mask >> k) & 1U) {
        const Vector error = Vector::Constant(1, active.set_based[k].target - ev.reading.value[0]);
        stack.push_back({ev.reading.jacobian, Vector::Zero(1), task.gain, error});
      }
    }
  }
  return stack;
}

std::vector<Candidate> enumerate_solutions(const TaskHierarchy& hierarchy,
                                           const ActiveStack& active,
                                           std::span<const TaskEvaluation> evaluations,
                                           const SolverConfig& config) {
  const std::size_t n_active = active.set_based_count();
  if (n_active > config.max_active_set_tasks) {
    throw CombinatorialLimit(std::to_string(n_active) + " active set-based tasks exceed the limit of " +
                             std::to_string(config.max_active_set_tasks));
  }
  const std::uint64_t count = std::uint64_t{1} << n_active;
  std::vector<Candidate> candidates;
  candidates.reserve(count);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    const auto stack = candidate_stack(hierarchy, active, evaluations, mask);
    candidates.push_back({mask, clik_velocity(stack, hierarchy.joint_count(), config.damping)});
  }
  return candidates;
}

std::vector<Candidate> filter_feasible(std::span<const Candidate> candidates,
                                       const ActiveStack& active,
                                       std::span<const TaskEvaluation> evaluations,
                                       double tolerance) {
  const std::size_t n_active = active.set_based_count();
  const std::uint64_t full = (std::uint64_t{1} << n_active) - 1;
  std::vector<Candidate> feasible;
  for (const Candidate& c : candidates) {
    bool keep = true;
    if (c.mask != full) {
      for (std::size_t k = 0; k < n_active && keep; ++k) {
        if ((c.mask >> k) & 1U) continue;
        const ActiveSetTask& a = active.set_based[k];
        const double rate = evaluations[a.task_index].reading.jacobian.row(0).dot(c.velocity);
        keep = a.side == BoundSide::upper ? rate <= tolerance : rate >= -tolerance;
      }
    }
    if (keep) feasible.push_back(c);
  }
  return feasible;
}

const Candidate& choose_solution(std::span<const Candidate> feasible, double tie_tolerance) {
  if (feasible.empty()) throw ContractViolation("cannot choose from an empty feasible set");
  double best_norm = 0.0;
  for (const Candidate& c : feasible) best_norm = std::max(best_norm, c.velocity.norm());
  const Candidate* best = nullptr;
  for (const Candidate& c : feasible) {
    if (c.velocity.norm() < best_norm - tie_tolerance) continue;
    if (best == nullptr) {
      best = &c;
      continue;
    }
    const int bits = std::popcount(c.mask);
    const int best_bits = std::popcount(best->mask);
    if (bits < best_bits || (bits == best_bits && c.mask < best->mask)) best = &c;
  }
  return *best;
}

std::vector<TaskEvaluation> evaluate_hierarchy(const TaskHierarchy& hierarchy,
                                               const TaskContext& context) {
  std::vector<TaskEvaluation> evaluations;
  evaluations.reserve(hierarchy.size());
  for (const auto& task : hierarchy.tasks()) evaluations.push_back(evaluate_task(task, context));
  return evaluations;
}

SolveResult solve_step(const TaskHierarchy& hierarchy, std::span<const TaskEvaluation> evaluations,
                       const SolverConfig& config) {
  for (const auto& ev : evaluations) {
    if (!ev.reading.value.allFinite() || !ev.reading.jacobian.allFinite() ||
        !ev.error.allFinite()) {
      throw ContractViolation("non-finite task reading");
    }
  }
  SolveResult result;
  result.active = build_active_stack(hierarchy, evaluations);
  result.candidates = enumerate_solutions(hierarchy, result.active, evaluations, config);
  const auto feasible =
      filter_feasible(result.candidates, result.active, evaluations, config.feasibility_tolerance);
  const Candidate& chosen = choose_solution(feasible, config.tie_tolerance);
  for (const Candidate& c : feasible) result.feasible.push_back(c.mask);  // masks == indices
  result.chosen_mask = chosen.mask;
  for (std::size_t k = 0; k < result.active.set_based.size(); ++k) {
    if ((chosen.mask >> k) & 1U) {
      result.chosen_hierarchy_mask |= std::uint64_t{1} << result.active.set_based[k].task_index;
    }
  }
  result.unscaled = chosen.velocity;
  const double peak = chosen.velocity.cwiseAbs().maxCoeff();
  result.scale = peak > config.velocity_cap ? config.velocity_cap / peak : 1.0;
  // The clamp only absorbs rounding in scale * peak.
  result.velocity = (result.scale * chosen.velocity)
                        .cwiseMax(-config.velocity_cap)
                        .cwiseMin(config.velocity_cap);
  return result;
}

SolveResult solve_step(const TaskHierarchy& hierarchy, const TaskContext& context,
                       const SolverConfig& config) {
  const auto evaluations = evaluate_hierarchy(hierarchy, context);
  return solve_step(hierarchy, evaluations, config);
}

}  // namespace tpik
