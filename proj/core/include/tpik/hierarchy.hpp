#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tpik/tasks.hpp"

namespace tpik {

/// Ordered task stack; index 0 has the highest priority.
class TaskHierarchy {
 public:
  /// Throws ContractViolation on duplicate ids, invalid tasks, joint-value
  /// bindings outside the chain, or OverConstrained when the equality tasks
  /// alone need more than `joint_count` rows.
  TaskHierarchy(std::vector<TaskSpec> tasks, std::size_t joint_count);

  const std::vector<TaskSpec>& tasks() const { return tasks_; }
  std::size_t size() const { return tasks_.size(); }
  std::size_t joint_count() const { return joint_count_; }
  const TaskSpec& operator[](std::size_t i) const { return tasks_[i]; }

  /// Throws LookupError for unknown ids.
  std::size_t index_of(const std::string& id) const;
  std::size_t set_based_count() const;

 private:
  std::vector<TaskSpec> tasks_;
  std::size_t joint_count_;
};

/// One level of a prioritized stack: q_i = J^+ (feedforward + gain * error).
struct StackLevel {
  Matrix jacobian;
  Vector feedforward;
  Matrix gain;
  Vector error;
};

/// Prioritized composition q = q_1 + N_1 q_2 + ... + N_{1,h-1} q_h, where
/// N_{1,i} projects onto the null space of the stacked Jacobian of levels
/// 1..i and each q_i uses the damped inverse of its own Jacobian.
///
/// Throws OverConstrained if an augmented Jacobian used for projection has
/// more rows than joints, ContractViolation on inconsistent dimensions.
Vector clik_velocity(std::span<const StackLevel> stack, std::size_t joint_count, double damping);

enum class BoundSide { upper, lower };

struct ActiveSetTask {
  std::size_t task_index = 0;  ///< position in the hierarchy
  BoundSide side = BoundSide::upper;
  double target = 0.0;  ///< safety value the task is driven to when inserted
};

/// Tasks of the hierarchy that take part in this tick's solution tree.
struct ActiveStack {
  std::vector<std::size_t> equality;     ///< always present, hierarchy order
  std::vector<ActiveSetTask> set_based;  ///< crossed an activation threshold, hierarchy order

  std::size_t set_based_count() const { return set_based.size(); }
  /// Bit i set <=> hierarchy task i is an active set-based task.
  std::uint64_t hierarchy_mask() const;
};

/// Hard margin beyond the physical thresholds that aborts the simulation.
inline constexpr double kHardLimitMargin = 0.5;

/// Throws HardLimitBreach when a set-based value leaves
/// [lower - 0.5, upper + 0.5], ContractViolation when a set-based reading is
/// not scalar or the readings do not match the hierarchy.
ActiveStack build_active_stack(const TaskHierarchy& hierarchy,
                               std::span<const TaskEvaluation> evaluations);

struct Candidate {
  /// Bit k set <=> the k-th active set-based task is inserted as an equality.
  std::uint64_t mask = 0;
  Vector velocity;
};

struct SolverConfig {
  double damping = 0.01;
  std::size_t max_active_set_tasks = 8;
  /// Per-joint speed limit; the final velocity is scaled uniformly to respect it.
  double velocity_cap = 0.8;
  double feasibility_tolerance = 1e-9;
  double tie_tolerance = 1e-12;
};

/// The stack that candidate `mask` solves: equality tasks plus the masked
/// active set-based tasks, each at its hierarchy slot.
std::vector<StackLevel> candidate_stack(const TaskHierarchy& hierarchy, const ActiveStack& active,
                                        std::span<const TaskEvaluation> evaluations,
                                        std::uint64_t mask);

/// One clik_velocity result per subset of the active set-based tasks, in
/// ascending mask order. Throws CombinatorialLimit above the configured maximum.
std::vector<Candidate> enumerate_solutions(const TaskHierarchy& hierarchy,
                                           const ActiveStack& active,
                                           std::span<const TaskEvaluation> evaluations,
                                           const SolverConfig& config = {});

/// Keeps candidates that move every non-inserted active set-based task away
/// from its violated bound (within the tolerance band). The all-inserted
/// candidate is always kept.
std::vector<Candidate> filter_feasible(std::span<const Candidate> candidates,
                                       const ActiveStack& active,
                                       std::span<const TaskEvaluation> evaluations,
                                       double tolerance = 1e-9);

/// Largest Euclidean norm; near-ties resolved by fewest mask bits, then lowest mask.
/// Throws ContractViolation on an empty set.
const Candidate& choose_solution(std::span<const Candidate> feasible, double tie_tolerance = 1e-12);

struct SolveResult {
  Vector velocity;        ///< after uniform cap scaling
  Vector unscaled;        ///< chosen candidate before scaling
  double scale = 1.0;
  ActiveStack active;
  std::vector<Candidate> candidates;
  std::vector<std::size_t> feasible;  ///< indices into candidates
  std::uint64_t chosen_mask = 0;      ///< over active set-based tasks
  std::uint64_t chosen_hierarchy_mask = 0;  ///< over hierarchy indices
};

/// Full set-based step: active stack, solution tree, feasibility, choice, cap.
SolveResult solve_step(const TaskHierarchy& hierarchy, std::span<const TaskEvaluation> evaluations,
                       const SolverConfig& config = {});

/// Evaluates every task of the hierarchy in `context`, then solves.
SolveResult solve_step(const TaskHierarchy& hierarchy, const TaskContext& context,
                       const SolverConfig& config = {});

std::vector<TaskEvaluation> evaluate_hierarchy(const TaskHierarchy& hierarchy,
                                               const TaskContext& context);

}  // namespace tpik
