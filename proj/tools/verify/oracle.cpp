#include "oracle.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "tpik/errors.hpp"

namespace tpik::verify {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Vector3d v;
  do {
    v = {n(rng), n(rng), n(rng)};
  } while (v.norm() < 1e-6);
  return v.normalized();
}

struct ActiveEntry {
  std::size_t index;
  bool upper;
  double target;
};

}  // namespace

KinematicChain random_chain(std::mt19937_64& rng, std::size_t joints) {
  std::vector<RevoluteJoint> chain;
  for (std::size_t i = 0; i < joints; ++i) {
    RevoluteJoint j;
    j.axis = random_unit(rng);
    j.offset = Transform::Identity();
    j.offset.translation() =
        Eigen::Vector3d(uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3));
    j.offset.linear() = Eigen::AngleAxisd(uniform(rng, -std::numbers::pi, std::numbers::pi),
                                          random_unit(rng))
                            .toRotationMatrix();
    chain.push_back(j);
  }
  Transform tool = Transform::Identity();
  tool.translation() = Eigen::Vector3d(0.0, 0.0, uniform(rng, 0.0, 0.2));
  return KinematicChain(std::move(chain), tool);
}

Scenario random_scenario(std::mt19937_64& rng, std::size_t n_active) {
  constexpr double kBuffer = 0.1;
  for (;;) {
    KinematicChain chain = random_chain(rng, 7);
    Vector q(7);
    for (Eigen::Index i = 0; i < 7; ++i) q[i] = uniform(rng, -std::numbers::pi, std::numbers::pi);

    TaskContext ctx;
    ctx.chain = &chain;
    ctx.q = q;
    const Eigen::Vector3d tool = forward_kinematics(chain, q).translation();
    Pose target;
    target.position = tool + Eigen::Vector3d(uniform(rng, -0.2, 0.2), uniform(rng, -0.2, 0.2),
                                             uniform(rng, -0.2, 0.2));
    ctx.targets["position"] = target;

    const std::size_t n_inactive = std::uniform_int_distribution<std::size_t>(0, 2)(rng);
    std::vector<std::size_t> joints = {0, 1, 2, 3, 4, 5, 6};
    std::shuffle(joints.begin(), joints.end(), rng);
    std::vector<TaskSpec> tasks;
    tasks.push_back(make_task("position", TaskKind::equality, PositionBinding{"tool"},
                              Vector::Constant(1, uniform(rng, 0.5, 3.0))));
    for (std::size_t k = 0; k < n_active + n_inactive; ++k) {
      const bool active = k < n_active;
      const bool upper = std::bernoulli_distribution(0.5)(rng);
      const double gain = uniform(rng, 0.5, 2.0);
      const bool obstacle = std::bernoulli_distribution(0.3)(rng);
      double sigma = 0.0;
      TaskBinding binding;
      std::string id;
      if (obstacle) {
        const Eigen::Vector3d point = tool + uniform(rng, 0.15, 0.5) * random_unit(rng);
        id = "obstacle_" + std::to_string(k);
        ctx.points[id] = point;
        binding = ObstacleDistanceBinding{id, "tool"};
        sigma = (tool - point).norm();
      } else {
        id = "joint" + std::to_string(joints[k] + 1) + "_limit";
        binding = JointValueBinding{joints[k]};
        sigma = q[static_cast<Eigen::Index>(joints[k])];
      }
      double lower = 0.0;
      double upper_bound = 0.0;
      if (active && upper) {
        upper_bound = sigma + uniform(rng, -0.4, 0.09);
        lower = upper_bound - uniform(rng, 0.5, 2.0);
      } else if (active) {
        lower = sigma - uniform(rng, -0.4, 0.09);
        upper_bound = lower + uniform(rng, 0.5, 2.0);
      } else {
        lower = sigma - uniform(rng, 0.15, 1.0);
        upper_bound = sigma + uniform(rng, 0.15, 1.0);
      }
      if (obstacle && (!active || !upper)) upper_bound = kUnbounded;
      if (obstacle && active && upper) lower = -kUnbounded;
      tasks.push_back(make_task(id, TaskKind::set_based, binding, Vector::Constant(1, gain),
                                SetBounds::with_midpoint_safety(lower, upper_bound, kBuffer)));
    }
    std::shuffle(tasks.begin(), tasks.end(), rng);
    try {
      TaskHierarchy hierarchy(std::move(tasks), 7);
      auto evaluations = evaluate_hierarchy(hierarchy, ctx);
      if (build_active_stack(hierarchy, evaluations).set_based_count() != n_active) continue;
      return Scenario{std::move(chain), std::move(hierarchy), std::move(evaluations), n_active};
    } catch (const Error&) {
      continue;  // degenerate draw (e.g. obstacle gradient); redraw
    }
  }
}

OracleSolution brute_force_solve(const TaskHierarchy& hierarchy,
                                 std::span<const TaskEvaluation> evaluations,
                                 const SolverConfig& config) {
  std::vector<ActiveEntry> active;
  for (std::size_t i = 0; i < hierarchy.size(); ++i) {
    const TaskSpec& t = hierarchy[i];
    if (t.kind != TaskKind::set_based) continue;
    const double s = evaluations[i].reading.value[0];
    const SetBounds& b = *t.bounds;
    if (std::isfinite(b.upper) && s > b.upper - b.buffer) {
      active.push_back({i, true, b.safe_upper});
    } else if (std::isfinite(b.lower) && s < b.lower + b.buffer) {
      active.push_back({i, false, b.safe_lower});
    }
  }

  struct Leaf {
    std::vector<bool> inserted;
    Vector velocity;
  };
  std::vector<Leaf> leaves;
  std::vector<bool> inserted(active.size(), false);
  std::function<void(std::size_t)> branch = [&](std::size_t k) {
    if (k == active.size()) {
      std::vector<StackLevel> stack;
      for (std::size_t i = 0; i < hierarchy.size(); ++i) {
        const TaskSpec& t = hierarchy[i];
        const TaskEvaluation& ev = evaluations[i];
        if (t.kind == TaskKind::equality) {
          stack.push_back({ev.reading.jacobian, ev.feedforward, t.gain, ev.error});
          continue;
        }
        for (std::size_t a = 0; a < active.size(); ++a) {
          if (active[a].index == i && inserted[a]) {
            stack.push_back({ev.reading.jacobian, Vector::Zero(1), t.gain,
                             Vector::Constant(1, active[a].target - ev.reading.value[0])});
          }
        }
      }
      leaves.push_back({inserted, clik_velocity(stack, hierarchy.joint_count(), config.damping)});
      return;
    }
    inserted[k] = true;
    branch(k + 1);
    inserted[k] = false;
    branch(k + 1);
  };
  branch(0);

  std::vector<const Leaf*> feasible;
  for (const Leaf& leaf : leaves) {
    bool ok = true;
    for (std::size_t a = 0; a < active.size(); ++a) {
      if (leaf.inserted[a]) continue;
      const double rate = evaluations[active[a].index].reading.jacobian.row(0).dot(leaf.velocity);
      if (active[a].upper ? rate > config.feasibility_tolerance : rate < -config.feasibility_tolerance) {
        ok = false;
      }
    }
    if (ok) feasible.push_back(&leaf);
  }

  auto mask_of = [&](const Leaf& leaf) {
    std::uint64_t m = 0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      if (leaf.inserted[a]) m |= std::uint64_t{1} << a;
    }
    return m;
  };
  double best_norm = 0.0;
  for (const Leaf* l : feasible) best_norm = std::max(best_norm, l->velocity.norm());
  const Leaf* best = nullptr;
  for (const Leaf* l : feasible) {
    if (l->velocity.norm() < best_norm - config.tie_tolerance) continue;
    if (best == nullptr) {
      best = l;
      continue;
    }
    const auto m = mask_of(*l);
    const auto bm = mask_of(*best);
    if (std::popcount(m) < std::popcount(bm) || (std::popcount(m) == std::popcount(bm) && m < bm)) {
      best = l;
    }
  }

  OracleSolution out;
  out.candidates = leaves.size();
  out.feasible = feasible.size();
  if (best == nullptr) return out;
  out.velocity = best->velocity;
  for (std::size_t a = 0; a < active.size(); ++a) {
    if (best->inserted[a]) out.hierarchy_mask |= std::uint64_t{1} << active[a].index;
  }
  return out;
}

OracleReport verify_solver(std::size_t cases, std::uint64_t seed) {
  OracleReport report;
  std::mt19937_64 rng(seed);
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t n_active = 1 + c % 3;
    const Scenario s = random_scenario(rng, n_active);
    const SolveResult got = solve_step(s.hierarchy, s.evaluations);
    const OracleSolution want = brute_force_solve(s.hierarchy, s.evaluations);
    ++report.cases;
    ++report.by_active[n_active];
    const bool same = want.velocity.size() == got.unscaled.size() && want.velocity == got.unscaled &&
                      want.hierarchy_mask == got.chosen_hierarchy_mask &&
                      want.feasible == got.feasible.size() && want.candidates == got.candidates.size();
    if (!same) {
      ++report.mismatches;
      if (report.failures.size() < 10) {
        std::ostringstream msg;
        msg << "case " << c << " (n_active " << n_active << "): solver mask "
            << got.chosen_hierarchy_mask << " vs oracle " << want.hierarchy_mask
            << ", feasible " << got.feasible.size() << " vs " << want.feasible;
        report.failures.push_back(msg.str());
      }
    }
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace tpik::verify
