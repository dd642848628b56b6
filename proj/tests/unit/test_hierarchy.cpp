#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "tpik/chain_config.hpp"
#include "tpik/errors.hpp"
#include "tpik/hierarchy.hpp"
#include "verify/oracle.hpp"

using namespace tpik;

namespace {

StackLevel level(const Matrix& j, const Vector& error, double gain = 1.0) {
  return {j, Vector::Zero(j.rows()), gain * Matrix::Identity(j.rows(), j.rows()), error};
}

TaskEvaluation scalar_eval(double value, const Matrix& row) {
  TaskEvaluation ev;
  ev.reading.value = Vector::Constant(1, value);
  ev.reading.jacobian = row;
  ev.feedforward = Vector::Zero(1);
  return ev;
}

TaskEvaluation equality_eval(const Matrix& j, const Vector& error) {
  TaskEvaluation ev;
  ev.reading.value = Vector::Zero(j.rows());
  ev.reading.jacobian = j;
  ev.error = error;
  ev.feedforward = Vector::Zero(j.rows());
  return ev;
}

TaskSpec joint_limit(const std::string& id, std::size_t joint, double lo, double hi, double eps = 0.1) {
  return make_task(id, TaskKind::set_based, JointValueBinding{joint}, Vector::Ones(1),
                   SetBounds::with_midpoint_safety(lo, hi, eps));
}

TaskSpec position(const std::string& id = "position") {
  return make_task(id, TaskKind::equality, PositionBinding{}, Vector::Ones(3));
}

Matrix unit_row(Eigen::Index n, Eigen::Index k) {
  Matrix r = Matrix::Zero(1, n);
  r(0, k) = 1.0;
  return r;
}

}  // namespace

TEST(ClikVelocity, SingleTaskIsDampedInverseTimesGainError) {
  const Matrix j = Matrix::Random(3, 7);
  const Vector e = Vector::Random(3);
  const StackLevel stack[] = {level(j, e, 2.0)};
  const Vector got = clik_velocity(stack, 7, 0.01);
  const Vector want = damped_pseudoinverse(j, 0.01) * (2.0 * e);
  EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ClikVelocity, OrthogonalTasksBothSatisfied) {
  Matrix j1 = Matrix::Zero(2, 6), j2 = Matrix::Zero(3, 6);
  j1.leftCols(2) = Matrix::Random(2, 2);
  j2.rightCols(4) = Matrix::Random(3, 4);
  const Vector e1 = Vector::Random(2), e2 = Vector::Random(3);
  const StackLevel stack[] = {level(j1, e1, 1.5), level(j2, e2, 0.5)};
  const Vector qd = clik_velocity(stack, 6, 0.0);
  EXPECT_LE((j1 * qd - 1.5 * e1).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((j2 * qd - 0.5 * e2).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ClikVelocity, ConflictingTasksPrimaryExactSecondaryInNullSpace) {
  const Matrix j1 = Matrix::Random(2, 4);
  Matrix j2(2, 4);
  j2 << j1.row(0), Matrix::Random(1, 4);  // shares a row with the primary
  const Vector e1 = Vector::Random(2), e2 = Vector::Random(2);
  const StackLevel both[] = {level(j1, e1), level(j2, e2)};
  const StackLevel first[] = {level(j1, e1)};
  const Vector qd = clik_velocity(both, 4, 0.0);
  const Vector q1 = clik_velocity(first, 4, 0.0);
  EXPECT_LE((j1 * qd - e1).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((j1 * (qd - q1)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ClikVelocity, OverConstrainedAugmentation) {
  const StackLevel stack[] = {level(Matrix::Random(6, 7), Vector::Random(6)),
                              level(Matrix::Random(3, 7), Vector::Random(3)),
                              level(Matrix::Random(1, 7), Vector::Random(1))};
  EXPECT_THROW(clik_velocity(stack, 7, 0.01), OverConstrained);
  // The last level is never projected through, so 6 + 3 rows alone are fine.
  EXPECT_NO_THROW(clik_velocity(std::span(stack, 2), 7, 0.01));
}

TEST(ClikVelocity, PriorityStrictnessOnFullRankFixtures) {
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix j1 = Matrix::Random(3, 7);
    const Vector e1 = Vector::Random(3);
    const StackLevel stack[] = {level(j1, e1, 2.0), level(Matrix::Random(2, 7), Vector::Random(2)),
                                level(Matrix::Random(1, 7), Vector::Random(1))};
    const Vector qd = clik_velocity(stack, 7, 0.0);
    EXPECT_LE((j1 * qd - 2.0 * e1).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ClikVelocity, LowerLevelsDoNotDisturbHigherOnes) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 500; ++trial) {
    const auto chain = verify::random_chain(rng, 7);
    const Vector q = tpik::testing::random_q(rng, 7);
    const Matrix j = geometric_jacobian(chain, q, forward_kinematics(chain, q).translation());
    // Levels: linear rows, one angular row, a random joint row.
    const std::vector<StackLevel> stack = {level(j.topRows(3), Vector::Random(3)),
                                           level(j.row(4), Vector::Random(1)),
                                           level(unit_row(7, trial % 7), Vector::Random(1))};
    Matrix augmented(0, 7);
    for (std::size_t i = 1; i < stack.size(); ++i) {
      Matrix next(augmented.rows() + stack[i - 1].jacobian.rows(), 7);
      next << augmented, stack[i - 1].jacobian;
      augmented = next;
      const Vector with = clik_velocity(std::span(stack).first(i + 1), 7, 0.01);
      const Vector without = clik_velocity(std::span(stack).first(i), 7, 0.01);
      EXPECT_LE((augmented * (with - without)).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_LE((augmented * null_space_projector(augmented)).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(TaskHierarchy, Validation) {
  EXPECT_THROW(TaskHierarchy({position("a"), position("a")}, 7), ContractViolation);
  EXPECT_THROW(TaskHierarchy({joint_limit("j", 7, 0, 1)}, 7), ContractViolation);
  EXPECT_THROW(TaskHierarchy({position("a"), position("b"), position("c")}, 7), OverConstrained);
  const TaskHierarchy h({joint_limit("j", 3, 0.7, 5.5), position()}, 7);
  EXPECT_EQ(h.index_of("position"), 1u);
  EXPECT_THROW(h.index_of("nope"), LookupError);
  EXPECT_EQ(h.set_based_count(), 1u);
}

TEST(BuildActiveStack, ThresholdExamples) {
  const TaskHierarchy h({joint_limit("joint4", 3, 0.7, 5.5),
                         make_task("obstacle", TaskKind::set_based, ObstacleDistanceBinding{"o"},
                                   Vector::Ones(1), SetBounds::with_midpoint_safety(0.25, kUnbounded, 0.03)),
                         position()},
                        7);
  const Matrix row = unit_row(7, 3);
  std::vector<TaskEvaluation> ev = {scalar_eval(5.45, row), scalar_eval(0.26, row),
                                    equality_eval(Matrix::Random(3, 7), Vector::Random(3))};
  ActiveStack a = build_active_stack(h, ev);
  ASSERT_EQ(a.set_based.size(), 2u);
  EXPECT_EQ(a.set_based[0].side, BoundSide::upper);
  EXPECT_NEAR(a.set_based[0].target, 5.45, 1e-15);
  EXPECT_EQ(a.set_based[1].side, BoundSide::lower);
  EXPECT_NEAR(a.set_based[1].target, 0.265, 1e-15);
  EXPECT_EQ(a.equality, std::vector<std::size_t>{2});
  EXPECT_EQ(a.hierarchy_mask(), 0b011u);

  ev[0] = scalar_eval(3.0, row);
  ev[1] = scalar_eval(1.0, row);
  a = build_active_stack(h, ev);
  EXPECT_TRUE(a.set_based.empty());

  ev[0] = scalar_eval(6.01, row);
  EXPECT_THROW(build_active_stack(h, ev), HardLimitBreach);
  ev[0] = scalar_eval(0.19, row);
  EXPECT_THROW(build_active_stack(h, ev), HardLimitBreach);
}

TEST(EnumerateSolutions, CandidateCounts) {
  std::mt19937_64 rng(42);
  for (std::size_t n_active : {1u, 2u, 3u}) {
    const auto s = verify::random_scenario(rng, n_active);
    const ActiveStack a = build_active_stack(s.hierarchy, s.evaluations);
    const auto c = enumerate_solutions(s.hierarchy, a, s.evaluations);
    ASSERT_EQ(c.size(), std::size_t{1} << n_active);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(c[i].mask, i);
  }
  const TaskHierarchy h({position()}, 7);
  const std::vector<TaskEvaluation> ev = {equality_eval(Matrix::Random(3, 7), Vector::Random(3))};
  EXPECT_EQ(enumerate_solutions(h, build_active_stack(h, ev), ev).size(), 1u);
}

TEST(EnumerateSolutions, EmptyMaskEqualsPureEqualityStack) {
  std::mt19937_64 rng(43);
  const auto s = verify::random_scenario(rng, 3);
  const ActiveStack a = build_active_stack(s.hierarchy, s.evaluations);
  const auto c = enumerate_solutions(s.hierarchy, a, s.evaluations);
  std::vector<StackLevel> eq;
  for (std::size_t i : a.equality) {
    const auto& ev = s.evaluations[i];
    eq.push_back({ev.reading.jacobian, ev.feedforward, s.hierarchy[i].gain, ev.error});
  }
  const Vector pure = clik_velocity(eq, 7, SolverConfig{}.damping);
  EXPECT_TRUE(c[0].velocity == pure);
}

TEST(EnumerateSolutions, CombinatorialLimit) {
  std::vector<TaskSpec> tasks;
  std::vector<TaskEvaluation> ev;
  for (std::size_t k = 0; k < 9; ++k) {
    tasks.push_back(joint_limit("j" + std::to_string(k), k, 0.0, 1.0));
    ev.push_back(scalar_eval(0.95, unit_row(9, static_cast<Eigen::Index>(k))));
  }
  const TaskHierarchy h(tasks, 9);
  const ActiveStack a = build_active_stack(h, ev);
  EXPECT_THROW(enumerate_solutions(h, a, ev), CombinatorialLimit);
  SolverConfig wide;
  wide.max_active_set_tasks = 9;
  EXPECT_EQ(enumerate_solutions(h, a, ev, wide).size(), 512u);
}

TEST(FilterFeasible, DirectionalTest) {
  const TaskHierarchy h({joint_limit("j", 0, 0.0, 1.0),
                         make_task("k", TaskKind::equality, JointValueBinding{1}, Vector::Ones(1))},
                        2);
  Matrix row(1, 2);
  row << 1, 0;
  const std::vector<TaskEvaluation> ev = {scalar_eval(0.95, row),
                                          equality_eval(unit_row(2, 1), Vector::Random(1))};
  const ActiveStack a = build_active_stack(h, ev);
  const Candidate away{0, (Vector(2) << -0.3, 0.0).finished()};
  const Candidate toward{0, (Vector(2) << 0.2, 0.0).finished()};
  const Candidate full{1, (Vector(2) << 5.0, 0.0).finished()};
  EXPECT_EQ(filter_feasible(std::vector{away}, a, ev).size(), 1u);
  EXPECT_EQ(filter_feasible(std::vector{toward}, a, ev).size(), 0u);
  EXPECT_EQ(filter_feasible(std::vector{full}, a, ev).size(), 1u);
  const Candidate null_motion{0, (Vector(2) << 1e-10, 1.0).finished()};
  EXPECT_EQ(filter_feasible(std::vector{null_motion}, a, ev).size(), 1u);
}

TEST(ChooseSolution, HighestNormAndTieBreak) {
  const std::vector<Candidate> two = {{1, Vector::Constant(1, 0.4)}, {0, Vector::Constant(1, 0.9)}};
  EXPECT_EQ(choose_solution(two).mask, 0u);
  const std::vector<Candidate> ties = {{3, Vector::Ones(2)}, {1, Vector::Ones(2)}, {2, Vector::Ones(2)},
                                       {0, Vector::Ones(2)}};
  EXPECT_EQ(choose_solution(ties).mask, 0u);
  const std::vector<Candidate> no_zero = {{3, Vector::Ones(2)}, {2, Vector::Ones(2)}, {1, Vector::Ones(2)}};
  EXPECT_EQ(choose_solution(no_zero).mask, 1u);
  EXPECT_THROW(choose_solution(std::vector<Candidate>{}), ContractViolation);
}

TEST(SolveStep, InactiveSetTasksReduceToEqualityClik) {
  const TaskHierarchy h({joint_limit("j", 0, -3.0, 3.0), position()}, 7);
  const Matrix j = Matrix::Random(3, 7);
  const Vector e = 0.01 * Vector::Random(3);
  const std::vector<TaskEvaluation> ev = {scalar_eval(0.0, unit_row(7, 0)), equality_eval(j, e)};
  const SolveResult r = solve_step(h, ev);
  const StackLevel only[] = {level(j, e)};
  EXPECT_TRUE(r.unscaled == clik_velocity(only, 7, 0.01));
  EXPECT_EQ(r.candidates.size(), 1u);
}

TEST(SolveStep, UniformCapPreservesDirection) {
  const TaskHierarchy h({position()}, 7);
  const std::vector<TaskEvaluation> ev = {equality_eval(Matrix::Random(3, 7), 10.0 * Vector::Ones(3))};
  const SolveResult r = solve_step(h, ev);
  EXPECT_LE(r.velocity.cwiseAbs().maxCoeff(), 0.8);
  EXPECT_LT(r.scale, 1.0);
  EXPECT_LE((r.velocity - r.scale * r.unscaled).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SolveStep, RejectsNonFiniteReadings) {
  const TaskHierarchy h({position()}, 7);
  std::vector<TaskEvaluation> ev = {equality_eval(Matrix::Random(3, 7), Vector::Ones(3))};
  ev[0].error[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(solve_step(h, ev), ContractViolation);
}

namespace {

struct Snapshot {
  double sigma;
  double rate;  ///< J_k qdot of the set-based task
  double safe;
};

/// Pose-tracking step with the set-based task as top priority; the pose
/// target pulls in a random direction (or into the obstacle).
Snapshot joint4_snapshot(double q4, std::mt19937_64& rng) {
  const auto chain = reference_chain();
  Vector q(7);
  q << 0.1, 3.6, 0.2, q4, 0.3, 2.2, 0.0;
  const TaskHierarchy h({joint_limit("joint4_limit", 3, 0.7, 5.5),
                         make_task("pose", TaskKind::equality, PoseBinding{}, Vector::Constant(1, 2.0))},
                        7);
  TaskContext ctx;
  ctx.chain = &chain;
  ctx.q = q;
  Pose target = frame_pose(chain, q, TaskFrame{});
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  target.position += Eigen::Vector3d(u(rng), u(rng), u(rng));
  target.orientation = Eigen::Quaterniond::UnitRandom();
  ctx.targets["pose"] = target;
  const SolveResult r = solve_step(h, ctx);
  return {q4, r.velocity[3], h[0].bounds->safe_upper};
}

Snapshot obstacle_snapshot(double distance, std::mt19937_64& rng) {
  const auto chain = reference_chain();
  Vector q(7);
  q << 0.0, 3.6, 0.0, 1.9, 0.0, 2.2, 0.0;
  const Eigen::Vector3d tool = forward_kinematics(chain, q).translation();
  const TaskHierarchy h({make_task("obstacle", TaskKind::set_based, ObstacleDistanceBinding{"o"},
                                   Vector::Ones(1), SetBounds::with_midpoint_safety(0.25, kUnbounded, 0.03)),
                         make_task("pose", TaskKind::equality, PoseBinding{}, Vector::Constant(1, 2.0))},
                        7);
  std::normal_distribution<double> n;
  const Eigen::Vector3d dir = Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized();
  TaskContext ctx;
  ctx.chain = &chain;
  ctx.q = q;
  ctx.points["o"] = tool + distance * dir;
  Pose target = frame_pose(chain, q, TaskFrame{});
  target.position = ctx.points["o"];
  ctx.targets["pose"] = target;
  const auto ev = evaluate_hierarchy(h, ctx);
  const SolveResult r = solve_step(h, ev);
  return {ev[0].reading.value[0], ev[0].reading.jacobian.row(0).dot(r.velocity), h[0].bounds->safe_lower};
}

}  // namespace

TEST(SolveStep, JointBetweenSafetyValueAndBoundMovesAway) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 200; ++trial) {
    EXPECT_LE(joint4_snapshot(5.48, rng).rate, 1e-9) << trial;
  }
}

TEST(SolveStep, JointInsideBufferNeverStepsPastSafetyValue) {
  // Between the activation threshold and the safety value the inserted task
  // regulates toward the safety value, which still lies inside the valid set.
  std::mt19937_64 rng(48);
  const double dt = 0.01;
  for (int trial = 0; trial < 200; ++trial) {
    const Snapshot s = joint4_snapshot(5.42, rng);
    EXPECT_LE(s.sigma + dt * s.rate, std::max(s.sigma, s.safe) + 1e-12) << trial;
  }
}

TEST(SolveStep, ObstacleBetweenBoundAndSafetyValueDistanceGrows) {
  std::mt19937_64 rng(45);
  for (int trial = 0; trial < 200; ++trial) {
    EXPECT_GE(obstacle_snapshot(0.26, rng).rate, -1e-9) << trial;
  }
}

TEST(SolveStep, ObstacleInsideBufferNeverStepsPastSafetyValue) {
  std::mt19937_64 rng(49);
  const double dt = 0.01;
  for (int trial = 0; trial < 200; ++trial) {
    const Snapshot s = obstacle_snapshot(0.27, rng);
    EXPECT_GE(s.sigma + dt * s.rate, std::min(s.sigma, s.safe) - 1e-12) << trial;
  }
}

TEST(SolveStep, MatchesBruteForceOracle) {
  const auto report = verify::verify_solver(1000, 7);
  EXPECT_EQ(report.mismatches, 0u);
  for (const auto& f : report.failures) ADD_FAILURE() << f;
}

TEST(SolveStep, OracleScenariosExerciseTheFilter) {
  // Guards against a vacuous oracle comparison: the scenarios must include
  // discarded candidates and choices other than the full mask.
  std::mt19937_64 rng(46);
  std::size_t filtered = 0, partial = 0;
  for (int c = 0; c < 300; ++c) {
    const auto s = verify::random_scenario(rng, 1 + c % 3);
    const SolveResult r = solve_step(s.hierarchy, s.evaluations);
    filtered += r.feasible.size() < r.candidates.size() ? 1 : 0;
    partial += r.chosen_mask + 1 != (std::uint64_t{1} << s.n_active) ? 1 : 0;
  }
  EXPECT_GT(filtered, 30u);
  EXPECT_GT(partial, 30u);
}

TEST(SolveStep, FeasibleSetNeverEmpty) {
  std::mt19937_64 rng(47);
  std::size_t empty = 0;
  for (int c = 0; c < 10000; ++c) {
    const auto s = verify::random_scenario(rng, 1 + c % 3);
    const SolveResult r = solve_step(s.hierarchy, s.evaluations);
    empty += r.feasible.empty() ? 1 : 0;
  }
  EXPECT_EQ(empty, 0u);
}

TEST(Convergence, SingleTaskExponentialDecay) {
  const auto chain = reference_chain();
  Vector q0(7);
  q0 << 0.0, 3.6, 0.0, 1.9, 0.0, 2.2, 0.0;
  const double dt = 0.01;
  const std::vector<Vector> gains = {Vector::Constant(3, 0.5), Vector::Constant(3, 1.0),
                                     Vector::Constant(3, 2.0), (Vector(3) << 0.5, 1.0, 2.0).finished()};
  for (const Vector& k : gains) {
    const TaskHierarchy h({make_task("p", TaskKind::equality, PositionBinding{}, k)}, 7);
    SolverConfig cfg;
    cfg.damping = 0.0;
    cfg.velocity_cap = std::numeric_limits<double>::infinity();
    Vector q = q0;
    TaskContext ctx;
    ctx.chain = &chain;
    Pose target = frame_pose(chain, q0, TaskFrame{});
    target.position += Eigen::Vector3d(0.03, -0.02, 0.02);
    ctx.targets["p"] = target;
    const double k_min = k.minCoeff(), k_max = k.maxCoeff();
    double e0 = -1.0;
    for (int tick = 0; tick <= 1000; ++tick) {
      ctx.q = q;
      const auto ev = evaluate_hierarchy(h, ctx);
      const double e = ev[0].error.norm();
      if (e0 < 0) e0 = e;
      const double t = tick * dt;
      ASSERT_LE(e, e0 * std::exp(-k_min * t) + 10 * dt * k_max * e0) << "k=" << k.transpose() << " t=" << t;
      q += dt * solve_step(h, ev, cfg).velocity;
    }
  }
}
