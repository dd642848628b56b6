#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "tpik/errors.hpp"
#include "tpik/tasks.hpp"
#include "verify/oracle.hpp"

using namespace tpik;
using tpik::testing::planar_chain;

TEST(JointValueTask, SelectsCoordinate) {
  Vector q(3);
  q << 0.1, 0.2, 0.3;
  const TaskReading r = joint_value_task(q, 1);
  EXPECT_DOUBLE_EQ(r.value[0], 0.2);
  EXPECT_EQ(r.jacobian, (Matrix(1, 3) << 0, 1, 0).finished());
  EXPECT_THROW(joint_value_task(q, 3), ContractViolation);
}

TEST(SetBounds, PaperInstancesSatisfyOrdering) {
  for (auto [lo, hi, eps] : {std::tuple{0.7, 5.5, 0.1}, std::tuple{1.9, 5.1, 0.1}}) {
    const SetBounds b = SetBounds::with_midpoint_safety(lo, hi, eps);
    EXPECT_LT(b.lower, b.lower_activation());
    EXPECT_LT(b.lower_activation(), b.upper_activation());
    EXPECT_LT(b.upper_activation(), b.upper);
    EXPECT_GT(b.safe_upper, b.upper - eps);
    EXPECT_LT(b.safe_upper, b.upper);
    EXPECT_GT(b.safe_lower, b.lower);
    EXPECT_LT(b.safe_lower, b.lower + eps);
  }
  const SetBounds joint4 = SetBounds::with_midpoint_safety(0.7, 5.5, 0.1);
  EXPECT_NEAR(joint4.safe_upper, 5.45, 1e-15);
}

TEST(SetBounds, OneSidedObstacleBound) {
  const SetBounds b = SetBounds::with_midpoint_safety(0.25, kUnbounded, 0.03);
  EXPECT_TRUE(b.has_lower());
  EXPECT_FALSE(b.has_upper());
  EXPECT_NEAR(b.safe_lower, 0.265, 1e-15);
  EXPECT_NEAR(b.lower_activation(), 0.28, 1e-15);
}

TEST(SetBounds, RejectsBadOrdering) {
  EXPECT_THROW(SetBounds::with_midpoint_safety(1.0, 0.5, 0.1), ContractViolation);
  EXPECT_THROW(SetBounds::with_midpoint_safety(0.0, 0.15, 0.1), ContractViolation);
  EXPECT_THROW(SetBounds::with_midpoint_safety(0.0, 1.0, 0.0), ContractViolation);
  EXPECT_THROW(SetBounds::with_midpoint_safety(-kUnbounded, kUnbounded, 0.1), ContractViolation);
  SetBounds b = SetBounds::with_midpoint_safety(0.0, 1.0, 0.1);
  b.safe_upper = 0.85;  // inside the valid set, below the activation threshold
  EXPECT_THROW(b.validate(), ContractViolation);
}

TEST(TaskSpec, SetBasedMustBeScalar) {
  EXPECT_THROW(make_task("p", TaskKind::set_based, PositionBinding{}, Vector::Ones(1),
                         SetBounds::with_midpoint_safety(0, 1, 0.1)),
               ContractViolation);
  EXPECT_THROW(make_task("j", TaskKind::set_based, JointValueBinding{0}, Vector::Ones(1)),
               ContractViolation);
}

TEST(TaskSpec, GainMustBePositiveDefinite) {
  EXPECT_THROW(make_task("p", TaskKind::equality, PositionBinding{}, Vector::Constant(1, -1.0)),
               ContractViolation);
  TaskSpec t = make_task("p", TaskKind::equality, PositionBinding{}, Vector::Ones(3));
  t.gain(0, 1) = 0.5;  // asymmetric
  EXPECT_THROW(t.validate(), ContractViolation);
  EXPECT_THROW(make_task("", TaskKind::equality, PositionBinding{}, Vector::Ones(3)), ContractViolation);
}

TEST(ObstacleDistanceTask, UnitSeparation) {
  const auto chain = planar_chain(1);
  const TaskReading r = obstacle_distance_task(chain, Vector::Zero(1), TaskFrame{}, Eigen::Vector3d::Zero());
  EXPECT_DOUBLE_EQ(r.value[0], 1.0);
  // Gradient direction (1,0,0) times the linear Jacobian column (0,1,0) of the tip.
  EXPECT_NEAR(r.jacobian(0, 0), 0.0, 1e-15);
}

TEST(ObstacleDistanceTask, DegenerateGradient) {
  const auto chain = planar_chain(1);
  EXPECT_THROW(obstacle_distance_task(chain, Vector::Zero(1), TaskFrame{}, Eigen::Vector3d(1, 0, 0)),
               DegenerateGradient);
}

TEST(ObstacleDistanceTask, MatchesFiniteDifferences) {
  std::mt19937_64 rng(31);
  const double h = 1e-6;
  for (int trial = 0; trial < 200; ++trial) {
    const auto chain = verify::random_chain(rng, 7);
    const Vector q = tpik::testing::random_q(rng, 7);
    const Eigen::Vector3d obstacle = Eigen::Vector3d::Random();
    const TaskReading r = obstacle_distance_task(chain, q, TaskFrame{}, obstacle);
    for (Eigen::Index c = 0; c < 7; ++c) {
      Vector qp = q, qm = q;
      qp[c] += h;
      qm[c] -= h;
      const double fd = (obstacle_distance_task(chain, qp, TaskFrame{}, obstacle).value[0] -
                         obstacle_distance_task(chain, qm, TaskFrame{}, obstacle).value[0]) / (2 * h);
      ASSERT_NEAR(fd, r.jacobian(0, c), 1e-5);
    }
  }
}

TEST(PositionTask, ZeroErrorAtCurrentPosition) {
  const auto chain = planar_chain(2);
  TaskContext ctx;
  ctx.chain = &chain;
  ctx.q = Vector::Zero(2);
  Pose target;
  target.position = Eigen::Vector3d(2, 0, 0);
  ctx.targets["p"] = target;
  const auto task = make_task("p", TaskKind::equality, PositionBinding{}, Vector::Ones(3));
  EXPECT_LE(evaluate_task(task, ctx).error.norm(), 1e-15);
}

TEST(PositionTask, OffsetFrameMatchesComposedTransform) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const auto chain = verify::random_chain(rng, 7);
    const Vector q = tpik::testing::random_q(rng, 7);
    TaskFrame top;
    top.offset.translation() = Eigen::Vector3d(0, 0, 0.25);
    const TaskReading r = position_task(chain, q, top);
    const Eigen::Vector3d want = (forward_kinematics(chain, q) * top.offset).translation();
    EXPECT_LE((r.value - want).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(PositionTask, JacobianMatchesFiniteDifferencesWithOffset) {
  std::mt19937_64 rng(33);
  const double h = 1e-6;
  TaskFrame top;
  top.offset.translation() = Eigen::Vector3d(0.05, -0.02, 0.25);
  for (int trial = 0; trial < 100; ++trial) {
    const auto chain = verify::random_chain(rng, 7);
    const Vector q = tpik::testing::random_q(rng, 7);
    const TaskReading r = position_task(chain, q, top);
    for (Eigen::Index c = 0; c < 7; ++c) {
      Vector qp = q, qm = q;
      qp[c] += h;
      qm[c] -= h;
      const Vector fd = (position_task(chain, qp, top).value - position_task(chain, qm, top).value) / (2 * h);
      ASSERT_LE((fd - r.jacobian.col(c)).cwiseAbs().maxCoeff(), 1e-5);
    }
  }
}

TEST(OrientationTask, IdentityAndQuarterTurn) {
  std::mt19937_64 rng(34);
  const auto chain = verify::random_chain(rng, 7);
  const Vector q = tpik::testing::random_q(rng, 7);
  const Eigen::Quaterniond current(forward_kinematics(chain, q).linear());
  EXPECT_LE(orientation_task(chain, q, TaskFrame{}, current).value.norm(), 1e-15);
  const Eigen::Quaterniond desired =
      Eigen::Quaterniond(Eigen::AngleAxisd(std::numbers::pi / 2, Eigen::Vector3d::UnitZ())) * current;
  const Vector e = orientation_task(chain, q, TaskFrame{}, desired).value;
  EXPECT_NEAR(e[2], std::sin(std::numbers::pi / 4), 1e-12);
  EXPECT_NEAR(e.head<2>().norm(), 0.0, 1e-12);
}

TEST(OrientationTask, AngularRowsMatchFiniteDifferenceRotation) {
  std::mt19937_64 rng(35);
  const double h = 1e-6;
  TaskFrame top;
  top.offset.linear() = Eigen::AngleAxisd(0.7, Eigen::Vector3d::UnitY()).toRotationMatrix();
  for (int trial = 0; trial < 100; ++trial) {
    const auto chain = verify::random_chain(rng, 7);
    const Vector q = tpik::testing::random_q(rng, 7);
    const TaskReading r = orientation_task(chain, q, top, Eigen::Quaterniond::Identity());
    for (Eigen::Index c = 0; c < 7; ++c) {
      Vector qp = q, qm = q;
      qp[c] += h;
      qm[c] -= h;
      const Eigen::Matrix3d rp = frame_pose(chain, qp, top).orientation.toRotationMatrix();
      const Eigen::Matrix3d rm = frame_pose(chain, qm, top).orientation.toRotationMatrix();
      const Eigen::Vector3d w = tpik::testing::rotation_vector(rp * rm.transpose()) / (2 * h);
      ASSERT_LE((w - r.jacobian.col(c)).cwiseAbs().maxCoeff(), 1e-5);
    }
  }
}

TEST(Manipulability, PlanarTwoLink) {
  const auto chain = planar_chain(2);
  EXPECT_NEAR(manipulability(chain, Vector::Zero(2), {0, 1}), 0.0, 1e-12);
  Vector q(2);
  q << 0.0, std::numbers::pi / 2;
  // Symbolic: J = [-s1 - s12, -s12; c1 + c12, c12] -> |det J| = |sin q2| = 1.
  EXPECT_NEAR(manipulability(chain, q, {0, 1}), 1.0, 1e-12);
}

TEST(Manipulability, GradientStableUnderStepHalving) {
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 50; ++trial) {
    const auto chain = verify::random_chain(rng, 7);
    const Vector q = tpik::testing::random_q(rng, 7);
    const Matrix a = manipulability_task(chain, q, {0, 1, 2, 3, 4, 5}, 1e-6).jacobian;
    const Matrix b = manipulability_task(chain, q, {0, 1, 2, 3, 4, 5}, 5e-7).jacobian;
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-4);
  }
}

TEST(EvaluateTask, PoseTaskStacksPositionThenOrientation) {
  std::mt19937_64 rng(37);
  const auto chain = verify::random_chain(rng, 7);
  TaskContext ctx;
  ctx.chain = &chain;
  ctx.q = tpik::testing::random_q(rng, 7);
  Pose target;
  target.position = Eigen::Vector3d(0.1, 0.2, 0.3);
  target.orientation = Eigen::Quaterniond::UnitRandom();
  ctx.targets["pose"] = target;
  const auto task = make_task("pose", TaskKind::equality, PoseBinding{}, Vector::Ones(6));
  const TaskEvaluation ev = evaluate_task(task, ctx);
  const Transform tool = forward_kinematics(chain, ctx.q);
  EXPECT_LE((ev.error.head<3>() - (target.position - tool.translation())).norm(), 1e-14);
  EXPECT_LE((ev.error.tail<3>() - orientation_error(target.orientation, Eigen::Quaterniond(tool.linear())))
                .norm(),
            1e-14);
  EXPECT_EQ(ev.reading.jacobian.rows(), 6);
  EXPECT_EQ(ev.feedforward, Vector::Zero(6));
}

TEST(EvaluateTask, MissingTargetsAndFrames) {
  const auto chain = planar_chain(2);
  TaskContext ctx;
  ctx.chain = &chain;
  ctx.q = Vector::Zero(2);
  EXPECT_THROW(evaluate_task(make_task("p", TaskKind::equality, PositionBinding{}, Vector::Ones(3)), ctx),
               LookupError);
  EXPECT_THROW(evaluate_task(make_task("p", TaskKind::equality, PositionBinding{"nope"}, Vector::Ones(3)), ctx),
               LookupError);
  EXPECT_THROW(evaluate_task(make_task("j", TaskKind::equality, JointValueBinding{0}, Vector::Ones(1)), ctx),
               LookupError);
  ctx.values["j"] = Vector::Constant(1, 0.5);
  const TaskEvaluation ev =
      evaluate_task(make_task("j", TaskKind::equality, JointValueBinding{0}, Vector::Ones(1)), ctx);
  EXPECT_DOUBLE_EQ(ev.error[0], 0.5);
}

TEST(EvaluateTask, SetBasedHasNoEqualityError) {
  const auto chain = planar_chain(2);
  TaskContext ctx;
  ctx.chain = &chain;
  ctx.q = Vector::Zero(2);
  const auto task = make_task("j", TaskKind::set_based, JointValueBinding{1}, Vector::Ones(1),
                              SetBounds::with_midpoint_safety(-1, 1, 0.1));
  EXPECT_EQ(evaluate_task(task, ctx).error.size(), 0);
}
