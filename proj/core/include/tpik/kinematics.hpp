#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cstddef>
#include <limits>
#include <vector>

namespace tpik {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Transform = Eigen::Isometry3d;

/// Frame index designating the tool point (last joint frame composed with the tool offset).
inline constexpr std::size_t kToolFrame = std::numeric_limits<std::size_t>::max();

/// Position in meters plus unit-quaternion orientation, both in base coordinates.
struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();

  static Pose from_transform(const Transform& t);
  Transform to_transform() const;
};

struct RevoluteJoint {
  /// Rotation axis in the joint's own frame; unit norm.
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  /// Fixed transform from the previous joint frame (or base) to this joint, applied before the rotation.
  Transform offset = Transform::Identity();
};

/// Serial chain of revolute joints. Frame i is the frame of joint i after its rotation.
class KinematicChain {
 public:
  /// Throws ContractViolation if the chain is empty, an axis is not unit
  /// (1e-12) or the tool rotation is not a unit quaternion (1e-12).
  KinematicChain(std::vector<RevoluteJoint> joints, Transform tool_offset);

  std::size_t joint_count() const { return joints_.size(); }
  const std::vector<RevoluteJoint>& joints() const { return joints_; }
  const Transform& tool_offset() const { return tool_offset_; }

 private:
  std::vector<RevoluteJoint> joints_;
  Transform tool_offset_;
};

struct JointState {
  Vector q;
  Vector qdot;
};

/// Pose of frame `frame_index` (joint index or kToolFrame) in base coordinates.
Transform forward_kinematics(const KinematicChain& chain, const Vector& q,
                             std::size_t frame_index = kToolFrame);

/// All joint frames followed by the tool frame, computed in one pass.
std::vector<Transform> all_frames(const KinematicChain& chain, const Vector& q);

/// 6 x n geometric Jacobian of a point attached to frame `frame_index`.
///
/// Rows 0-2 map joint velocities to the linear velocity of `point` (base
/// coordinates), rows 3-5 to the angular velocity of the frame. Columns of
/// joints distal to `frame_index` are zero.
Matrix geometric_jacobian(const KinematicChain& chain, const Vector& q,
                          const Eigen::Vector3d& point,
                          std::size_t frame_index = kToolFrame);

/// Exact Moore-Penrose pseudoinverse (SVD, rank-revealing threshold).
Matrix pseudoinverse(const Matrix& a);

/// J^T (J J^T + damping^2 I)^-1. With damping == 0 the exact pseudoinverse is
/// returned instead so rank-deficient inputs stay well-defined.
Matrix damped_pseudoinverse(const Matrix& jacobian, double damping);

/// I - J^+ J with the exact pseudoinverse of the stacked Jacobian.
Matrix null_space_projector(const Matrix& stacked_jacobian);

/// Vector part of desired * current^-1, sign-normalized so the scalar part is >= 0.
/// Its norm is sin(theta / 2) of the relative rotation angle.
Eigen::Vector3d orientation_error(const Eigen::Quaterniond& desired,
                                  const Eigen::Quaterniond& current);

/// Relative rotation angle between two orientations, in [0, pi].
double rotation_angle(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

}  // namespace tpik
