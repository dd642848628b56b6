#include "tpik/kinematics.hpp"

#include <cmath>
#include <string>

#include "tpik/errors.hpp"

namespace tpik {

namespace {

constexpr double kUnitTolerance = 1e-12;

void check_dimension(const KinematicChain& chain, const Vector& q) {
  if (static_cast<std::size_t>(q.size()) != chain.joint_count()) {
    throw ContractViolation("joint vector has " + std::to_string(q.size()) +
                            " entries, chain has " +
                            std::to_string(chain.joint_count()) + " joints");
  }
}

std::size_t last_joint(const KinematicChain& chain, std::size_t frame_index) {
  if (frame_index == kToolFrame) return chain.joint_count() - 1;
  if (frame_index >= chain.joint_count()) {
    throw ContractViolation("frame index " + std::to_string(frame_index) +
                            " out of range");
  }
  return frame_index;
}

}  // namespace

Pose Pose::from_transform(const Transform& t) {
  Pose p;
  p.position = t.translation();
  p.orientation = Eigen::Quaterniond(t.rotation()).normalized();
  return p;
}

Transform Pose::to_transform() const {
  Transform t = Transform::Identity();
  t.linear() = orientation.normalized().toRotationMatrix();
  t.translation() = position;
  return t;
}

KinematicChain::KinematicChain(std::vector<RevoluteJoint> joints, Transform tool_offset)
    : joints_(std::move(joints)), tool_offset_(tool_offset) {
  if (joints_.empty()) throw ContractViolation("chain needs at least one joint");
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    if (std::abs(joints_[i].axis.norm() - 1.0) > kUnitTolerance) {
      throw ContractViolation("joint " + std::to_string(i) + " axis is not unit length");
    }
  }
  const Eigen::Quaterniond tool_rot(tool_offset_.rotation());
  if (std::abs(tool_rot.norm() - 1.0) > kUnitTolerance ||
      !tool_offset_.linear().isUnitary(1e-9)) {
    throw ContractViolation("tool offset rotation is not a unit quaternion");
  }
}

std::vector<Transform> all_frames(const KinematicChain& chain, const Vector& q) {
  check_dimension(chain, q);
  std::vector<Transform> frames;
  frames.reserve(chain.joint_count() + 1);
  Transform t = Transform::Identity();
  for (std::size_t i = 0; i < chain.joint_count(); ++i) {
    const auto& joint = chain.joints()[i];
    t = t * joint.offset * Eigen::AngleAxisd(q[static_cast<Eigen::Index>(i)], joint.axis);
    frames.push_back(t);
  }
  frames.push_back(t * chain.tool_offset());
  return frames;
}

Transform forward_kinematics(const KinematicChain& chain, const Vector& q,
                             std::size_t frame_index) {
  check_dimension(chain, q);
  const std::size_t last = last_joint(chain, frame_index);
  Transform t = Transform::Identity();
  for (std::size_t i = 0; i <= last; ++i) {
    const auto& joint = chain.joints()[i];
    t = t * joint.offset * Eigen::AngleAxisd(q[static_cast<Eigen::Index>(i)], joint.axis);
  }
  if (frame_index == kToolFrame) t = t * chain.tool_offset();
  return t;
}

Matrix geometric_jacobian(const KinematicChain& chain, const Vector& q,
                          const Eigen::Vector3d& point, std::size_t frame_index) {
  const std::size_t last = last_joint(chain, frame_index);
  const auto frames = all_frames(chain, q);
  Matrix jac = Matrix::Zero(6, static_cast<Eigen::Index>(chain.joint_count()));
  for (std::size_t i = 0; i <= last; ++i) {
    // The joint rotation leaves its own axis fixed, so frame i carries it.
    const Eigen::Vector3d axis = frames[i].linear() * chain.joints()[i].axis;
    const Eigen::Vector3d origin = frames[i].translation();
    const auto col = static_cast<Eigen::Index>(i);
    jac.block<3, 1>(0, col) = axis.cross(point - origin);
    jac.block<3, 1>(3, col) = axis;
  }
  return jac;
}

Matrix pseudoinverse(const Matrix& a) {
  if (a.size() == 0) return Matrix::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double tol = static_cast<double>(std::max(a.rows(), a.cols())) *
                     std::numeric_limits<double>::epsilon() * (s.size() ? s[0] : 0.0);
  Vector inv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > tol) inv[i] = 1.0 / s[i];
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix damped_pseudoinverse(const Matrix& jacobian, double damping) {
  if (damping < 0.0) throw ContractViolation("damping must be non-negative");
  if (damping == 0.0) return pseudoinverse(jacobian);
  Matrix gram = jacobian * jacobian.transpose();
  gram.diagonal().array() += damping * damping;
  // gram is symmetric positive definite for damping > 0.
  return gram.ldlt().solve(jacobian).transpose();
}

Matrix null_space_projector(const Matrix& stacked_jacobian) {
  const Eigen::Index n = stacked_jacobian.cols();
  return Matrix::Identity(n, n) - pseudoinverse(stacked_jacobian) * stacked_jacobian;
}

Eigen::Vector3d orientation_error(const Eigen::Quaterniond& desired,
                                  const Eigen::Quaterniond& current) {
  Eigen::Quaterniond err = desired.normalized() * current.normalized().conjugate();
  if (err.w() < 0.0) err.coeffs() = -err.coeffs();
  return err.vec();
}

double rotation_angle(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  const double s = orientation_error(a, b).norm();
  return 2.0 * std::asin(std::min(1.0, s));
}

}  // namespace tpik
