#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "tpik/kinematics.hpp"

namespace tpik::testing {

/// Planar chain with z axes and unit links along x; the tool sits at the end of the last link.
inline KinematicChain planar_chain(std::size_t links) {
  std::vector<RevoluteJoint> joints;
  for (std::size_t i = 0; i < links; ++i) {
    RevoluteJoint j;
    j.axis = Eigen::Vector3d::UnitZ();
    j.offset = Transform::Identity();
    if (i > 0) j.offset.translation() = Eigen::Vector3d(1, 0, 0);
    joints.push_back(j);
  }
  Transform tool = Transform::Identity();
  tool.translation() = Eigen::Vector3d(1, 0, 0);
  return KinematicChain(std::move(joints), tool);
}

inline Vector random_q(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  Vector q(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = u(rng);
  return q;
}

/// Homogeneous 4x4 of a rotation by `angle` about unit `axis` (Rodrigues, written out).
inline Eigen::Matrix4d rotation4(const Eigen::Vector3d& k, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double v = 1.0 - c;
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 0) = k.x() * k.x() * v + c;
  m(0, 1) = k.x() * k.y() * v - k.z() * s;
  m(0, 2) = k.x() * k.z() * v + k.y() * s;
  m(1, 0) = k.y() * k.x() * v + k.z() * s;
  m(1, 1) = k.y() * k.y() * v + c;
  m(1, 2) = k.y() * k.z() * v - k.x() * s;
  m(2, 0) = k.z() * k.x() * v - k.y() * s;
  m(2, 1) = k.z() * k.y() * v + k.x() * s;
  m(2, 2) = k.z() * k.z() * v + c;
  return m;
}

/// Independent forward kinematics: plain 4x4 matrix products.
inline Eigen::Matrix4d fk_matrix_oracle(const KinematicChain& chain, const Vector& q) {
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  for (std::size_t i = 0; i < chain.joint_count(); ++i) {
    const RevoluteJoint& j = chain.joints()[i];
    t = t * j.offset.matrix() * rotation4(j.axis, q[static_cast<Eigen::Index>(i)]);
  }
  return t * chain.tool_offset().matrix();
}

/// Rotation vector of R (log map), robust away from pi.
inline Eigen::Vector3d rotation_vector(const Eigen::Matrix3d& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

}  // namespace tpik::testing
