#include "semslam/se3.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace semslam {

bool Pose::is_orthonormal(double tol) const {
  const Eigen::Matrix3d err =
      rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
  if (err.cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d m;
  m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return m;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w) {
  const double theta2 = w.squaredNorm();
  const Eigen::Matrix3d wx = skew(w);
  if (theta2 < 1e-16) {
    // Second order series keeps the result orthonormal to machine precision.
    return Eigen::Matrix3d::Identity() + wx + 0.5 * wx * wx;
  }
  const double theta = std::sqrt(theta2);
  return Eigen::Matrix3d::Identity() + (std::sin(theta) / theta) * wx +
         ((1.0 - std::cos(theta)) / theta2) * wx * wx;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& r) {
  // The quaternion path stays accurate over the whole angle range,
  // including near pi where the antisymmetric part of R degenerates.
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

Pose retract_pose(const Pose& pose, const Eigen::Matrix<double, 6, 1>& delta) {
  Pose out;
  out.rotation = pose.rotation * so3_exp(delta.head<3>());
  out.translation = pose.translation + delta.tail<3>();
  return out;
}

}  // namespace semslam
