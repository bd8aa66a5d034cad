#pragma once

#include <Eigen/Core>

namespace semslam {

/// Rigid transform mapping world coordinates into the camera frame:
/// x_cam = R * x_world + t. This is the pose convention used throughout;
/// the camera center in world coordinates is -R^T t.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const {
    return rotation * x + translation;
  }

  Pose inverse() const {
    Pose out;
    out.rotation = rotation.transpose();
    out.translation = -out.rotation * translation;
    return out;
  }

  /// Composition: (a * b)(x) = a(b(x)).
  Pose operator*(const Pose& other) const {
    Pose out;
    out.rotation = rotation * other.rotation;
    out.translation = rotation * other.translation + translation;
    return out;
  }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = translation;
    return m;
  }

  Eigen::Vector3d camera_center() const {
    return -rotation.transpose() * translation;
  }

  bool is_orthonormal(double tol = 1e-9) const;
};

Eigen::Matrix3d skew(const Eigen::Vector3d& w);

/// Rodrigues formula, exact for all angles.
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w);

/// Inverse of so3_exp; result has norm <= pi. Stable near 0 and pi.
Eigen::Vector3d so3_log(const Eigen::Matrix3d& r);

/// Chart used for pose perturbations: rotation is right-multiplied by
/// so3_exp(delta.head(3)), translation is incremented by delta.tail(3).
Pose retract_pose(const Pose& pose, const Eigen::Matrix<double, 6, 1>& delta);

}  // namespace semslam
