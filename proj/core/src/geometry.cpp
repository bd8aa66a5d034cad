#include "semslam/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace semslam {

double tangency_residual(const Plane& plane, const DualQuadric& q) {
  Vector10 qh;
  qh << q.coeffs(), -1.0;
  return coefficient_row(plane).dot(qh);
}

Vector10 coefficient_row(const Plane& p) {
  Vector10 row;
  row << p[0] * p[0], 2.0 * p[0] * p[1], 2.0 * p[0] * p[2], 2.0 * p[0] * p[3],
      p[1] * p[1], 2.0 * p[1] * p[2], 2.0 * p[1] * p[3],  //
      p[2] * p[2], 2.0 * p[2] * p[3], p[3] * p[3];
  return row;
}

Matrix34 projection_matrix(const Pose& pose, const CameraIntrinsics& k) {
  Matrix34 rt;
  rt.leftCols<3>() = pose.rotation;
  rt.col(3) = pose.translation;
  return k.matrix() * rt;
}

std::pair<Eigen::Vector2d, double> project_point(const Matrix34& p,
                                                 const Eigen::Vector3d& x) {
  const Eigen::Vector3d uvw = p * x.homogeneous();
  return {Eigen::Vector2d(uvw.x() / uvw.z(), uvw.y() / uvw.z()), uvw.z()};
}

std::array<Plane, 4> tangent_planes_from_bbox(const BBox& b,
                                              const Matrix34& p) {
  const auto line_plane = [&p](const Eigen::Vector3d& line) -> Plane {
    return p.transpose() * line;
  };
  return {line_plane({1.0, 0.0, -b.xmin}), line_plane({1.0, 0.0, -b.xmax}),
          line_plane({0.0, 1.0, -b.ymin}), line_plane({0.0, 1.0, -b.ymax})};
}

DualConic project_quadric(const Matrix34& p, const DualQuadric& q) {
  const Eigen::Matrix3d c = p * q.matrix() * p.transpose();
  return DualConic{0.5 * (c + c.transpose())};
}

BBox conic_to_bbox(const DualConic& conic,
                   const std::optional<ImageBounds>& image) {
  const double scale = conic.m.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw NotAnEllipse("conic is zero or non-finite");
  }
  const Eigen::Matrix3d c = conic.m / scale;
  if (std::abs(c(2, 2)) < 1e-14) {
    throw NotAnEllipse("conic has no finite tangent envelope (C33 = 0)");
  }
  // Real-ellipse classification, independent of the overall sign of C*:
  // det(C*) C33 > 0 separates ellipses from hyperbolas (including rotated
  // ones whose tangent discriminants are both positive) and rejects
  // degenerate conics without an arbitrary magnitude cutoff; the positive
  // discriminants below exclude imaginary ellipses.
  if (c.determinant() * c(2, 2) <= 0.0) {
    throw NotAnEllipse("conic is not a real ellipse");
  }

  // Vertical tangent lines [1, 0, -x]: C11 - 2 x C13 + x^2 C33 = 0.
  const double disc_x = c(0, 2) * c(0, 2) - c(0, 0) * c(2, 2);
  const double disc_y = c(1, 2) * c(1, 2) - c(1, 1) * c(2, 2);
  if (disc_x <= 0.0 || disc_y <= 0.0) {
    throw NotAnEllipse("tangent-line discriminant not positive");
  }
  const double sx = std::sqrt(disc_x) / std::abs(c(2, 2));
  const double sy = std::sqrt(disc_y) / std::abs(c(2, 2));
  const double x0 = c(0, 2) / c(2, 2);
  const double y0 = c(1, 2) / c(2, 2);

  BBox box{x0 - sx, y0 - sy, x0 + sx, y0 + sy};
  if (image) {
    box.xmin = std::max(box.xmin, 0.0);
    box.ymin = std::max(box.ymin, 0.0);
    box.xmax = std::min(box.xmax, image->width);
    box.ymax = std::min(box.ymax, image->height);
    if (!(box.xmin < box.xmax) || !(box.ymin < box.ymax)) {
      throw OffImage("conic bounding box outside the image");
    }
  }
  return box;
}

Eigen::Vector3d quadric_center(const DualQuadric& q) {
  const Vector9& v = q.coeffs();
  return {-v[3], -v[6], -v[8]};
}

CameraFrame camera_frame_geometry(const Pose& pose) {
  CameraFrame out;
  out.center = pose.camera_center();
  out.optical_axis = pose.rotation.row(2);
  out.principal_plane.head<3>() = out.optical_axis;
  out.principal_plane[3] = -out.optical_axis.dot(out.center);
  return out;
}

Eigen::Vector3d epipolar_line(const Pose& pose_a, const Pose& pose_b,
                              const CameraIntrinsics& k,
                              const Eigen::Vector2d& pixel_in_a) {
  // Relative transform taking camera-a coordinates to camera-b.
  const Eigen::Matrix3d r_ba = pose_b.rotation * pose_a.rotation.transpose();
  const Eigen::Vector3d t_ba = pose_b.translation - r_ba * pose_a.translation;
  if (t_ba.norm() < 1e-9) {
    throw DegenerateBaseline("camera centers coincide");
  }
  const Eigen::Matrix3d k_inv = k.matrix().inverse();
  const Eigen::Matrix3d f =
      k_inv.transpose() * skew(t_ba) * r_ba * k_inv;
  return f * pixel_in_a.homogeneous();
}

bool line_intersects_bbox(const Eigen::Vector3d& line, const BBox& b) {
  const std::array<Eigen::Vector2d, 4> corners = {
      Eigen::Vector2d{b.xmin, b.ymin}, Eigen::Vector2d{b.xmax, b.ymin},
      Eigen::Vector2d{b.xmin, b.ymax}, Eigen::Vector2d{b.xmax, b.ymax}};
  bool any_nonneg = false;
  bool any_nonpos = false;
  for (const auto& corner : corners) {
    const double v = line.dot(corner.homogeneous());
    any_nonneg |= v >= 0.0;
    any_nonpos |= v <= 0.0;
  }
  // The closed rectangle meets the line iff its corners do not lie
  // strictly on one side.
  return any_nonneg && any_nonpos;
}

DualQuadric DualQuadric::from_matrix(const Eigen::Matrix4d& q_star) {
  const double s = q_star(3, 3);
  if (std::abs(s) < 1e-14 * q_star.cwiseAbs().maxCoeff()) {
    throw NotAnEllipsoid("dual quadric scale entry (3,3) is zero");
  }
  const Eigen::Matrix4d n = q_star / -s;
  Vector9 coeffs;
  coeffs << n(0, 0), n(0, 1), n(0, 2), n(0, 3), n(1, 1), n(1, 2), n(1, 3),
      n(2, 2), n(2, 3);
  return DualQuadric(coeffs);
}

Ellipsoid ellipsoid_from_quadric(const DualQuadric& q, double eps) {
  const Eigen::Vector3d t = quadric_center(q);
  const Eigen::Matrix4d qm = q.matrix();
  // The recentered block R diag(a^2,b^2,c^2) R^T.
  const Eigen::Matrix3d shape = qm.topLeftCorner<3, 3>() + t * t.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(shape);
  if (eig.info() != Eigen::Success) {
    throw NotAnEllipsoid("eigendecomposition failed");
  }

  Ellipsoid e;
  e.center = t;
  // Descending eigenvalue order for a deterministic axis convention.
  for (int i = 0; i < 3; ++i) {
    const int src = 2 - i;
    const double lambda = eig.eigenvalues()[src];
    if (!(lambda > eps)) {
      throw NotAnEllipsoid("quadric is not an ellipsoid");
    }
    e.semi_axes[i] = std::sqrt(lambda);
    e.rotation.col(i) = eig.eigenvectors().col(src);
  }
  // Deterministic column signs: first non-negligible entry positive, then
  // det +1 by flipping the last column.
  for (int i = 0; i < 3; ++i) {
    for (int r = 0; r < 3; ++r) {
      const double v = e.rotation(r, i);
      if (std::abs(v) > 1e-12) {
        if (v < 0.0) e.rotation.col(i) = -e.rotation.col(i);
        break;
      }
    }
  }
  if (e.rotation.determinant() < 0.0) e.rotation.col(2) = -e.rotation.col(2);
  return e;
}

DualQuadric quadric_from_ellipsoid(const Ellipsoid& e) {
  const Eigen::Matrix3d shape =
      e.rotation *
      e.semi_axes.array().square().matrix().asDiagonal() *
      e.rotation.transpose();
  Eigen::Matrix4d q = Eigen::Matrix4d::Identity();
  q.topLeftCorner<3, 3>() = shape - e.center * e.center.transpose();
  q.topRightCorner<3, 1>() = -e.center;
  q.bottomLeftCorner<1, 3>() = -e.center.transpose();
  q(3, 3) = -1.0;
  Vector9 coeffs;
  coeffs << q(0, 0), q(0, 1), q(0, 2), q(0, 3), q(1, 1), q(1, 2), q(1, 3),
      q(2, 2), q(2, 3);
  return DualQuadric(coeffs);
}

}  // namespace semslam
