#pragma once

#include <Eigen/Core>

#include <array>
#include <optional>

#include "semslam/errors.hpp"
#include "semslam/se3.hpp"

namespace semslam {

using Matrix34 = Eigen::Matrix<double, 3, 4>;
using Vector9 = Eigen::Matrix<double, 9, 1>;
using Vector10 = Eigen::Matrix<double, 10, 1>;

struct CameraIntrinsics {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  int width = 0, height = 0;

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
    k(0, 0) = fx;
    k(1, 1) = fy;
    k(0, 2) = cx;
    k(1, 2) = cy;
    return k;
  }

  bool valid() const { return fx > 0 && fy > 0 && width > 0 && height > 0; }
};

/// Axis-aligned box in pixel coordinates, min corner strictly before max.
struct BBox {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  Eigen::Vector2d center() const {
    return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax)};
  }
  bool contains(const Eigen::Vector2d& p) const {
    return p.x() >= xmin && p.x() <= xmax && p.y() >= ymin && p.y() <= ymax;
  }
  Eigen::Vector4d vector() const { return {xmin, ymin, xmax, ymax}; }
  bool valid() const { return xmin < xmax && ymin < ymax; }
};

/// Plane as general-form equation coefficients [a, b, c, d],
/// a*x + b*y + c*z + d = 0.
using Plane = Eigen::Vector4d;

/// Dual quadric surface, the locus of its tangent planes Pi^T Q* Pi = 0.
/// Stored as the nine independent upper-triangle entries of the symmetric
/// 4x4 matrix Q*, read row-wise; the (3,3) entry is fixed to -1 which pins
/// the otherwise free projective scale.
class DualQuadric {
 public:
  DualQuadric() = default;
  explicit DualQuadric(const Vector9& coeffs) : q_(coeffs) {}

  /// Rescales an arbitrary symmetric 4x4 so its (3,3) entry becomes -1.
  /// Throws NotAnEllipsoid when that entry vanishes.
  static DualQuadric from_matrix(const Eigen::Matrix4d& q_star);

  const Vector9& coeffs() const { return q_; }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m;
    m << q_[0], q_[1], q_[2], q_[3],  //
        q_[1], q_[4], q_[5], q_[6],   //
        q_[2], q_[5], q_[7], q_[8],   //
        q_[3], q_[6], q_[8], -1.0;
    return m;
  }

 private:
  Vector9 q_ = Vector9::Zero();
};

/// Ellipsoid in world coordinates; columns of rotation are the principal
/// axes, semi_axes are the corresponding half extents in meters.
struct Ellipsoid {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d semi_axes = Eigen::Vector3d::Ones();

  bool valid(double tol = 1e-9) const {
    if (!(semi_axes.array() > 0.0).all()) return false;
    const Eigen::Matrix3d err =
        rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
    return err.cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol;
  }
};

/// Symmetric 3x3 dual conic, the image of a dual quadric under projection.
struct DualConic {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
};

/// Rectangle [0, width] x [0, height] that bounding boxes are clipped to.
struct ImageBounds {
  double width = 0.0;
  double height = 0.0;
};

/// Pi^T Q* Pi, evaluated through coefficient_row so that the two agree
/// bit for bit. Zero exactly when the plane is tangent to the quadric.
double tangency_residual(const Plane& plane, const DualQuadric& q);

/// Row r(Pi) with r(Pi) . [q; -1] == Pi^T Q* Pi for every dual quadric q.
Vector10 coefficient_row(const Plane& plane);

/// P = K [R | t].
Matrix34 projection_matrix(const Pose& pose, const CameraIntrinsics& k);

/// Projects a world point to (pixel, depth); depth is the camera-frame z.
std::pair<Eigen::Vector2d, double> project_point(const Matrix34& p,
                                                 const Eigen::Vector3d& x);

/// The four planes back-projecting the bounding box edges:
/// [1,0,-xmin] P, [1,0,-xmax] P, [0,1,-ymin] P, [0,1,-ymax] P.
std::array<Plane, 4> tangent_planes_from_bbox(const BBox& b, const Matrix34& p);

/// C* = P Q* P^T, symmetrized.
DualConic project_quadric(const Matrix34& p, const DualQuadric& q);

/// Smallest axis-aligned box around the conic, clipped to the image when
/// bounds are given. Throws NotAnEllipse when the conic is not a real
/// ellipse and OffImage when the clipped box is empty.
BBox conic_to_bbox(const DualConic& c,
                   const std::optional<ImageBounds>& image = std::nullopt);

/// Quadric center -[q4, q7, q9].
Eigen::Vector3d quadric_center(const DualQuadric& q);

struct CameraFrame {
  Eigen::Vector3d center;        // camera center in world coordinates
  Eigen::Vector3d optical_axis;  // viewing direction in world coordinates
  Plane principal_plane;         // plane through the center, normal to axis
};

CameraFrame camera_frame_geometry(const Pose& pose);

/// Epipolar line in image b of a pixel observed in image a, as line
/// coefficients l with l . [u, v, 1] = 0. Throws DegenerateBaseline when
/// the camera centers coincide.
Eigen::Vector3d epipolar_line(const Pose& pose_a, const Pose& pose_b,
                              const CameraIntrinsics& k,
                              const Eigen::Vector2d& pixel_in_a);

/// True iff the line meets the closed rectangle.
bool line_intersects_bbox(const Eigen::Vector3d& line, const BBox& b);

/// Decomposes Q* into center / rotation / semi-axes. Throws NotAnEllipsoid
/// when any eigenvalue of the recentered 3x3 block is <= eps.
Ellipsoid ellipsoid_from_quadric(const DualQuadric& q, double eps = 1e-10);

/// Q* with upper-left block R diag(a^2,b^2,c^2) R^T - t t^T and last
/// column [-t; -1], so that quadric_center returns t.
DualQuadric quadric_from_ellipsoid(const Ellipsoid& e);

}  // namespace semslam
