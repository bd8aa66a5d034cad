#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "semslam/geometry.hpp"
#include "semslam/map.hpp"
#include "semslam/qp.hpp"

namespace semslam {

/// One observation of an object: the observing keyframe pose and
/// intrinsics together with the measured bounding box.
struct Observation {
  Pose pose;
  CameraIntrinsics intrinsics;
  BBox bbox;
};

using ObservationSet = std::vector<Observation>;

/// Quadratic program for the 9-vector dual quadric. `hessian` and
/// `linear` come from the tangent-plane normal equations; the
/// regularization is handed to the solver separately so the objective
/// identity 2 * objective(q) + b11 == ||A [q; -1]||^2 stays exact.
struct QpProblem {
  Eigen::Matrix<double, 9, 9> hessian = Eigen::Matrix<double, 9, 9>::Zero();
  Vector9 linear = Vector9::Zero();
  double b11 = 0.0;
  double regularization = 0.0;
  Eigen::MatrixXd constraint_g;  // rows g with g . q <= h
  Eigen::VectorXd constraint_h;

  double objective(const Vector9& q) const {
    return 0.5 * q.dot(hessian * q) + linear.dot(q);
  }
};

struct InitializerOptions {
  int min_obs = 10;
  double eps_w = 1e-6;                // projective-depth positivity margin
  double max_reprojection_px = 100.0;
  double constraint_tol = 1e-6;
  double regularization_factor = 1e-9;  // lambda = factor * trace(H) / 9
};

struct AssembledSystem {
  Eigen::MatrixXd a;  // 4 |obs| x 10 stacked coefficient rows
  QpProblem qp;       // without constraint rows; see build_constraints
};

/// Stacks the coefficient rows of the four tangent planes of every
/// observation (plane 4-vectors are unit-normalized for conditioning) and
/// splits B = A^T A into the quadratic program blocks.
/// Throws TooFewObservations below opts.min_obs.
AssembledSystem assemble_system(const ObservationSet& obs,
                                const InitializerOptions& opts = {});

struct ConstraintRows {
  Eigen::MatrixXd g;  // rows normalized to unit norm
  Eigen::VectorXd h;
};

/// Linear feasibility rows for the dual quadric, per observation:
///  - the quadric center lies in front of the camera,
///  - the principal plane does not cut the quadric,
///  - the center projects inside the measured box (with a positive-depth
///    margin row making the linearization sound).
ConstraintRows build_constraints(const ObservationSet& obs,
                                 double eps_w = 1e-6);

/// Solves the assembled QP; returns the dual quadric coefficient vector.
Vector9 solve_quadric_qp(const QpProblem& p, QpSolution* diagnostics = nullptr);

/// Baseline: null-space solution of A [q; -1] = 0 via SVD, rescaled so the
/// tenth homogeneous coordinate is -1. Throws DegenerateScale when that
/// coordinate vanishes.
Vector9 svd_init(const Eigen::MatrixXd& a);

enum class ValidationFailure {
  kNone,
  kNotAnEllipsoid,
  kConstraintViolated,
  kProjectionFailed,
  kReprojectionError,
};

const char* to_string(ValidationFailure f);

struct ValidationResult {
  bool ok = false;
  ValidationFailure reason = ValidationFailure::kNone;
  double reprojection_error = 0.0;       // mean |coordinate delta|, pixels
  double max_constraint_violation = 0.0;
};

/// A quadric is accepted when it is an ellipsoid, satisfies every
/// constraint row within tolerance, and reprojects into the observed
/// boxes with mean absolute coordinate error below the threshold.
ValidationResult validate_quadric(const Vector9& q, const ObservationSet& obs,
                                  const InitializerOptions& opts = {});

struct InitializationResult {
  bool ok = false;
  std::optional<Ellipsoid> ellipsoid;
  Vector9 quadric = Vector9::Zero();
  ValidationResult validation;
  std::string failure;  // empty on success
  QpSolution qp_diagnostics;
};

/// Full pipeline: assemble, constrain, solve, validate, extract. Failures
/// are reported as values; the caller retries on later keyframes.
InitializationResult initialize_object(const ObservationSet& obs,
                                       const InitializerOptions& opts = {});

/// Gathers the (pose, intrinsics, bbox) observation list of an object from
/// its observing keyframes.
ObservationSet observations_for(const MapDatabase& map, ObjectId object);

}  // namespace semslam
