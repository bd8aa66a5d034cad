#pragma once

#include <Eigen/Core>

#include <atomic>
#include <functional>
#include <string>
#include <vector>

#include "semslam/geometry.hpp"
#include "semslam/se3.hpp"

namespace semslam {

/// Relative-pose factor between consecutive keyframes i and i+1.
struct OdometryFactor {
  int from = 0;  // keyframe index i
  int to = 0;    // keyframe index i+1
  Pose measured; // measured relative pose u, maps frame-i coords to frame-i+1
  Eigen::Matrix<double, 6, 6> covariance =
      Eigen::Matrix<double, 6, 6>::Identity();
};

/// Bounding-box factor linking a keyframe and an initialized object.
struct SemanticFactor {
  int keyframe = 0;
  int object = 0;
  BBox measured;
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Identity();
};

/// Optimization state: keyframe poses and object ellipsoids. Objects are
/// updated through (center, rotation-vector, log semi-axes) increments, so
/// iterates stay valid ellipsoids by construction.
struct BaState {
  std::vector<Pose> poses;
  std::vector<Ellipsoid> objects;
};

struct BundleProblem {
  BaState initial;
  std::vector<CameraIntrinsics> intrinsics;  // aligned with poses
  std::vector<OdometryFactor> odometry;
  std::vector<SemanticFactor> semantic;
};

struct BaOptions {
  int max_iterations = 50;
  double initial_lambda = 1e-4;
  double relative_decrease_tol = 1e-9;
  double fd_step = 1e-6;
  /// Called after every outer iteration; used by tests and orchestration.
  std::function<void(int)> iteration_hook;
};

struct IterationRecord {
  int iteration = 0;
  double cost = 0.0;
  double lambda = 0.0;
  int skipped_factors = 0;
  bool accepted = false;
};

struct BaReport {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::vector<IterationRecord> iterations;
  bool cancelled = false;
  std::string termination;  // converged | max_iterations | cancelled | stalled
  int skipped_factors = 0;  // at the final state
};

struct BaResult {
  BaState state;
  BaReport report;
};

/// 6-vector residual [rotation-vector; translation] of
/// log(u^-1 * (x_next * x_prev^-1)).
Eigen::Matrix<double, 6, 1> odometry_residual(const Pose& x_prev,
                                              const Pose& x_next,
                                              const Pose& u);

/// Predicted-box-minus-measured-box, per coordinate. The prediction is the
/// image-clipped bounding box of the projected dual conic; throws
/// NotAnEllipse / OffImage when no box exists, in which case the factor is
/// skipped for the iteration.
Eigen::Vector4d semantic_residual(const Pose& x, const CameraIntrinsics& k,
                                  const Ellipsoid& e, const BBox& z);

/// Sum of squared Mahalanobis residuals over all factors; factors whose
/// prediction fails contribute zero and are counted in `skipped`.
double total_cost(const BundleProblem& problem, const BaState& state,
                  int* skipped = nullptr);

/// Applies the per-block retraction: 6 local coordinates per pose (pose 0
/// excluded, it is the gauge), 9 per object.
BaState retract_state(const BaState& state, const Eigen::VectorXd& delta);

struct LinearizedSystem {
  Eigen::MatrixXd jacobian;   // whitened, one block-row per active factor
  Eigen::VectorXd residual;   // whitened
  int skipped_factors = 0;
};

/// Central-difference linearization around `state`, assembled into global
/// parameter columns in retract_state order.
LinearizedSystem linearize(const BundleProblem& problem, const BaState& state,
                           double fd_step = 1e-6);

/// Levenberg-Marquardt over poses and objects with the first pose held
/// fixed. Accepted steps never increase the cost; cancellation is honored
/// between iterations and returns the best state found. Throws NoFactors
/// when the problem has no factors.
BaResult optimize(const BundleProblem& problem, const BaOptions& opts = {},
                  const std::atomic<bool>* cancel = nullptr);

}  // namespace semslam
