#include "semslam/bundle_adjustment.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace semslam {

Eigen::Matrix<double, 6, 1> odometry_residual(const Pose& x_prev,
                                              const Pose& x_next,
                                              const Pose& u) {
  const Pose relative = x_next * x_prev.inverse();
  const Pose error = u.inverse() * relative;
  Eigen::Matrix<double, 6, 1> r;
  r.head<3>() = so3_log(error.rotation);
  r.tail<3>() = error.translation;
  return r;
}

Eigen::Vector4d semantic_residual(const Pose& x, const CameraIntrinsics& k,
                                  const Ellipsoid& e, const BBox& z) {
  const Matrix34 p = projection_matrix(x, k);
  const BBox predicted = conic_to_bbox(
      project_quadric(p, quadric_from_ellipsoid(e)),
      ImageBounds{static_cast<double>(k.width),
                  static_cast<double>(k.height)});
  return predicted.vector() - z.vector();
}

namespace {

Ellipsoid retract_object(const Ellipsoid& e,
                         const Eigen::Matrix<double, 9, 1>& delta) {
  Ellipsoid out;
  out.center = e.center + delta.head<3>();
  out.rotation = e.rotation * so3_exp(delta.segment<3>(3));
  out.semi_axes =
      (e.semi_axes.array().log() + delta.tail<3>().array()).exp();
  return out;
}

/// Column offset of a parameter block; pose 0 is the gauge and has none.
int pose_column(int pose_index) { return 6 * (pose_index - 1); }
int object_column(int object_index, std::size_t n_poses) {
  return 6 * (static_cast<int>(n_poses) - 1) + 9 * object_index;
}

int parameter_count(const BaState& state) {
  return 6 * (static_cast<int>(state.poses.size()) - 1) +
         9 * static_cast<int>(state.objects.size());
}

template <int N>
Eigen::Matrix<double, N, N> whitener(
    const Eigen::Matrix<double, N, N>& covariance) {
  // r_w = L^-1 r with covariance = L L^T gives |r_w|^2 = r^T Sigma^-1 r.
  const Eigen::LLT<Eigen::Matrix<double, N, N>> llt(covariance);
  Eigen::Matrix<double, N, N> identity =
      Eigen::Matrix<double, N, N>::Identity();
  return llt.matrixL().solve(identity);
}

}  // namespace

double total_cost(const BundleProblem& problem, const BaState& state,
                  int* skipped) {
  double cost = 0.0;
  int skipped_count = 0;
  for (const OdometryFactor& f : problem.odometry) {
    const Eigen::Matrix<double, 6, 1> r =
        odometry_residual(state.poses[f.from], state.poses[f.to], f.measured);
    cost += r.dot(f.covariance.llt().solve(r));
  }
  for (const SemanticFactor& f : problem.semantic) {
    try {
      const Eigen::Vector4d r =
          semantic_residual(state.poses[f.keyframe],
                            problem.intrinsics[f.keyframe],
                            state.objects[f.object], f.measured);
      cost += r.dot(f.covariance.llt().solve(r));
    } catch (const NotAnEllipse&) {
      ++skipped_count;
    } catch (const OffImage&) {
      ++skipped_count;
    }
  }
  if (skipped) *skipped = skipped_count;
  return cost;
}

BaState retract_state(const BaState& state, const Eigen::VectorXd& delta) {
  BaState out = state;
  for (std::size_t p = 1; p < state.poses.size(); ++p) {
    out.poses[p] = retract_pose(
        state.poses[p],
        delta.segment<6>(pose_column(static_cast<int>(p))));
  }
  for (std::size_t o = 0; o < state.objects.size(); ++o) {
    out.objects[o] = retract_object(
        state.objects[o],
        delta.segment<9>(
            object_column(static_cast<int>(o), state.poses.size())));
  }
  return out;
}

namespace {

/// Central difference of a residual functor under a single-coordinate
/// perturbation, falling back to one-sided differences when a probe has
/// no valid prediction.
template <int Rows, typename Fn>
bool fd_column(const Fn& eval, const Eigen::Matrix<double, Rows, 1>& base,
               double step, Eigen::Matrix<double, Rows, 1>* out) {
  Eigen::Matrix<double, Rows, 1> plus, minus;
  const bool has_plus = eval(step, &plus);
  const bool has_minus = eval(-step, &minus);
  if (has_plus && has_minus) {
    *out = (plus - minus) / (2.0 * step);
    return true;
  }
  if (has_plus) {
    *out = (plus - base) / step;
    return true;
  }
  if (has_minus) {
    *out = (base - minus) / step;
    return true;
  }
  return false;
}

}  // namespace

LinearizedSystem linearize(const BundleProblem& problem, const BaState& state,
                           double fd_step) {
  const int n = parameter_count(state);
  LinearizedSystem sys;

  const int odo_rows = 6 * static_cast<int>(problem.odometry.size());

  // Active semantic factors are decided at the base state.
  std::vector<Eigen::Vector4d> sem_residuals;
  std::vector<int> sem_active;
  for (std::size_t i = 0; i < problem.semantic.size(); ++i) {
    const SemanticFactor& f = problem.semantic[i];
    try {
      sem_residuals.push_back(
          semantic_residual(state.poses[f.keyframe],
                            problem.intrinsics[f.keyframe],
                            state.objects[f.object], f.measured));
      sem_active.push_back(static_cast<int>(i));
    } catch (const NotAnEllipse&) {
      ++sys.skipped_factors;
    } catch (const OffImage&) {
      ++sys.skipped_factors;
    }
  }

  const int rows = odo_rows + 4 * static_cast<int>(sem_active.size());
  sys.jacobian = Eigen::MatrixXd::Zero(rows, n);
  sys.residual = Eigen::VectorXd::Zero(rows);

  int row = 0;
  for (const OdometryFactor& f : problem.odometry) {
    const Eigen::Matrix<double, 6, 6> w = whitener<6>(f.covariance);
    const Eigen::Matrix<double, 6, 1> base =
        odometry_residual(state.poses[f.from], state.poses[f.to], f.measured);
    sys.residual.segment<6>(row) = w * base;

    for (const int pose_index : {f.from, f.to}) {
      if (pose_index == 0) continue;
      const int col0 = pose_column(pose_index);
      for (int d = 0; d < 6; ++d) {
        const auto eval = [&](double step,
                              Eigen::Matrix<double, 6, 1>* out) {
          Eigen::Matrix<double, 6, 1> delta =
              Eigen::Matrix<double, 6, 1>::Zero();
          delta[d] = step;
          const Pose perturbed =
              retract_pose(state.poses[pose_index], delta);
          const Pose& prev =
              pose_index == f.from ? perturbed : state.poses[f.from];
          const Pose& next =
              pose_index == f.to ? perturbed : state.poses[f.to];
          *out = odometry_residual(prev, next, f.measured);
          return true;
        };
        Eigen::Matrix<double, 6, 1> col;
        if (fd_column<6>(eval, base, fd_step, &col)) {
          sys.jacobian.block<6, 1>(row, col0 + d) = w * col;
        }
      }
    }
    row += 6;
  }

  for (std::size_t a = 0; a < sem_active.size(); ++a) {
    const SemanticFactor& f =
        problem.semantic[static_cast<std::size_t>(sem_active[a])];
    const Eigen::Matrix4d w = whitener<4>(f.covariance);
    const Eigen::Vector4d base = sem_residuals[a];
    sys.residual.segment<4>(row) = w * base;

    const auto sem_eval = [&](const Pose& pose, const Ellipsoid& obj,
                              Eigen::Vector4d* out) {
      try {
        *out = semantic_residual(pose, problem.intrinsics[f.keyframe], obj,
                                 f.measured);
        return true;
      } catch (const NotAnEllipse&) {
        return false;
      } catch (const OffImage&) {
        return false;
      }
    };

    if (f.keyframe != 0) {
      const int col0 = pose_column(f.keyframe);
      for (int d = 0; d < 6; ++d) {
        const auto eval = [&](double step, Eigen::Vector4d* out) {
          Eigen::Matrix<double, 6, 1> delta =
              Eigen::Matrix<double, 6, 1>::Zero();
          delta[d] = step;
          return sem_eval(retract_pose(state.poses[f.keyframe], delta),
                          state.objects[f.object], out);
        };
        Eigen::Vector4d col;
        if (fd_column<4>(eval, base, fd_step, &col)) {
          sys.jacobian.block<4, 1>(row, col0 + d) = w * col;
        }
      }
    }
    {
      const int col0 = object_column(f.object, state.poses.size());
      for (int d = 0; d < 9; ++d) {
        const auto eval = [&](double step, Eigen::Vector4d* out) {
          Eigen::Matrix<double, 9, 1> delta =
              Eigen::Matrix<double, 9, 1>::Zero();
          delta[d] = step;
          return sem_eval(state.poses[f.keyframe],
                          retract_object(state.objects[f.object], delta),
                          out);
        };
        Eigen::Vector4d col;
        if (fd_column<4>(eval, base, fd_step, &col)) {
          sys.jacobian.block<4, 1>(row, col0 + d) = w * col;
        }
      }
    }
    row += 4;
  }
  return sys;
}

BaResult optimize(const BundleProblem& problem, const BaOptions& opts,
                  const std::atomic<bool>* cancel) {
  if (problem.odometry.empty() && problem.semantic.empty()) {
    throw NoFactors("bundle adjustment needs at least one factor");
  }
  if (problem.initial.poses.empty()) {
    throw DataError("bundle adjustment needs at least one keyframe pose");
  }

  BaResult result;
  result.state = problem.initial;

  int skipped = 0;
  double cost = total_cost(problem, result.state, &skipped);
  result.report.initial_cost = cost;
  double lambda = opts.initial_lambda;
  result.report.termination = "max_iterations";

  const int n = parameter_count(result.state);
  if (n == 0) {
    // Only the gauge pose; nothing to optimize.
    result.report.final_cost = cost;
    result.report.skipped_factors = skipped;
    result.report.termination = "converged";
    return result;
  }

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    if (cancel && cancel->load()) {
      result.report.cancelled = true;
      result.report.termination = "cancelled";
      break;
    }

    const LinearizedSystem sys = linearize(problem, result.state, opts.fd_step);
    Eigen::MatrixXd jtj = Eigen::MatrixXd::Zero(n, n);
    jtj.selfadjointView<Eigen::Lower>().rankUpdate(sys.jacobian.transpose());
    jtj = jtj.selfadjointView<Eigen::Lower>();
    const Eigen::VectorXd gradient =
        sys.jacobian.transpose() * sys.residual;

    bool accepted = false;
    int inner = 0;
    double cand_cost = cost;
    while (inner++ < 16) {
      Eigen::MatrixXd damped = jtj;
      // Marquardt scaling keeps the step sane across the mixed pixel /
      // radian / meter parameter units; the floor covers zero columns.
      const double floor = 1e-9 * std::max(jtj.diagonal().maxCoeff(), 1.0);
      for (int d = 0; d < n; ++d) {
        damped(d, d) += lambda * std::max(jtj(d, d), floor);
      }
      const Eigen::VectorXd delta = damped.ldlt().solve(-gradient);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const BaState candidate = retract_state(result.state, delta);
      int cand_skipped = 0;
      cand_cost = total_cost(problem, candidate, &cand_skipped);
      if (cand_cost <= cost) {
        result.state = candidate;
        skipped = cand_skipped;
        lambda = std::max(lambda * 0.5, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e14) break;
    }

    result.report.iterations.push_back(
        {iter, accepted ? cand_cost : cost, lambda, skipped, accepted});
    if (opts.iteration_hook) opts.iteration_hook(iter);

    if (!accepted) {
      result.report.termination = "stalled";
      break;
    }
    const double decrease = cost - cand_cost;
    cost = cand_cost;
    if (decrease < opts.relative_decrease_tol * std::max(cost, 1e-300)) {
      result.report.termination = "converged";
      break;
    }
  }

  result.report.final_cost = cost;
  result.report.skipped_factors = skipped;
  return result;
}

}  // namespace semslam
