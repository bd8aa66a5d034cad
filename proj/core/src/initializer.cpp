#include "semslam/initializer.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace semslam {

AssembledSystem assemble_system(const ObservationSet& obs,
                                const InitializerOptions& opts) {
  if (static_cast<int>(obs.size()) < opts.min_obs) {
    throw TooFewObservations("initialization needs at least " +
                             std::to_string(opts.min_obs) + " observations, got " +
                             std::to_string(obs.size()));
  }
  AssembledSystem out;
  out.a.resize(static_cast<Eigen::Index>(4 * obs.size()), 10);
  Eigen::Index row = 0;
  for (const Observation& o : obs) {
    const Matrix34 p = projection_matrix(o.pose, o.intrinsics);
    for (Plane plane : tangent_planes_from_bbox(o.bbox, p)) {
      const double norm = plane.norm();
      if (norm > 0.0) plane /= norm;
      out.a.row(row++) = coefficient_row(plane).transpose();
    }
  }
  const Eigen::Matrix<double, 10, 10> b = out.a.transpose() * out.a;
  out.qp.hessian = b.topLeftCorner<9, 9>();
  // ||A [q; -1]||^2 = q^T B99 q - 2 B91^T q + B11, so the linear term of
  // the half-quadratic objective is -B91.
  out.qp.linear = -b.topRightCorner<9, 1>();
  out.qp.b11 = b(9, 9);
  out.qp.regularization =
      opts.regularization_factor * out.qp.hessian.trace() / 9.0;
  return out;
}

ConstraintRows build_constraints(const ObservationSet& obs, double eps_w) {
  // 7 rows per observation: front-of-camera, principal plane, 4 box rows,
  // positive projective depth.
  const Eigen::Index m = static_cast<Eigen::Index>(7 * obs.size());
  ConstraintRows rows;
  rows.g = Eigen::MatrixXd::Zero(m, 9);
  rows.h = Eigen::VectorXd::Zero(m);
  Eigen::Index r = 0;

  const auto push = [&rows, &r](const Vector9& g, double h) {
    const double n = g.norm();
    if (n > 0.0) {
      rows.g.row(r) = g.transpose() / n;
      rows.h[r] = h / n;
    } else {
      rows.g.row(r).setZero();
      rows.h[r] = h;
    }
    ++r;
  };

  for (const Observation& o : obs) {
    const CameraFrame cam = camera_frame_geometry(o.pose);

    // (center - camera) . axis >= 0 with center = -[q4, q7, q9].
    Vector9 cs1 = Vector9::Zero();
    cs1[3] = cam.optical_axis.x();
    cs1[6] = cam.optical_axis.y();
    cs1[8] = cam.optical_axis.z();
    push(cs1, -cam.optical_axis.dot(cam.center));

    // Principal plane outside the quadric: row(Pi_K) . [q; -1] <= 0.
    const Vector10 row = coefficient_row(cam.principal_plane);
    push(row.head<9>(), row[9]);

    // Center projection [u, v, w] = P [-q4, -q7, -q9, 1]^T inside the box.
    const Matrix34 p = projection_matrix(o.pose, o.intrinsics);
    Vector9 cu = Vector9::Zero(), cv = Vector9::Zero(), cw = Vector9::Zero();
    cu[3] = -p(0, 0), cu[6] = -p(0, 1), cu[8] = -p(0, 2);
    cv[3] = -p(1, 0), cv[6] = -p(1, 1), cv[8] = -p(1, 2);
    cw[3] = -p(2, 0), cw[6] = -p(2, 1), cw[8] = -p(2, 2);
    const double du = p(0, 3), dv = p(1, 3), dw = p(2, 3);

    push(cu - o.bbox.xmax * cw, -(du - o.bbox.xmax * dw));  // u <= xmax w
    push(o.bbox.xmin * cw - cu, -(o.bbox.xmin * dw - du));  // u >= xmin w
    push(cv - o.bbox.ymax * cw, -(dv - o.bbox.ymax * dw));  // v <= ymax w
    push(o.bbox.ymin * cw - cv, -(o.bbox.ymin * dw - dv));  // v >= ymin w
    push(-cw, dw - eps_w);                                  // w >= eps_w
  }
  return rows;
}

Vector9 solve_quadric_qp(const QpProblem& p, QpSolution* diagnostics) {
  const QpSolution sol =
      solve_qp(p.hessian, p.linear, p.constraint_g, p.constraint_h,
               p.regularization);
  if (diagnostics) *diagnostics = sol;
  return sol.x;
}

Vector9 svd_init(const Eigen::MatrixXd& a) {
  if (a.rows() < 9 || a.cols() != 10) {
    throw DataError("svd_init expects an n x 10 system with n >= 9");
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
  const Eigen::VectorXd v = svd.matrixV().col(9);
  if (std::abs(v[9]) < 1e-12) {
    throw DegenerateScale("null vector has vanishing homogeneous scale");
  }
  return -v.head<9>() / v[9];
}

const char* to_string(ValidationFailure f) {
  switch (f) {
    case ValidationFailure::kNone:
      return "ok";
    case ValidationFailure::kNotAnEllipsoid:
      return "not_an_ellipsoid";
    case ValidationFailure::kConstraintViolated:
      return "constraint_violated";
    case ValidationFailure::kProjectionFailed:
      return "projection_failed";
    case ValidationFailure::kReprojectionError:
      return "reprojection_error";
  }
  return "unknown";
}

ValidationResult validate_quadric(const Vector9& q, const ObservationSet& obs,
                                  const InitializerOptions& opts) {
  ValidationResult result;
  const DualQuadric quadric{q};

  try {
    (void)ellipsoid_from_quadric(quadric);
  } catch (const NotAnEllipsoid&) {
    result.reason = ValidationFailure::kNotAnEllipsoid;
    return result;
  }

  const ConstraintRows rows = build_constraints(obs, opts.eps_w);
  if (rows.g.rows() > 0) {
    result.max_constraint_violation =
        (rows.g * q - rows.h).maxCoeff();
    if (result.max_constraint_violation > opts.constraint_tol) {
      result.reason = ValidationFailure::kConstraintViolated;
      return result;
    }
  }

  double error_sum = 0.0;
  for (const Observation& o : obs) {
    const Matrix34 p = projection_matrix(o.pose, o.intrinsics);
    BBox predicted;
    try {
      predicted = conic_to_bbox(
          project_quadric(p, quadric),
          ImageBounds{static_cast<double>(o.intrinsics.width),
                      static_cast<double>(o.intrinsics.height)});
    } catch (const Error&) {
      result.reason = ValidationFailure::kProjectionFailed;
      return result;
    }
    error_sum +=
        (predicted.vector() - o.bbox.vector()).cwiseAbs().mean();
  }
  result.reprojection_error = error_sum / static_cast<double>(obs.size());
  if (result.reprojection_error > opts.max_reprojection_px) {
    result.reason = ValidationFailure::kReprojectionError;
    return result;
  }
  result.ok = true;
  return result;
}

InitializationResult initialize_object(const ObservationSet& obs,
                                       const InitializerOptions& opts) {
  InitializationResult result;
  try {
    AssembledSystem system = assemble_system(obs, opts);
    const ConstraintRows rows = build_constraints(obs, opts.eps_w);
    system.qp.constraint_g = rows.g;
    system.qp.constraint_h = rows.h;
    result.quadric = solve_quadric_qp(system.qp, &result.qp_diagnostics);
  } catch (const Error& e) {
    result.failure = e.what();
    return result;
  }

  result.validation = validate_quadric(result.quadric, obs, opts);
  if (!result.validation.ok) {
    result.failure = to_string(result.validation.reason);
    return result;
  }
  result.ellipsoid = ellipsoid_from_quadric(DualQuadric{result.quadric});
  result.ok = true;
  return result;
}

ObservationSet observations_for(const MapDatabase& map, ObjectId object) {
  ObservationSet obs;
  const MapObject& obj = map.object(object);
  for (const KeyframeId kf_id : obj.keyframes) {
    const SemanticKeyframe& kf = map.keyframe(kf_id);
    for (std::size_t m = 0; m < kf.associated_object.size(); ++m) {
      if (kf.associated_object[m] == object) {
        obs.push_back({kf.pose, kf.intrinsics, kf.measurements[m].bbox});
      }
    }
  }
  return obs;
}

}  // namespace semslam
