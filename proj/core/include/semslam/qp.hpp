#pragma once

#include <Eigen/Core>

#include "semslam/errors.hpp"

namespace semslam {

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;  // one per constraint row, nonnegative
  double objective = 0.0;       // 0.5 x^T H x + f^T x
  double stationarity = 0.0;    // ||H x + f + G^T lambda||_inf
  double feasibility = 0.0;     // max(0, max_i(g_i x - h_i))
  double complementarity = 0.0; // max_i |lambda_i (g_i x - h_i)|
  int iterations = 0;
};

/// Nonnegative least squares min ||A x - b||, x >= 0 (Lawson-Hanson
/// active set). Throws MaxIterations when the active set cycles past the
/// iteration budget.
Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                     int max_iterations = 0);

/// Convex quadratic program
///     min 0.5 x^T H x + f^T x   s.t.   G x <= h
/// for symmetric positive semidefinite H. `regularization` is added to the
/// diagonal only to make the internal factorization positive definite; the
/// returned solution is polished against the unregularized KKT system and
/// all reported diagnostics use the original H.
///
/// With no constraints the result is the least-squares solution of
/// H x = -f. Throws Infeasible when no point satisfies the constraints.
QpSolution solve_qp(const Eigen::MatrixXd& h_matrix, const Eigen::VectorXd& f,
                    const Eigen::MatrixXd& g, const Eigen::VectorXd& h,
                    double regularization = 0.0);

}  // namespace semslam
