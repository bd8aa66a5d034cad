#include "semslam/qp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace semslam {

Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                     int max_iterations) {
  const Eigen::Index n = a.cols();
  if (max_iterations <= 0) {
    max_iterations = 3 * static_cast<int>(n) + 30;
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);

  const double tol = 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()) *
                     std::max(1.0, b.cwiseAbs().maxCoeff());

  const auto solve_passive = [&](Eigen::VectorXd* z) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (passive[static_cast<std::size_t>(j)]) cols.push_back(j);
    }
    z->setZero(n);
    if (cols.empty()) return;
    Eigen::MatrixXd ap(a.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) {
      ap.col(static_cast<Eigen::Index>(i)) = a.col(cols[i]);
    }
    const Eigen::VectorXd zp = ap.colPivHouseholderQr().solve(b);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      (*z)[cols[i]] = zp[static_cast<Eigen::Index>(i)];
    }
  };

  for (int iter = 0; iter < max_iterations; ++iter) {
    const Eigen::VectorXd w = a.transpose() * (b - a * x);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    }
    if (best < 0) return x;  // optimal
    passive[static_cast<std::size_t>(best)] = true;

    Eigen::VectorXd z;
    solve_passive(&z);
    // Step back whenever the unconstrained passive solution leaves the
    // nonnegative orthant, dropping the blocking variables.
    bool inner_done = false;
    for (int inner = 0; inner < max_iterations && !inner_done; ++inner) {
      double alpha = 1.0;
      bool clipped = false;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!passive[static_cast<std::size_t>(j)] || z[j] > 0.0) continue;
        const double denom = x[j] - z[j];
        if (denom > 0.0) {
          alpha = std::min(alpha, x[j] / denom);
          clipped = true;
        }
      }
      if (!clipped) {
        x = z;
        inner_done = true;
        break;
      }
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x[j] <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          x[j] = 0.0;
        }
      }
      solve_passive(&z);
    }
    if (!inner_done) {
      throw MaxIterations("nnls inner loop did not terminate");
    }
  }
  throw MaxIterations("nnls did not converge");
}

namespace {

struct KktReport {
  double stationarity;
  double feasibility;
  double complementarity;
};

KktReport kkt_residuals(const Eigen::MatrixXd& h_matrix,
                        const Eigen::VectorXd& f, const Eigen::MatrixXd& g,
                        const Eigen::VectorXd& h, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& lambda) {
  KktReport r{0.0, 0.0, 0.0};
  Eigen::VectorXd grad = h_matrix * x + f;
  if (g.rows() > 0) grad += g.transpose() * lambda;
  r.stationarity = grad.cwiseAbs().maxCoeff();
  if (g.rows() > 0) {
    const Eigen::VectorXd slack = g * x - h;
    r.feasibility = std::max(0.0, slack.maxCoeff());
    r.complementarity = (lambda.array() * slack.array()).abs().maxCoeff();
  }
  return r;
}

}  // namespace

QpSolution solve_qp(const Eigen::MatrixXd& h_matrix, const Eigen::VectorXd& f,
                    const Eigen::MatrixXd& g, const Eigen::VectorXd& h,
                    double regularization) {
  const Eigen::Index n = h_matrix.cols();
  const Eigen::Index m = g.rows();
  QpSolution sol;
  sol.multipliers = Eigen::VectorXd::Zero(m);

  if (m == 0) {
    sol.x = h_matrix.completeOrthogonalDecomposition().solve(-f);
    sol.objective = 0.5 * sol.x.dot(h_matrix * sol.x) + f.dot(sol.x);
    const KktReport r = kkt_residuals(h_matrix, f, g, h, sol.x,
                                      sol.multipliers);
    sol.stationarity = r.stationarity;
    return sol;
  }

  // Factor H (+ escalating regularization if needed) for the substitution
  // x = x0 + L^-T y that turns the QP into a least distance problem.
  Eigen::MatrixXd h_reg = h_matrix;
  double reg = regularization;
  Eigen::LLT<Eigen::MatrixXd> llt;
  const double trace_scale =
      std::max(h_matrix.trace() / static_cast<double>(n), 1e-300);
  for (int attempt = 0;; ++attempt) {
    h_reg = h_matrix;
    h_reg.diagonal().array() += reg;
    llt.compute(h_reg);
    if (llt.info() == Eigen::Success) break;
    if (attempt >= 12) {
      throw Error("QP hessian is not positive semidefinite");
    }
    reg = std::max(reg * 10.0, 1e-12 * trace_scale);
  }

  const Eigen::VectorXd x0 = llt.solve(-f);
  const Eigen::MatrixXd l = llt.matrixL();
  // ghat = G L^-T, via L ghat^T = G^T.
  const Eigen::MatrixXd ghat_t =
      l.triangularView<Eigen::Lower>().solve(g.transpose());
  const Eigen::VectorXd hhat = h - g * x0;

  // Least distance problem min ||y|| s.t. ghat y <= hhat, solved through
  // one NNLS problem (Lawson & Hanson).
  Eigen::MatrixXd e(n + 1, m);
  e.topRows(n) = -ghat_t;
  e.bottomRows(1) = -hhat.transpose();
  Eigen::VectorXd target = Eigen::VectorXd::Zero(n + 1);
  target[n] = 1.0;

  const Eigen::VectorXd u = nnls(e, target);
  const Eigen::VectorXd residual = e * u - target;
  // With a feasible constraint set the last residual entry is strictly
  // negative; it approaching zero is the infeasibility certificate.
  const double rn = residual[n];
  if (rn > -1e-10) {
    throw Infeasible("QP constraints admit no solution");
  }
  Eigen::VectorXd y = -residual.head(n) / rn;
  Eigen::VectorXd lambda = -u / rn;

  Eigen::VectorXd x =
      x0 + l.transpose().triangularView<Eigen::Upper>().solve(y);

  // Polish on the active set against the unregularized KKT system; this
  // removes the O(reg) bias of the factorization shift. Kept only when it
  // stays feasible and does not increase the objective.
  {
    const double act_tol =
        1e-7 * std::max(1.0, hhat.cwiseAbs().maxCoeff());
    std::vector<Eigen::Index> active;
    const Eigen::VectorXd slack = g * x - h;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (slack[i] > -act_tol || lambda[i] > 0.0) active.push_back(i);
    }
    if (active.size() <= static_cast<std::size_t>(n)) {
      const Eigen::Index na = static_cast<Eigen::Index>(active.size());
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + na, n + na);
      kkt.topLeftCorner(n, n) = h_matrix;
      Eigen::VectorXd rhs(n + na);
      rhs.head(n) = -f;
      for (Eigen::Index i = 0; i < na; ++i) {
        kkt.block(0, n + i, n, 1) = g.row(active[static_cast<std::size_t>(i)])
                                        .transpose();
        kkt.block(n + i, 0, 1, n) = g.row(active[static_cast<std::size_t>(i)]);
        rhs[n + i] = h[active[static_cast<std::size_t>(i)]];
      }
      const Eigen::VectorXd xs =
          kkt.completeOrthogonalDecomposition().solve(rhs);
      const Eigen::VectorXd x_pol = xs.head(n);
      Eigen::VectorXd lambda_pol = Eigen::VectorXd::Zero(m);
      bool ok = true;
      for (Eigen::Index i = 0; i < na; ++i) {
        const double li = xs[n + i];
        if (li < -1e-9) ok = false;
        lambda_pol[active[static_cast<std::size_t>(i)]] = std::max(li, 0.0);
      }
      if (ok) {
        const Eigen::VectorXd slack_pol = g * x_pol - h;
        const double feas_tol =
            1e-8 * std::max(1.0, h.cwiseAbs().maxCoeff());
        if (slack_pol.maxCoeff() <= feas_tol) {
          const double obj_old = 0.5 * x.dot(h_matrix * x) + f.dot(x);
          const double obj_new =
              0.5 * x_pol.dot(h_matrix * x_pol) + f.dot(x_pol);
          if (obj_new <= obj_old + 1e-12 * (1.0 + std::abs(obj_old))) {
            x = x_pol;
            lambda = lambda_pol;
          }
        }
      }
    }
  }

  sol.x = x;
  sol.multipliers = lambda;
  sol.objective = 0.5 * x.dot(h_matrix * x) + f.dot(x);
  const KktReport r = kkt_residuals(h_matrix, f, g, h, x, lambda);
  sol.stationarity = r.stationarity;
  sol.feasibility = r.feasibility;
  sol.complementarity = r.complementarity;
  return sol;
}

}  // namespace semslam
