#include "lapcert/posterior.hpp"

#include <cmath>
#include <string>

#include "lapcert/error.hpp"
#include "lapcert/kernels.hpp"

namespace lapcert {

Eigen::VectorXd prior_diagonal(int p, double gamma) {
  Eigen::VectorXd d(p);
  for (int k = 1; k <= p; ++k) d(k - 1) = std::pow(static_cast<double>(k), 2.0 * gamma);
  return d;
}

Problem Problem::make(Eigen::MatrixXd R, Eigen::MatrixXd Rfine, Eigen::VectorXd y, ExpFamily fam,
                      double gamma) {
  if (R.rows() != y.size()) throw EvaluationError("design rows and data length differ");
  if (Rfine.cols() != R.cols()) throw EvaluationError("refined rows have wrong width");
  if (!std::isfinite(gamma) || gamma < 0.0) throw EvaluationError("gamma must be finite and >= 0");
  Problem pr;
  pr.n = static_cast<int>(R.rows());
  pr.p = static_cast<int>(R.cols());
  pr.gram = kernels::parallel::weighted_gram(R, Eigen::VectorXd::Ones(pr.n));
  pr.R = std::move(R);
  pr.Rfine = std::move(Rfine);
  pr.y = std::move(y);
  pr.fam = fam;
  pr.gamma = gamma;
  pr.prior = prior_diagonal(pr.p, gamma);
  return pr;
}

Problem make_problem(const EigenSystem& eig, const Dataset& data, const ExpFamily& fam,
                     double gamma, int p) {
  const int n = static_cast<int>(data.y.size());
  const int pts = kSupGridRefine * n;
  Eigen::VectorXd xs(pts + 1);
  for (int i = 0; i <= pts; ++i) xs(i) = static_cast<double>(i) / pts;
  return Problem::make(assemble_design(eig, n, p).rows, basis_rows(eig, xs, p), data.y, fam,
                       gamma);
}

double f_value(const Problem& prob, const Eigen::VectorXd& theta) {
  const Eigen::VectorXd eta = prob.R * theta;
  const double v = kernels::parallel::loglik_sum(prob.fam, eta, prob.y) +
                   0.5 * prob.prior.dot(theta.cwiseProduct(theta));
  if (!std::isfinite(v)) throw EvaluationError("non-finite objective");
  return v;
}

Eigen::VectorXd grad(const Problem& prob, const Eigen::VectorXd& theta) {
  const Eigen::VectorXd eta = prob.R * theta;
  const Eigen::VectorXd resid = eta.unaryExpr([&](double s) { return prob.fam.h1(s); }) - prob.y;
  return prob.R.transpose() * resid + prob.prior.cwiseProduct(theta);
}

Eigen::MatrixXd hess_L(const Problem& prob, const Eigen::VectorXd& theta) {
  const Eigen::VectorXd eta = prob.R * theta;
  const Eigen::VectorXd w = eta.unaryExpr([&](double s) { return prob.fam.h2(s); });
  return kernels::parallel::weighted_gram(prob.R, w);
}

Eigen::MatrixXd hessian(const Problem& prob, const Eigen::VectorXd& theta) {
  Eigen::MatrixXd H = hess_L(prob, theta);
  H.diagonal() += prob.prior;
  return H;
}

double third_directional(const Problem& prob, const Eigen::VectorXd& theta,
                         const Eigen::VectorXd& v) {
  return kernels::parallel::cubic_form(prob.fam, prob.R * theta, prob.R * v);
}

LaplaceFit map_solve(const Problem& prob, const std::optional<Eigen::VectorXd>& theta0) {
  Eigen::VectorXd theta = theta0 ? *theta0 : Eigen::VectorXd::Zero(prob.p);
  if (theta.size() != prob.p) throw OptimizationError("start point has wrong length");
  LaplaceFit fit;
  double f = f_value(prob, theta);
  bool last = false;
  for (int it = 0;; ++it) {
    if (it >= kNewtonMaxIters) {
      std::string trace;
      for (double d : fit.decrement_trace) trace += " " + std::to_string(d);
      throw OptimizationError("Newton iteration cap exceeded; decrement^2 trace:" + trace);
    }
    const Eigen::VectorXd g = grad(prob, theta);
    const Eigen::LLT<Eigen::MatrixXd> llt(hessian(prob, theta));
    if (llt.info() != Eigen::Success) throw OptimizationError("Hessian Cholesky failed");
    const Eigen::VectorXd step = -llt.solve(g);
    const double dec2 = -g.dot(step);
    fit.decrement_trace.push_back(dec2);
    if (last || dec2 <= 0.0 || g.norm() <= kNewtonGradTol * (1.0 + std::abs(f))) {
      fit.newton_iters = it;
      break;
    }
    // Once the decrement is below tolerance take one final full step.
    last = dec2 <= kNewtonDecrementTol;
    double t = 1.0;
    for (int halving = 0;; ++halving) {
      if (halving > 60) throw OptimizationError("line search failed to find a finite decrease");
      const Eigen::VectorXd cand = theta + t * step;
      double fc;
      bool ok = true;
      try {
        fc = f_value(prob, cand);
      } catch (const EvaluationError&) {
        ok = false;
        fc = 0.0;
      }
      if (ok && (fc <= f - 1e-4 * t * dec2 || (last && fc <= f + 1e-12 * (1.0 + std::abs(f))))) {
        theta = cand;
        f = fc;
        break;
      }
      t *= 0.5;
      if (last && t < 1.0) {
        // Already at round-off level; keep the current point.
        break;
      }
    }
  }
  fit.theta_hat = theta;
  fit.f_hat = f;
  fit.grad_norm = grad(prob, theta).norm();
  fit.hess_L = hess_L(prob, theta);
  fit.DG2 = fit.hess_L;
  fit.DG2.diagonal() += prob.prior;
  if (Eigen::LLT<Eigen::MatrixXd>(fit.DG2).info() != Eigen::Success)
    throw OptimizationError("D_G^2 is not positive definite at the MAP");
  fit.rq_sup = kernels::parallel::max_abs(prob.Rfine * theta);
  return fit;
}

}  // namespace lapcert
