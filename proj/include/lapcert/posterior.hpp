#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "lapcert/eigensolver.hpp"
#include "lapcert/model.hpp"

namespace lapcert {

// f(theta) = sum_j [h(R_j^T theta) - y_j R_j^T theta] + 1/2 sum_k k^{2 gamma} theta_k^2
struct Problem {
  Eigen::MatrixXd R;      // n x p design
  Eigen::MatrixXd Rfine;  // basis rows on the refined x-grid, used for sup-norms
  Eigen::VectorXd y;
  ExpFamily fam;
  double gamma = 0.0;
  Eigen::VectorXd prior;  // diagonal of G^2
  Eigen::MatrixXd gram;   // R^T R
  int n = 0;
  int p = 0;

  static Problem make(Eigen::MatrixXd R, Eigen::MatrixXd Rfine, Eigen::VectorXd y, ExpFamily fam,
                      double gamma);
};

inline constexpr int kSupGridRefine = 4;

Problem make_problem(const EigenSystem& eig, const Dataset& data, const ExpFamily& fam,
                     double gamma, int p);

Eigen::VectorXd prior_diagonal(int p, double gamma);

double f_value(const Problem& prob, const Eigen::VectorXd& theta);
Eigen::VectorXd grad(const Problem& prob, const Eigen::VectorXd& theta);
Eigen::MatrixXd hessian(const Problem& prob, const Eigen::VectorXd& theta);
Eigen::MatrixXd hess_L(const Problem& prob, const Eigen::VectorXd& theta);
double third_directional(const Problem& prob, const Eigen::VectorXd& theta,
                         const Eigen::VectorXd& v);

struct LaplaceFit {
  Eigen::VectorXd theta_hat;
  Eigen::MatrixXd hess_L;
  Eigen::MatrixXd DG2;
  double f_hat = 0.0;
  double grad_norm = 0.0;
  int newton_iters = 0;
  double rq_sup = 0.0;
  std::vector<double> decrement_trace;
};

inline constexpr int kNewtonMaxIters = 200;
inline constexpr double kNewtonDecrementTol = 1e-18;
inline constexpr double kNewtonGradTol = 1e-9;  // relative to 1 + |f|

LaplaceFit map_solve(const Problem& prob, const std::optional<Eigen::VectorXd>& theta0 = {});

}  // namespace lapcert
