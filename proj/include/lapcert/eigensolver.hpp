#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "lapcert/operators.hpp"

namespace lapcert {

// -u'' + Q u = mu u on [0,T], u(0)=0, c1 u'(T) + c2 u(T) = 0.
// Q and x(t) are stored on a uniform t-grid of 2*steps+1 points (half steps)
// so the RK4 stages read them directly.
struct LiouvilleForm {
  double T = 0.0;
  int steps = 0;
  FunctionGrid t_of_x;
  Eigen::VectorXd x_of_t;  // 2*steps+1 samples
  Eigen::VectorXd Q;       // 2*steps+1 samples
  double c1 = 1.0;
  double c2 = 0.0;
  double Q_sup = 0.0;

  double dt() const { return T / steps; }
};

LiouvilleForm liouville_transform(const CoefficientPair& spec, int N);

// Per-k record for v_k = u_k / u_k'(0).
struct VkDiag {
  double sup = 0.0;
  double deriv_sup = 0.0;
  double l2 = 0.0;
};

struct EigenSystem {
  int N = 0;
  std::vector<double> lambdas;  // decreasing
  Eigen::MatrixXd psi;          // (N+1) x K, column k-1 is psi_k on x_i = i/N
  Eigen::MatrixXd dpsi;         // derivative samples, same layout
  std::vector<double> sup_norms;
  std::vector<double> deriv_sup_norms;
  std::vector<VkDiag> vk;
  double T = 0.0;
  double Q_sup = 0.0;

  int K() const { return static_cast<int>(lambdas.size()); }
  double psi_at(int k, double x) const;  // 1-based k, linear interpolation
};

struct SolveOptions {
  double rel_tol = 1e-10;
  bool parallel = true;
};

EigenSystem solve_eigs(const LiouvilleForm& form, const CoefficientPair& spec, int K, int N,
                       const SolveOptions& opts = {});
EigenSystem solve_eigs(const CoefficientPair& spec, int K, int N, const SolveOptions& opts = {});

// Shooting primitives, exposed for tests.
struct ShotResult {
  double u_T = 0.0;
  double du_T = 0.0;
  int interior_zeros = 0;
  int count_below = 0;  // number of eigenvalues strictly below mu
};
ShotResult shoot(const LiouvilleForm& form, double mu);
double boundary_functional(const LiouvilleForm& form, double mu);

EigenSystem svd_oracle(const CoefficientPair& spec, int N, int K);

struct EigDiagnostics {
  struct Row {
    int k = 0;
    double lambda = 0.0;
    double psi_sup = 0.0;
    double dpsi_sup_over_k = 0.0;
    double v_sup = 0.0;
    double v_deriv_sup = 0.0;
    double v_l2 = 0.0;
    bool above_threshold = false;
    bool v_sup_ok = true;
    bool v_deriv_ok = true;
  };
  std::vector<Row> rows;
  int k_star = 0;  // first k with rho_k > 2 T ||Q||_inf
  double c_l2_min = 0.0;
  int violations = 0;
};
EigDiagnostics eig_diagnostics(const EigenSystem& eig);

// Number of sign changes of psi_k on the interior grid points.
int interior_sign_changes(const Eigen::VectorXd& v);

std::string eigen_cache_key(const CoefficientPair& spec, int N, int K);

}  // namespace lapcert
