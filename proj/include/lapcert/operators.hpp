#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lapcert/polynomial.hpp"

namespace lapcert {

struct EigenSystem;

// Coefficients of a g' + b g = f on [0,1], with exact derivatives.
struct CoefficientPair {
  Polynomial a, b;
  Polynomial da, dda, db;
  double a_min = 0.0;  // smallest sampled value of a

  static CoefficientPair make(std::vector<double> a_coeffs, std::vector<double> b_coeffs);
  bool operator==(const CoefficientPair& o) const {
    return a.coeffs() == o.a.coeffs() && b.coeffs() == o.b.coeffs();
  }
};

inline constexpr int kMaxPolynomialDegree = 16;

// Samples of a function at x_i = i/N, i = 0..N.
struct FunctionGrid {
  Eigen::VectorXd values;

  FunctionGrid() = default;
  explicit FunctionGrid(Eigen::VectorXd v);

  int N() const { return static_cast<int>(values.size()) - 1; }
  double h() const { return 1.0 / N(); }
  double x(int i) const { return static_cast<double>(i) / N(); }
  double at(double x) const;  // linear interpolation
};

FunctionGrid sample(const Polynomial& poly, int N);
double trapezoid(const FunctionGrid& f);
double inner(const FunctionGrid& f, const FunctionGrid& g);

FunctionGrid cumulative_antiderivative(const CoefficientPair& spec, int N);
FunctionGrid apply_R(const CoefficientPair& spec, const FunctionGrid& f);
FunctionGrid apply_RT(const CoefficientPair& spec, const FunctionGrid& h);

// (N+1) x (N+1) matrix with M * f = apply_R(f) on the grid.
Eigen::MatrixXd discretize_R(const CoefficientPair& spec, int N);

// Trapezoid weights on the uniform grid of N intervals.
Eigen::VectorXd trapezoid_weights(int N);

struct DesignMatrix {
  Eigen::MatrixXd rows;  // n x p, R_jk = sqrt(lambda_k) psi_k(j/n)
  int n = 0;
  int p = 0;
};

// Rows r(x_i)_k = sqrt(lambda_k) psi_k(x_i) for arbitrary abscissae.
Eigen::MatrixXd basis_rows(const EigenSystem& eig, const Eigen::VectorXd& xs, int p);
DesignMatrix assemble_design(const EigenSystem& eig, int n, int p);

// phi_k = R^T psi_k / sqrt(lambda_k).
FunctionGrid phi_from_psi(const CoefficientPair& spec, const EigenSystem& eig, int k);

}  // namespace lapcert
