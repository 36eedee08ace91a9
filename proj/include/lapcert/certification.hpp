#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lapcert/eigensolver.hpp"
#include "lapcert/posterior.hpp"

namespace lapcert {

enum class ChoiceKind { DG, identity_scaled, gamma0_family };

struct WeightChoice {
  ChoiceKind kind = ChoiceKind::DG;
  double gamma0 = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd D2;

  std::string label() const;
};

WeightChoice choice_DG(const LaplaceFit& fit);
WeightChoice choice_identity(const LaplaceFit& fit);
WeightChoice choice_gamma0(const LaplaceFit& fit, double gamma0);

double alpha_of(const Eigen::MatrixXd& D2, const Eigen::MatrixXd& DG2);
double effdim_of(const Eigen::MatrixXd& D2, const Eigen::MatrixXd& DG2);

// r-independent pieces of the third-derivative bound for a fixed D.
struct Tau3Geometry {
  double A = 0.0;         // sup over the refined grid of ||D^{-1} r(x)||
  double A_coarse = 0.0;  // same sup over the observation grid j/n only
  double B = 0.0;         // lambda_max(D^{-1} R^T R D^{-1})
  double grid_gap = 0.0;  // A - A_coarse, a proxy for the grid-to-continuum gap
};

Tau3Geometry tau3_geometry(const Problem& prob, const Eigen::MatrixXd& D2);
double tau3_from_geometry(const LaplaceFit& fit, const Problem& prob, ChoiceKind kind,
                          const Tau3Geometry& g, double r);
double tau3_certified(const LaplaceFit& fit, const Problem& prob, const WeightChoice& choice,
                      double r);

struct CertifyOptions {
  int r_points = 60;
  double r_max_factor = 50.0;
  double beta = 1.0;
};

struct Certificate {
  WeightChoice choice;  // scaled so that alpha = 1
  double alpha_raw = 0.0;
  double alpha = 0.0;
  double effdim = 0.0;
  double tau3_sup = 0.0;
  double radius = 0.0;
  double local_term = 0.0;
  double tail_term = 0.0;
  double tv_bound = 0.0;
  bool feasible = false;
  bool hessian_lb_by_construction = false;
  Tau3Geometry geometry;
  double S_dim = std::numeric_limits<double>::quiet_NaN();
  double S_tau = std::numeric_limits<double>::quiet_NaN();
  double m = std::numeric_limits<double>::quiet_NaN();
  double m0star = std::numeric_limits<double>::quiet_NaN();
  double gamma0star = std::numeric_limits<double>::quiet_NaN();
};

double tail_term(double effdim, double r);

Certificate certify(const LaplaceFit& fit, const Problem& prob, const WeightChoice& choice,
                    const CertifyOptions& opts = {});

struct SSums {
  double S_dim = 0.0;
  double S_tau = 0.0;  // square root of sum 1/(n + k^{2 gamma0 + 2 beta})
};
SSums s_sums(double n, int p, double beta, double gamma, double gamma0);

struct Gamma0Star {
  double gamma0 = 0.0;
  double m = 0.0;
  double m0 = 0.0;
  bool below_threshold = false;  // n <= (beta+gamma-1)^{-2beta-2gamma}
};
Gamma0Star gamma0_star(double n, double beta, double gamma);

struct Comparison {
  Certificate dg, identity, star;
  Gamma0Star g0;
  double ratio_dg = 0.0;        // UB(D_G) / UB(D(gamma0*))
  double ratio_identity = 0.0;  // UB(I/alpha(I)) / UB(D(gamma0*))
};
Comparison compare_choices(const LaplaceFit& fit, const Problem& prob,
                           const CertifyOptions& opts = {});

// psi_rows: n x p matrix of psi_k(j/n).
double ortho_constant(const Eigen::MatrixXd& psi_rows, double lambda_exp);
double ortho_constant(const EigenSystem& eig, int n, int p, double lambda_exp);
Eigen::MatrixXd cosine_basis_values(const Eigen::VectorXd& xs, int p);

struct TightnessResult {
  double lower = 0.0;
  double upper = 0.0;
  double ratio = 0.0;
  double C_norm = 0.0;        // witness scale making ||D v|| = 1
  double witness_norm = 0.0;  // ||D v|| after scaling
  double identity_lower = 0.0;
  int m0bar = 0;
};
TightnessResult tightness_probe(int n, int p, double beta, double gamma0);

struct OmegaDiagnostics {
  double omega_est = 0.0;
  double omega3_est = 0.0;
  double tau3_est = 0.0;
  double tau3_cert = 0.0;
  bool chain_ok = true;
  bool omega_le_third = true;
};
OmegaDiagnostics omega_diagnostics(const LaplaceFit& fit, const Problem& prob,
                                   const WeightChoice& choice, double r, int samples,
                                   std::uint64_t seed);

}  // namespace lapcert
