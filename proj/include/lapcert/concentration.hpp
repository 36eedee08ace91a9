#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "lapcert/posterior.hpp"

namespace lapcert {

double gaussian_tail(double t);  // e^{-t^2/2}, clamped to [0,1]

struct PosteriorTail {
  double value = 1.0;
  double raw_exponent = 0.0;  // -(r - 3 sqrt(dim))^2 / 3
  bool applicable = false;    // r >= 3 + 3 sqrt(dim)
};
PosteriorTail posterior_tail_bound(double effdim, double r);

// Laurent-Massart style bound P(g^T B g - dim > 2 v sqrt(x) + 2x) <= e^{-x}, v^2 = Tr B^2.
double chi2_deviation_threshold(const Eigen::VectorXd& spectrum, double x);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};
Interval wilson_interval(double successes, double trials, double z);
double wilson_se(double successes, double trials);

struct OutsideMass {
  double r = 0.0;
  double gaussian = 0.0;
  Interval gaussian_ci;
  double gaussian_se = 0.0;
  double posterior = 0.0;
  Interval posterior_ci;
  double posterior_se = 0.0;
  double ess = 0.0;
  bool low_ess = false;
};

inline constexpr int kBootstrapResamples = 500;

std::vector<OutsideMass> empirical_outside_mass(const LaplaceFit& fit, const Problem& prob,
                                                const Eigen::MatrixXd& D0sq,
                                                const std::vector<double>& radii, int M,
                                                std::uint64_t seed);
OutsideMass empirical_outside_mass(const LaplaceFit& fit, const Problem& prob,
                                   const Eigen::MatrixXd& D0sq, double r, int M,
                                   std::uint64_t seed);

struct TailReport {
  double r = 0.0;
  double effdim = 0.0;
  double gaussian_bound = 1.0;
  double posterior_bound = 1.0;
  bool posterior_applicable = false;
  OutsideMass empirical;
  bool gaussian_ok = true;
  bool posterior_ok = true;
};
std::vector<TailReport> tail_reports(const LaplaceFit& fit, const Problem& prob,
                                     const Eigen::MatrixXd& D0sq, double effdim,
                                     const std::vector<double>& radii, int M, std::uint64_t seed);

// Standard-normal draws for M samples in dimension p (column per sample).
Eigen::MatrixXd white_noise(int p, int M, std::uint64_t seed, std::uint64_t tag);

}  // namespace lapcert
