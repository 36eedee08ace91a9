#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "lapcert/eigensolver.hpp"
#include "lapcert/rng.hpp"

namespace lapcert {

enum class FamilyKind { poisson, gaussian, bernoulli };

FamilyKind family_from_string(const std::string& s);
std::string to_string(FamilyKind k);

// One-parameter exponential family with cumulant h.
struct ExpFamily {
  FamilyKind kind = FamilyKind::gaussian;

  double h(double s) const;
  double h1(double s) const;
  double h2(double s) const;
  double h3(double s) const;
  // sup_{|t| <= K} |h'''(t)|
  double d3_envelope(double K) const;
  double sample(double s, PhiloxStream& rng) const;
};

// Largest |h'''| of the logistic cumulant and where it is attained.
inline constexpr double kBernoulliH3Max = 0.09622504486493763;  // 1/(6 sqrt 3)
double bernoulli_h3_argmax();                                   // ln(2 + sqrt 3)

std::int64_t sample_poisson(double rate, PhiloxStream& rng);

struct TruthSpec {
  Eigen::VectorXd theta_star;

  // theta*_k = A * (-1)^{k+1} * k^{-s}
  static TruthSpec decay(int p_star, double amplitude = 0.5, double exponent = 2.0);
};

struct Dataset {
  Eigen::VectorXd y;
  Eigen::VectorXd s_true;
  std::uint64_t seed = 0;
  FamilyKind family = FamilyKind::gaussian;
  double s_true_sup = 0.0;  // ||R q*||_inf on the refined grid
};

Dataset generate(const EigenSystem& eig, const ExpFamily& fam, const TruthSpec& truth, int n,
                 std::uint64_t seed);

// max over a grid of at least 4n+1 points of |sum_k theta_k sqrt(lambda_k) psi_k(x)|.
double signal_sup_norm(const EigenSystem& eig, const Eigen::VectorXd& theta, int n);

inline constexpr double kPoissonRateLimit = 1e9;
inline constexpr std::uint64_t kObservationStreamTag = 0x5947;

}  // namespace lapcert
