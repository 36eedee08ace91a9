#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lapcert/model.hpp"

namespace lapcert {

struct TruthConfig {
  double amplitude = 0.5;
  double exponent = 2.0;
  int p_star = 20;
  std::vector<double> theta_star;  // overrides the decay profile when non-empty

  TruthSpec spec() const;
};

struct CertificationConfig {
  bool auto_star = true;
  std::vector<double> gamma0;  // used when auto_star is false
  int r_points = 60;
  double r_max_factor = 50.0;
  double lambda_exp = 3.5;
};

struct ValidationConfig {
  std::string method = "auto";  // auto | quadrature | importance | none
  int M = 20000;
  int per_axis = 128;
};

struct ConcentrationConfig {
  int M = 4000;
  std::vector<double> radius_factors{1.0, 1.5, 2.0, 3.0, 4.0};  // multiples of sqrt(effdim)
};

struct SweepConfig {
  std::string axis = "p";  // p | n
  std::vector<int> p_grid{2, 3, 4, 6, 8, 12, 16, 24, 32};
  std::vector<int> n_grid{1024, 2048, 4096};
};

struct ExperimentConfig {
  std::vector<double> a{1.0};
  std::vector<double> b{0.0};
  FamilyKind family = FamilyKind::poisson;
  int n = 1000;
  int p = 4;
  double gamma = 2.0;
  std::optional<double> beta_override;
  TruthConfig truth;
  int K = 64;
  int N = 4096;
  CertificationConfig certification;
  ValidationConfig validation;
  ConcentrationConfig concentration;
  SweepConfig sweep;
  std::uint64_t seed = 1;
  std::string output = "out";

  double beta() const { return beta_override.value_or(1.0); }
};

// Throws ConfigError naming the offending JSON path, e.g. "$.certification.r_points".
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Full config with every default filled in.
std::string echo_config(const ExperimentConfig& cfg);

}  // namespace lapcert
