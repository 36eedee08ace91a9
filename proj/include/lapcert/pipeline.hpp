#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lapcert/certification.hpp"
#include "lapcert/concentration.hpp"
#include "lapcert/config.hpp"
#include "lapcert/validation.hpp"

namespace lapcert {

struct InstanceSpec {
  FamilyKind family = FamilyKind::poisson;
  int n = 1000;
  int p = 4;
  double gamma = 2.0;
  double beta = 1.0;
  TruthSpec truth;
  std::uint64_t seed = 1;
};

struct Instance {
  InstanceSpec spec;
  Dataset data;
  Problem prob;
  LaplaceFit fit;
};

Instance build_instance(const EigenSystem& eig, const InstanceSpec& spec);

struct InstanceReport {
  std::vector<Certificate> certificates;  // D_G, I/alpha(I), then the gamma0 family
  Comparison comparison;
  std::optional<TVEstimate> tv;
  std::vector<TailReport> tails;
  std::optional<OmegaDiagnostics> omega;
  bool dominance_ok = true;
  bool alpha_ok = true;
  bool tails_ok = true;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
};

struct ReportOptions {
  CertificationConfig certification;
  ValidationConfig validation;
  ConcentrationConfig concentration;
  bool run_validation = true;
  bool run_tails = true;
  int omega_samples = 200;
};

InstanceReport certify_instance(const Instance& inst, const ReportOptions& opts);
void validate_instance(const Instance& inst, const ReportOptions& opts, InstanceReport& rep);

// Picks quadrature for p <= 2, importance sampling otherwise.
std::optional<TVEstimate> estimate_tv(const Instance& inst, const ValidationConfig& v, std::uint64_t seed);

struct SweepRow {
  int n = 0;
  int p = 0;
  std::string regime;  // p<m, m<p<m0*, p>m0*
  Comparison cmp;
  double ub_sq_dg = 0.0;  // (dim_A * local tau3 bound)^2 per choice
  double ub_sq_identity = 0.0;
  double ub_sq_star = 0.0;
};

std::string regime_label(double p, double m, double m0);

std::vector<SweepRow> run_sweep(const EigenSystem& eig, const InstanceSpec& base,
                                const SweepConfig& sweep, const CertifyOptions& copts);

struct RegimeFit {
  double plateau_slope = 0.0;  // d log(local term) / d log p over p > m0*
  int plateau_points = 0;
  double growth_slope = 0.0;  // d log(local term^2) / d log p over p < m
  int growth_points = 0;
};

// Least-squares slope of log y on log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);
RegimeFit fit_regimes(const std::vector<SweepRow>& rows);

}  // namespace lapcert
