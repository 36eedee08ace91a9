#include "lapcert/model.hpp"

#include <cmath>
#include <numbers>

#include "lapcert/error.hpp"
#include "lapcert/operators.hpp"

namespace lapcert {

FamilyKind family_from_string(const std::string& s) {
  if (s == "poisson") return FamilyKind::poisson;
  if (s == "gaussian") return FamilyKind::gaussian;
  if (s == "bernoulli") return FamilyKind::bernoulli;
  throw ModelError("unknown family '" + s + "'");
}

std::string to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::poisson: return "poisson";
    case FamilyKind::gaussian: return "gaussian";
    case FamilyKind::bernoulli: return "bernoulli";
  }
  return "?";
}

namespace {
inline double sigmoid(double s) {
  if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}
}  // namespace

double bernoulli_h3_argmax() { return std::log(2.0 + std::sqrt(3.0)); }

double ExpFamily::h(double s) const {
  switch (kind) {
    case FamilyKind::poisson: return std::exp(s);
    case FamilyKind::gaussian: return 0.5 * s * s;
    case FamilyKind::bernoulli: return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
  }
  return 0.0;
}

double ExpFamily::h1(double s) const {
  switch (kind) {
    case FamilyKind::poisson: return std::exp(s);
    case FamilyKind::gaussian: return s;
    case FamilyKind::bernoulli: return sigmoid(s);
  }
  return 0.0;
}

double ExpFamily::h2(double s) const {
  switch (kind) {
    case FamilyKind::poisson: return std::exp(s);
    case FamilyKind::gaussian: return 1.0;
    case FamilyKind::bernoulli: {
      const double q = sigmoid(s);
      return q * (1.0 - q);
    }
  }
  return 0.0;
}

double ExpFamily::h3(double s) const {
  switch (kind) {
    case FamilyKind::poisson: return std::exp(s);
    case FamilyKind::gaussian: return 0.0;
    case FamilyKind::bernoulli: {
      const double q = sigmoid(s);
      return q * (1.0 - q) * (1.0 - 2.0 * q);
    }
  }
  return 0.0;
}

double ExpFamily::d3_envelope(double K) const {
  K = std::abs(K);
  switch (kind) {
    case FamilyKind::poisson: return std::exp(K);
    case FamilyKind::gaussian: return 0.0;
    case FamilyKind::bernoulli:
      // |h'''| is even and increases on [0, ln(2+sqrt3)].
      return K < bernoulli_h3_argmax() ? std::abs(h3(K)) : kBernoulliH3Max;
  }
  return 0.0;
}

std::int64_t sample_poisson(double rate, PhiloxStream& rng) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw ModelError("invalid Poisson rate");
  if (rate == 0.0) return 0;
  if (rate < 30.0) {
    const double u = rng.uniform();
    double p = std::exp(-rate);
    double F = p;
    std::int64_t k = 0;
    while (u > F && k < 1000) {
      ++k;
      p *= rate / static_cast<double>(k);
      F += p;
    }
    return k;
  }
  // PTRS transformed rejection (Hormann 1993).
  const double slam = std::sqrt(rate);
  const double loglam = std::log(rate);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double U = rng.uniform() - 0.5;
    const double V = rng.uniform();
    const double us = 0.5 - std::abs(U);
    const double kd = std::floor((2.0 * a / us + b) * U + rate + 0.43);
    if (us >= 0.07 && V <= vr) return static_cast<std::int64_t>(kd);
    if (kd < 0.0 || (us < 0.013 && V > us)) continue;
    if (std::log(V) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -rate + kd * loglam - std::lgamma(kd + 1.0))
      return static_cast<std::int64_t>(kd);
  }
}

double ExpFamily::sample(double s, PhiloxStream& rng) const {
  switch (kind) {
    case FamilyKind::poisson: {
      const double rate = std::exp(s);
      if (!(rate <= kPoissonRateLimit))
        throw ModelError("Poisson rate exp(" + std::to_string(s) +
                         ") too large; reduce the truth amplitude A");
      return static_cast<double>(sample_poisson(rate, rng));
    }
    case FamilyKind::gaussian: return s + rng.normal();
    case FamilyKind::bernoulli: return rng.uniform() < sigmoid(s) ? 1.0 : 0.0;
  }
  return 0.0;
}

TruthSpec TruthSpec::decay(int p_star, double amplitude, double exponent) {
  TruthSpec t;
  t.theta_star.resize(p_star);
  for (int k = 1; k <= p_star; ++k)
    t.theta_star(k - 1) = amplitude * ((k % 2) ? 1.0 : -1.0) * std::pow(k, -exponent);
  return t;
}

Dataset generate(const EigenSystem& eig, const ExpFamily& fam, const TruthSpec& truth, int n,
                 std::uint64_t seed) {
  const int ps = static_cast<int>(truth.theta_star.size());
  if (ps > eig.K()) throw ModelError("truth dimension exceeds eigenpair count");
  if (!truth.theta_star.allFinite()) throw ModelError("truth has non-finite entries");
  const DesignMatrix R = assemble_design(eig, n, ps);
  Dataset d;
  d.seed = seed;
  d.family = fam.kind;
  d.s_true = R.rows * truth.theta_star;
  d.y.resize(n);
  bool overflow = false;
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j) {
    PhiloxStream rng(derive_seed(seed, kObservationStreamTag), static_cast<std::uint64_t>(j));
    try {
      d.y(j) = fam.sample(d.s_true(j), rng);
    } catch (const ModelError&) {
#pragma omp atomic write
      overflow = true;
    }
  }
  if (overflow) throw ModelError("Poisson rate overflow; reduce the truth amplitude A");
  d.s_true_sup = signal_sup_norm(eig, truth.theta_star, n);
  return d;
}

double signal_sup_norm(const EigenSystem& eig, const Eigen::VectorXd& theta, int n) {
  const int p = static_cast<int>(theta.size());
  if (p == 0) return 0.0;
  const int pts = std::max(4 * n, 4);
  Eigen::VectorXd xs(pts + 1);
  for (int i = 0; i <= pts; ++i) xs(i) = static_cast<double>(i) / pts;
  return (basis_rows(eig, xs, p) * theta).cwiseAbs().maxCoeff();
}

}  // namespace lapcert
