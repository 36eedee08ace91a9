#include "lapcert/concentration.hpp"

#include <algorithm>
#include <cmath>

#include "lapcert/error.hpp"
#include "lapcert/kernels.hpp"
#include "lapcert/rng.hpp"

namespace lapcert {

double gaussian_tail(double t) {
  if (t < 0.0) throw ParameterError("concentration", "gaussian_tail needs t >= 0");
  return std::min(1.0, std::exp(-0.5 * t * t));
}

PosteriorTail posterior_tail_bound(double effdim, double r) {
  PosteriorTail pt;
  const double d = r - 3.0 * std::sqrt(effdim);
  pt.raw_exponent = -d * d / 3.0;
  pt.applicable = r >= 3.0 + 3.0 * std::sqrt(effdim);
  pt.value = pt.applicable ? std::min(1.0, std::exp(pt.raw_exponent) / 3.0) : 1.0;
  return pt;
}

double chi2_deviation_threshold(const Eigen::VectorXd& spectrum, double x) {
  const double v = std::sqrt(spectrum.squaredNorm());
  return spectrum.sum() + 2.0 * v * std::sqrt(x) + 2.0 * x;
}

Interval wilson_interval(double k, double n, double z) {
  const double ph = k / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (ph + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n)) / denom;
  // The endpoints at k = 0 and k = n are exact.
  return {k <= 0.0 ? 0.0 : std::max(0.0, centre - half), k >= n ? 1.0 : std::min(1.0, centre + half)};
}

double wilson_se(double k, double n) {
  const Interval iv = wilson_interval(k, n, 1.0);
  return 0.5 * (iv.hi - iv.lo);
}

Eigen::MatrixXd white_noise(int p, int M, std::uint64_t seed, std::uint64_t tag) {
  Eigen::MatrixXd Z(p, M);
#pragma omp parallel for schedule(static)
  for (int m = 0; m < M; ++m) {
    PhiloxStream rng(derive_seed(seed, tag), static_cast<std::uint64_t>(m));
    for (int k = 0; k < p; ++k) Z(k, m) = rng.normal();
  }
  return Z;
}

std::vector<OutsideMass> empirical_outside_mass(const LaplaceFit& fit, const Problem& prob,
                                                const Eigen::MatrixXd& D0sq,
                                                const std::vector<double>& radii, int M,
                                                std::uint64_t seed) {
  if (M < 1000) throw ParameterError("concentration", "need at least 1000 samples");
  const int p = prob.p;
  Eigen::LLT<Eigen::MatrixXd> llt(fit.DG2);
  if (llt.info() != Eigen::Success) throw LinearAlgebraError("D_G^2 not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::MatrixXd LinvT =
      L.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd Z = white_noise(p, M, seed, 0x7A11);

  kernels::SampleInputs in{&prob.fam, &prob.R, &prob.y, &prob.prior, &fit.theta_hat, fit.f_hat,
                           &LinvT};
  const Eigen::VectorXd logw = kernels::parallel::log_weights(in, Z);
  const double mx = logw.maxCoeff();
  const Eigen::VectorXd w = (logw.array() - mx).exp().matrix();
  const double ess = w.sum() * w.sum() / w.squaredNorm();

  // ||D0 (theta - theta_hat)|| for every sample.
  const Eigen::MatrixXd U = LinvT * Z;
  Eigen::LLT<Eigen::MatrixXd> l0(D0sq);
  if (l0.info() != Eigen::Success) throw LinearAlgebraError("D0^2 not positive definite");
  const Eigen::MatrixXd L0T = l0.matrixL().transpose();
  const Eigen::VectorXd dist = (L0T * U).colwise().norm().transpose();

  // Bootstrap replicates of the self-normalised outside mass, one stream per replicate.
  const std::size_t R = radii.size();
  Eigen::MatrixXd reps(R, kBootstrapResamples);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < kBootstrapResamples; ++b) {
    PhiloxStream rng(derive_seed(seed, 0xB007), static_cast<std::uint64_t>(b));
    double den = 0.0;
    Eigen::VectorXd num = Eigen::VectorXd::Zero(R);
    for (int m = 0; m < M; ++m) {
      const int i = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(M));
      den += w(i);
      for (std::size_t k = 0; k < R; ++k)
        if (dist(i) > radii[k]) num(k) += w(i);
    }
    reps.col(b) = num / den;
  }

  std::vector<OutsideMass> out;
  for (double r : radii) {
    OutsideMass om;
    om.r = r;
    om.ess = ess;
    om.low_ess = ess < 50.0;
    double cnt = 0.0, wout = 0.0;
    for (int m = 0; m < M; ++m)
      if (dist(m) > r) {
        cnt += 1.0;
        wout += w(m);
      }
    om.gaussian = cnt / M;
    om.gaussian_ci = wilson_interval(cnt, M, 1.96);
    om.gaussian_se = wilson_se(cnt, M);
    om.posterior = wout / w.sum();
    const Eigen::Index row = static_cast<Eigen::Index>(out.size());
    std::vector<double> rep(kBootstrapResamples);
    for (int b = 0; b < kBootstrapResamples; ++b) rep[b] = reps(row, b);
    std::sort(rep.begin(), rep.end());
    double mean = 0.0;
    for (double v : rep) mean += v;
    mean /= rep.size();
    double var = 0.0;
    for (double v : rep) var += (v - mean) * (v - mean);
    om.posterior_se = std::sqrt(var / (rep.size() - 1));
    om.posterior_ci = {std::min(om.posterior, rep[static_cast<std::size_t>(0.025 * rep.size())]),
                       std::max(om.posterior, rep[static_cast<std::size_t>(0.975 * rep.size()) - 1])};
    out.push_back(om);
  }
  return out;
}

OutsideMass empirical_outside_mass(const LaplaceFit& fit, const Problem& prob,
                                   const Eigen::MatrixXd& D0sq, double r, int M,
                                   std::uint64_t seed) {
  return empirical_outside_mass(fit, prob, D0sq, std::vector<double>{r}, M, seed).front();
}

std::vector<TailReport> tail_reports(const LaplaceFit& fit, const Problem& prob,
                                     const Eigen::MatrixXd& D0sq, double effdim,
                                     const std::vector<double>& radii, int M, std::uint64_t seed) {
  const auto masses = empirical_outside_mass(fit, prob, D0sq, radii, M, seed);
  std::vector<TailReport> out;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    TailReport t;
    t.r = radii[i];
    t.effdim = effdim;
    t.empirical = masses[i];
    const double tt = t.r - std::sqrt(effdim);
    t.gaussian_bound = tt >= 0.0 ? gaussian_tail(tt) : 1.0;
    const PosteriorTail pt = posterior_tail_bound(effdim, t.r);
    t.posterior_bound = pt.value;
    t.posterior_applicable = pt.applicable;
    t.gaussian_ok = t.empirical.gaussian - 3.0 * t.empirical.gaussian_se <= t.gaussian_bound;
    t.posterior_ok = !pt.applicable ||
                     t.empirical.posterior - 3.0 * t.empirical.posterior_se <= t.posterior_bound;
    out.push_back(t);
  }
  return out;
}

}  // namespace lapcert
