#include "lapcert/validation.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "lapcert/concentration.hpp"
#include "lapcert/error.hpp"
#include "lapcert/kernels.hpp"
#include "lapcert/rng.hpp"

namespace lapcert {

std::string to_string(TVMethod m) { return m == TVMethod::quadrature ? "quadrature" : "importance"; }

namespace {

Eigen::MatrixXd whitening_map(const LaplaceFit& fit) {
  Eigen::LLT<Eigen::MatrixXd> llt(fit.DG2);
  if (llt.info() != Eigen::Success) throw LinearAlgebraError("D_G^2 not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::Index p = L.rows();
  return L.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
}

// TV on a tensor grid in whitened coordinates z, theta = theta_hat + L^{-T} z.
// The Jacobian is constant and cancels after normalisation.
double tv_on_grid(const LaplaceFit& fit, const Problem& prob, const Eigen::MatrixXd& LinvT,
                  int per_axis) {
  const int p = prob.p;
  const double hw = kQuadratureHalfWidth;
  const double dz = 2.0 * hw / (per_axis - 1);
  long long total = 1;
  for (int k = 0; k < p; ++k) total *= per_axis;
  Eigen::MatrixXd Z(p, total);
  Eigen::VectorXd wts(total);
  for (long long idx = 0; idx < total; ++idx) {
    long long rem = idx;
    double w = 1.0;
    for (int k = 0; k < p; ++k) {
      const int i = static_cast<int>(rem % per_axis);
      rem /= per_axis;
      Z(k, idx) = -hw + i * dz;
      if (i == 0 || i == per_axis - 1) w *= 0.5;
    }
    wts(idx) = w;
  }
  kernels::SampleInputs in{&prob.fam, &prob.R, &prob.y, &prob.prior, &fit.theta_hat, fit.f_hat,
                           &LinvT};
  // log(p_f / gamma_f) up to a constant, and log gamma_f.
  const Eigen::VectorXd logratio = kernels::parallel::log_weights(in, Z);
  const Eigen::VectorXd loggauss = -0.5 * Z.colwise().squaredNorm().transpose();
  const Eigen::VectorXd logpost = logratio + loggauss;
  const double mp = logpost.maxCoeff(), mg = loggauss.maxCoeff();
  const Eigen::VectorXd post = (logpost.array() - mp).exp().matrix();
  const Eigen::VectorXd gauss = (loggauss.array() - mg).exp().matrix();
  const double zp = wts.dot(post), zg = wts.dot(gauss);
  return 0.5 * wts.dot((post / zp - gauss / zg).cwiseAbs());
}

}  // namespace

TVEstimate tv_quadrature(const LaplaceFit& fit, const Problem& prob, int per_axis) {
  if (prob.p > 3) throw CapacityError("validation", "quadrature TV limited to p <= 3");
  if (per_axis < 64) throw ParameterError("validation", "per_axis must be at least 64");
  const Eigen::MatrixXd LinvT = whitening_map(fit);
  const double coarse = tv_on_grid(fit, prob, LinvT, per_axis);
  const double fine = tv_on_grid(fit, prob, LinvT, 2 * per_axis);
  TVEstimate e;
  e.method = TVMethod::quadrature;
  e.value = std::clamp(fine, 0.0, 1.0);
  const double d = std::abs(fine - coarse);
  e.ci_low = std::max(0.0, e.value - d);
  e.ci_high = std::min(1.0, e.value + d);
  e.grid_spec = std::to_string(per_axis) + "/" + std::to_string(2 * per_axis) + " per axis in +-" +
                std::to_string(static_cast<int>(kQuadratureHalfWidth)) + " sd whitened box";
  return e;
}

TVEstimate tv_importance(const LaplaceFit& fit, const Problem& prob, int M, std::uint64_t seed) {
  if (M < 10000) throw ParameterError("validation", "importance TV needs M >= 10000");
  if (prob.p > kMaxImportanceDim)
    throw CapacityError("validation", "importance TV refused for p > 30 (weights degenerate)");
  const Eigen::MatrixXd LinvT = whitening_map(fit);
  const Eigen::MatrixXd Z = white_noise(prob.p, M, seed, 0x7F1C);
  kernels::SampleInputs in{&prob.fam, &prob.R, &prob.y, &prob.prior, &fit.theta_hat, fit.f_hat,
                           &LinvT};
  const Eigen::VectorXd logw = kernels::parallel::log_weights(in, Z);
  const double mx = logw.maxCoeff();
  const Eigen::VectorXd w = (logw.array() - mx).exp().matrix();
  const double mean = w.mean();

  TVEstimate e;
  e.method = TVMethod::importance;
  e.value = std::clamp(0.5 * ((w / mean).array() - 1.0).abs().mean(), 0.0, 1.0);
  e.ess = w.sum() * w.sum() / w.squaredNorm();
  e.low_ess = e.ess < 100.0;

  std::vector<double> reps(kBootstrapResamples);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < kBootstrapResamples; ++b) {
    PhiloxStream rng(derive_seed(seed, 0xB0A7), static_cast<std::uint64_t>(b));
    std::vector<int> idx(M);
    double s = 0.0;
    for (int& i : idx) {
      i = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(M));
      s += w(i);
    }
    const double mb = s / M;
    double acc = 0.0;
    for (int i : idx) acc += std::abs(w(i) / mb - 1.0);
    reps[b] = std::clamp(0.5 * acc / M, 0.0, 1.0);
  }
  std::sort(reps.begin(), reps.end());
  e.ci_low = std::min(e.value, reps[static_cast<std::size_t>(0.025 * kBootstrapResamples)]);
  e.ci_high = std::max(e.value, reps[static_cast<std::size_t>(0.975 * kBootstrapResamples) - 1]);
  return e;
}

}  // namespace lapcert
