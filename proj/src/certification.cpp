#include "lapcert/certification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lapcert/error.hpp"
#include "lapcert/kernels.hpp"
#include "lapcert/operators.hpp"
#include "lapcert/rng.hpp"

namespace lapcert {

namespace {

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& M, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success)
    throw LinearAlgebraError(std::string("Cholesky failed for ") + what);
  return llt.matrixL();
}

// L^{-1} M L^{-T}
Eigen::MatrixXd whiten(const Eigen::MatrixXd& L, const Eigen::MatrixXd& M) {
  const auto tri = L.triangularView<Eigen::Lower>();
  const Eigen::MatrixXd X = tri.solve(M);
  Eigen::MatrixXd W = tri.solve(X.transpose());
  return 0.5 * (W + W.transpose());
}

double lambda_max_sym(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double spectral_norm_sym(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

std::string WeightChoice::label() const {
  switch (kind) {
    case ChoiceKind::DG: return "DG";
    case ChoiceKind::identity_scaled: return "identity_scaled";
    case ChoiceKind::gamma0_family: return "gamma0_family";
  }
  return "?";
}

WeightChoice choice_DG(const LaplaceFit& fit) {
  WeightChoice c;
  c.kind = ChoiceKind::DG;
  c.D2 = fit.DG2;
  return c;
}

WeightChoice choice_identity(const LaplaceFit& fit) {
  WeightChoice c;
  c.kind = ChoiceKind::identity_scaled;
  const Eigen::Index p = fit.DG2.rows();
  const double a = alpha_of(Eigen::MatrixXd::Identity(p, p), fit.DG2);
  c.D2 = Eigen::MatrixXd::Identity(p, p) / (a * a);
  return c;
}

WeightChoice choice_gamma0(const LaplaceFit& fit, double gamma0) {
  // G^2 = DG2 - hess_L recovers the prior exponent's diagonal; gamma is implied.
  WeightChoice c;
  c.kind = ChoiceKind::gamma0_family;
  c.gamma0 = gamma0;
  c.D2 = fit.hess_L;
  const Eigen::Index p = fit.hess_L.rows();
  for (Eigen::Index k = 1; k <= p; ++k) {
    const double g0 = std::pow(static_cast<double>(k), 2.0 * gamma0);
    const double g = fit.DG2(k - 1, k - 1) - fit.hess_L(k - 1, k - 1);
    if (g0 > g * (1.0 + 1e-9))
      throw ParameterError("certification", "gamma0 = " + std::to_string(gamma0) + " exceeds the prior exponent");
    c.D2(k - 1, k - 1) += g0;
  }
  return c;
}

double alpha_of(const Eigen::MatrixXd& D2, const Eigen::MatrixXd& DG2) {
  const Eigen::MatrixXd L = cholesky_lower(DG2, "D_G^2");
  return std::sqrt(lambda_max_sym(whiten(L, D2)));
}

double effdim_of(const Eigen::MatrixXd& D2, const Eigen::MatrixXd& DG2) {
  const Eigen::MatrixXd L = cholesky_lower(DG2, "D_G^2");
  const Eigen::MatrixXd W = whiten(L, D2);
  return W.trace() / lambda_max_sym(W);
}

Tau3Geometry tau3_geometry(const Problem& prob, const Eigen::MatrixXd& D2) {
  const Eigen::MatrixXd L = cholesky_lower(D2, "D^2");
  Tau3Geometry g;
  g.A = kernels::parallel::max_whitened_row_norm(prob.Rfine, L);
  g.A_coarse = kernels::parallel::max_whitened_row_norm(prob.R, L);
  g.A = std::max(g.A, g.A_coarse);
  g.B = lambda_max_sym(whiten(L, prob.gram));
  g.grid_gap = g.A - g.A_coarse;
  return g;
}

double tau3_from_geometry(const LaplaceFit& fit, const Problem& prob, ChoiceKind kind,
                          const Tau3Geometry& g, double r) {
  const double K = fit.rq_sup + r * g.A;
  const double d3 = prob.fam.d3_envelope(K);
  if (d3 == 0.0) return 0.0;
  if (kind == ChoiceKind::identity_scaled) return d3 * prob.n * g.A * g.A * g.A;
  return d3 * g.A * g.B;
}

double tau3_certified(const LaplaceFit& fit, const Problem& prob, const WeightChoice& choice,
                      double r) {
  if (!(r > 0.0)) throw ParameterError("certification", "radius must be positive");
  return tau3_from_geometry(fit, prob, choice.kind, tau3_geometry(prob, choice.D2), r);
}

double tail_term(double effdim, double r) {
  const double d = r - 3.0 * std::sqrt(effdim);
  return 2.0 * std::exp(-d * d / 3.0);
}

Certificate certify(const LaplaceFit& fit, const Problem& prob, const WeightChoice& choice,
                    const CertifyOptions& opts) {
  Certificate c;
  c.alpha_raw = alpha_of(choice.D2, fit.DG2);
  c.choice = choice;
  c.choice.D2 = choice.D2 / (c.alpha_raw * c.alpha_raw);
  c.alpha = alpha_of(c.choice.D2, fit.DG2);
  c.effdim = effdim_of(c.choice.D2, fit.DG2);
  c.hessian_lb_by_construction =
      choice.kind == ChoiceKind::DG ||
      (choice.kind == ChoiceKind::gamma0_family && choice.gamma0 <= prob.gamma &&
       std::abs(c.alpha_raw - 1.0) <= 1e-8);
  c.geometry = tau3_geometry(prob, c.choice.D2);

  const Gamma0Star gs = gamma0_star(prob.n, opts.beta, prob.gamma);
  c.m = gs.m;
  c.m0star = gs.m0;
  c.gamma0star = gs.gamma0;
  const double g0 = choice.kind == ChoiceKind::gamma0_family ? choice.gamma0 : prob.gamma;
  const SSums ss = s_sums(prob.n, prob.p, opts.beta, prob.gamma, g0);
  c.S_dim = ss.S_dim;
  c.S_tau = ss.S_tau;

  const double sd = std::sqrt(c.effdim);
  const double r_lo = 3.0 * sd + 3.0;
  const double r_hi = std::max(opts.r_max_factor * sd, r_lo);
  std::vector<double> radii;
  for (int i = 0; i < opts.r_points; ++i)
    radii.push_back(r_lo * std::pow(r_hi / r_lo, static_cast<double>(i) / (opts.r_points - 1)));
  if (choice.kind == ChoiceKind::gamma0_family && ss.S_tau > 0.0) {
    const double rc = 1.0 / std::sqrt(ss.S_tau);
    if (rc >= r_lo) radii.push_back(rc);
  }

  bool have_feasible = false;
  double best_obj = std::numeric_limits<double>::infinity();
  double best_violation = std::numeric_limits<double>::infinity();
  const bool alpha_ok = std::abs(c.alpha - 1.0) <= 1e-8;
  for (double r : radii) {
    const double t3 = tau3_from_geometry(fit, prob, choice.kind, c.geometry, r);
    const double local = t3 * c.effdim;
    const double tail = tail_term(c.effdim, r);
    const bool feas = alpha_ok && r >= r_lo && r * t3 <= 0.5;
    const double obj = local + tail;
    bool take = false;
    if (feas) {
      take = !have_feasible || obj < best_obj;
      if (take) have_feasible = true;
    } else if (!have_feasible) {
      take = r * t3 < best_violation;
      if (take) best_violation = r * t3;
    }
    if (take) {
      if (feas) best_obj = obj;
      c.radius = r;
      c.tau3_sup = t3;
      c.local_term = local;
      c.tail_term = tail;
      c.tv_bound = obj;
      c.feasible = feas;
    }
  }
  return c;
}

SSums s_sums(double n, int p, double beta, double gamma, double gamma0) {
  if (!(n > 0) || p < 1 || !(beta > 0)) throw ParameterError("certification", "s_sums needs n, p, beta > 0");
  long double sdim = 0.0L, stau2 = 0.0L;
  const long double N = n;
  for (int k = 1; k <= p; ++k) {
    const long double lk = std::log(static_cast<long double>(k));
    const long double a = std::exp((2.0L * gamma0 + 2.0L * beta) * lk);
    const long double b = std::exp((2.0L * gamma + 2.0L * beta) * lk);
    sdim += (N + a) / (N + b);
    stau2 += 1.0L / (N + a);
  }
  return {static_cast<double>(sdim), static_cast<double>(std::sqrt(stau2))};
}

Gamma0Star gamma0_star(double n, double beta, double gamma) {
  if (!(2.0 * beta + 2.0 * gamma > 2.0))
    throw ParameterError("certification", "gamma0_star requires 2 beta + 2 gamma > 2");
  Gamma0Star g;
  g.m = std::pow(n, 1.0 / (2.0 * beta + 2.0 * gamma));
  g.gamma0 = gamma - 0.5 - 0.5 / g.m;
  g.m0 = std::pow(n, 1.0 / (2.0 * beta + 2.0 * g.gamma0));
  g.below_threshold = !(n > std::pow(beta + gamma - 1.0, -2.0 * beta - 2.0 * gamma));
  return g;
}

Comparison compare_choices(const LaplaceFit& fit, const Problem& prob, const CertifyOptions& opts) {
  Comparison cmp;
  cmp.g0 = gamma0_star(prob.n, opts.beta, prob.gamma);
  cmp.dg = certify(fit, prob, choice_DG(fit), opts);
  cmp.identity = certify(fit, prob, choice_identity(fit), opts);
  cmp.star = certify(fit, prob, choice_gamma0(fit, cmp.g0.gamma0), opts);
  cmp.ratio_dg = cmp.dg.tv_bound / cmp.star.tv_bound;
  cmp.ratio_identity = cmp.identity.tv_bound / cmp.star.tv_bound;
  return cmp;
}

double ortho_constant(const Eigen::MatrixXd& psi_rows, double lambda_exp) {
  const Eigen::Index n = psi_rows.rows(), p = psi_rows.cols();
  Eigen::MatrixXd Psi = psi_rows.transpose() * psi_rows;
  Psi.diagonal().array() -= static_cast<double>(n);
  Eigen::VectorXd s(p);
  for (Eigen::Index k = 1; k <= p; ++k) s(k - 1) = std::pow(static_cast<double>(k), -0.5 * lambda_exp);
  const Eigen::MatrixXd S = s.asDiagonal() * Psi * s.asDiagonal();
  return spectral_norm_sym(0.5 * (S + S.transpose()));
}

double ortho_constant(const EigenSystem& eig, int n, int p, double lambda_exp) {
  if (p > eig.K()) throw CapacityError("certification", "p exceeds eigenpair count");
  Eigen::MatrixXd V(n, p);
  for (int j = 1; j <= n; ++j)
    for (int k = 1; k <= p; ++k) V(j - 1, k - 1) = eig.psi_at(k, static_cast<double>(j) / n);
  return ortho_constant(V, lambda_exp);
}

Eigen::MatrixXd cosine_basis_values(const Eigen::VectorXd& xs, int p) {
  Eigen::MatrixXd V(xs.size(), p);
  const double pi = 3.14159265358979323846;
  for (Eigen::Index i = 0; i < xs.size(); ++i)
    for (int k = 1; k <= p; ++k) V(i, k - 1) = std::sqrt(2.0) * std::cos(pi * k * xs(i));
  return V;
}

TightnessResult tightness_probe(int n, int p, double beta, double gamma0) {
  TightnessResult res;
  Eigen::VectorXd scale(p), d2(p);
  for (int k = 1; k <= p; ++k) {
    scale(k - 1) = std::pow(static_cast<double>(k), -beta);
    d2(k - 1) = n * std::pow(static_cast<double>(k), -2.0 * beta) +
                std::pow(static_cast<double>(k), 2.0 * gamma0);
  }
  Eigen::VectorXd xs(n);
  for (int j = 1; j <= n; ++j) xs(j - 1) = static_cast<double>(j) / n;
  const Eigen::MatrixXd R = cosine_basis_values(xs, p) * scale.asDiagonal();
  const int fine = kSupGridRefine * n;
  Eigen::VectorXd xf(fine + 1);
  for (int i = 0; i <= fine; ++i) xf(i) = static_cast<double>(i) / fine;
  const Eigen::MatrixXd Rf = cosine_basis_values(xf, p) * scale.asDiagonal();

  const Eigen::VectorXd dinv = d2.cwiseSqrt().cwiseInverse();
  const double A = kernels::parallel::max_abs((Rf * dinv.asDiagonal()).rowwise().norm());
  const Eigen::MatrixXd gram = kernels::parallel::weighted_gram(R, Eigen::VectorXd::Ones(n));
  const double B = lambda_max_sym(dinv.asDiagonal() * gram * dinv.asDiagonal());
  res.upper = A * B;

  const double m0 = std::pow(static_cast<double>(n), 1.0 / (2.0 * beta + 2.0 * gamma0));
  res.m0bar = std::max(1, std::min(p, static_cast<int>(std::floor(m0))));
  Eigen::VectorXd v = Eigen::VectorXd::Zero(p);
  for (int k = 1; k <= res.m0bar; ++k)
    v(k - 1) = std::pow(static_cast<double>(k), beta) / std::sqrt(static_cast<double>(res.m0bar) * n);
  const double unit_norm = std::sqrt(d2.dot(v.cwiseProduct(v)));
  res.C_norm = 1.0 / unit_norm;
  v *= res.C_norm;
  res.witness_norm = std::sqrt(d2.dot(v.cwiseProduct(v)));
  res.lower = (R * v).cwiseAbs().array().cube().sum();
  res.ratio = res.lower / res.upper;
  res.identity_lower = R.col(0).cwiseAbs().array().cube().sum();
  return res;
}

OmegaDiagnostics omega_diagnostics(const LaplaceFit& fit, const Problem& prob,
                                   const WeightChoice& choice, double r, int samples,
                                   std::uint64_t seed) {
  if (samples < 1) throw ParameterError("certification", "samples must be >= 1");
  OmegaDiagnostics d;
  d.tau3_cert = tau3_certified(fit, prob, choice, r);
  const Eigen::MatrixXd L = cholesky_lower(choice.D2, "D^2");
  const auto triT = L.transpose().triangularView<Eigen::Upper>();
  const Eigen::MatrixXd H0 = hessian(prob, fit.theta_hat);
  const int p = prob.p;
  PhiloxStream rng(derive_seed(seed, 0x03E6A), 0);
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd w(p);
    for (int k = 0; k < p; ++k) w(k) = rng.normal();
    double radius = r;
    if (s % 2 == 1) radius = r * std::pow(rng.uniform(), 1.0 / p);
    w *= radius / w.norm();
    const Eigen::VectorXd u = triT.solve(w);  // ||D u|| = radius
    const Eigen::VectorXd theta = fit.theta_hat + u;
    const double q = 0.5 * u.dot(fit.DG2 * u);
    const double rem = f_value(prob, theta) - fit.f_hat - q;
    d.omega_est = std::max(d.omega_est, std::abs(rem) / (0.5 * radius * radius));
    const double w3 = spectral_norm_sym(whiten(L, hessian(prob, theta) - H0));
    d.omega3_est = std::max(d.omega3_est, w3);
    d.tau3_est = std::max(d.tau3_est, w3 / radius);
  }
  const double slack = 1e-9;
  d.chain_ok = d.omega_est <= (r / 3.0) * d.tau3_cert * (1 + slack) + slack &&
               d.omega3_est <= r * d.tau3_cert * (1 + slack) + slack &&
               d.tau3_est <= d.tau3_cert * (1 + slack) + slack;
  d.omega_le_third = d.omega_est <= 1.0 / 3.0;
  return d;
}

}  // namespace lapcert
