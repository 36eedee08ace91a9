#include "lapcert/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>

#include "lapcert/error.hpp"

namespace lapcert {

namespace {

struct Trajectory {
  Eigen::VectorXd u, du;
};

inline int sgn(double v) { return (v > 0.0) - (v < 0.0); }

// Classical RK4 for y = (u, u'), u'' = (Q - mu) u.  When traj is non-null the
// node values are stored.
ShotResult integrate(const LiouvilleForm& form, double mu, Trajectory* traj) {
  const int n = form.steps;
  const double h = form.dt();
  const double qmin = form.Q.minCoeff();
  if (h * std::sqrt(std::max(mu - qmin, 0.0)) > 1.0)
    throw SolverError("t-grid too coarse for mu=" + std::to_string(mu) + "; increase N");
  double u = 0.0, v = 1.0;
  if (traj) {
    traj->u.resize(n + 1);
    traj->du.resize(n + 1);
    traj->u(0) = u;
    traj->du(0) = v;
  }
  int zeros = 0;
  int last_sign = 1;
  for (int i = 0; i < n; ++i) {
    const double q0 = form.Q(2 * i) - mu;
    const double qh = form.Q(2 * i + 1) - mu;
    const double q1 = form.Q(2 * i + 2) - mu;
    const double k1u = v, k1v = q0 * u;
    const double k2u = v + 0.5 * h * k1v, k2v = qh * (u + 0.5 * h * k1u);
    const double k3u = v + 0.5 * h * k2v, k3v = qh * (u + 0.5 * h * k2u);
    const double k4u = v + h * k3v, k4v = q1 * (u + h * k3u);
    u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if (traj) {
      traj->u(i + 1) = u;
      traj->du(i + 1) = v;
    }
    const int s = sgn(u);
    if (s != 0 && s != last_sign) {
      ++zeros;
      last_sign = s;
    }
  }
  ShotResult r;
  r.u_T = u;
  r.du_T = v;
  // Zeros strictly inside (0,T): a sign change landing exactly on the final
  // node is still interior to the last step, so the count stands.
  r.interior_zeros = zeros;
  const double theta_bc = 0.5 * std::numbers::pi + std::atan(form.c2 / form.c1);
  double phi;
  if (u == 0.0) {
    phi = std::numbers::pi;
  } else {
    phi = std::atan2(std::abs(u), v * sgn(u));
  }
  r.count_below = zeros + (phi > theta_bc ? 1 : 0);
  return r;
}

struct Bracket {
  double lo, hi;
};

void hermite(double h, double s, double y0, double d0, double y1, double d1, double& y) {
  const double s2 = s * s, s3 = s2 * s;
  y = (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1 +
      (s3 - s2) * h * d1;
}

}  // namespace

LiouvilleForm liouville_transform(const CoefficientPair& spec, int N) {
  if (N < 64) throw SolverError("grid size must be at least 64");
  LiouvilleForm f;
  f.steps = N;
  Eigen::VectorXd inv_a(N + 1);
  for (int i = 0; i <= N; ++i) inv_a(i) = 1.0 / spec.a(static_cast<double>(i) / N);
  Eigen::VectorXd t(N + 1);
  t(0) = 0.0;
  for (int i = 1; i <= N; ++i) t(i) = t(i - 1) + 0.5 / N * (inv_a(i - 1) + inv_a(i));
  f.T = t(N);
  f.t_of_x = FunctionGrid(t);

  const int M = 2 * N;
  f.x_of_t.resize(M + 1);
  f.Q.resize(M + 1);
  int cell = 0;
  for (int m = 0; m <= M; ++m) {
    const double tm = f.T * static_cast<double>(m) / M;
    while (cell < N - 1 && t(cell + 1) < tm) ++cell;
    const double w = std::clamp((tm - t(cell)) / (t(cell + 1) - t(cell)), 0.0, 1.0);
    const double x = (cell + w) / N;
    f.x_of_t(m) = x;
    const double a = spec.a(x), da = spec.da(x), dda = spec.dda(x);
    const double b = spec.b(x), db = spec.db(x);
    f.Q(m) = b * b - da * b - a * db + 0.25 * da * da + 0.5 * a * dda;
  }
  f.x_of_t(0) = 0.0;
  f.x_of_t(M) = 1.0;
  f.c1 = 1.0;
  f.c2 = spec.b(1.0) - 0.5 * spec.da(1.0);
  f.Q_sup = f.Q.cwiseAbs().maxCoeff();
  return f;
}

ShotResult shoot(const LiouvilleForm& form, double mu) { return integrate(form, mu, nullptr); }

double boundary_functional(const LiouvilleForm& form, double mu) {
  const ShotResult r = shoot(form, mu);
  return form.c1 * r.du_T + form.c2 * r.u_T;
}

int interior_sign_changes(const Eigen::VectorXd& v) {
  int changes = 0;
  int last = 0;
  for (Eigen::Index i = 1; i + 1 < v.size(); ++i) {
    const int s = sgn(v(i));
    if (s == 0) continue;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

double EigenSystem::psi_at(int k, double x) const {
  const double s = std::clamp(x, 0.0, 1.0) * N;
  int i = static_cast<int>(std::floor(s));
  if (i >= N) i = N - 1;
  const double w = s - i;
  return (1.0 - w) * psi(i, k - 1) + w * psi(i + 1, k - 1);
}

EigenSystem solve_eigs(const LiouvilleForm& form, const CoefficientPair& spec, int K, int N,
                       const SolveOptions& opts) {
  if (K < 1) throw SolverError("K must be at least 1");
  if (N < 1024) throw SolverError("N must be at least 1024");
  if (form.steps != N) throw SolverError("Liouville form grid does not match N");
  const double pi = std::numbers::pi;
  const double T = form.T;

  // Scan grid: geometric below the first asymptotic seed, four points per
  // asymptotic gap above it, extended until K eigenvalues are enclosed.
  std::vector<double> grid{0.0};
  const auto seed = [&](int k) { return std::pow((k - 0.5) * pi / T, 2); };
  const double s1 = seed(1);
  for (int i = 0; i < 16; ++i) grid.push_back(s1 * std::pow(2.0, -8.0 + 0.5 * i));
  for (int k = 1; k <= K + 1; ++k)
    for (int j = 0; j < 4; ++j) grid.push_back(seed(k) + 0.25 * j * (seed(k + 1) - seed(k)));
  grid.push_back(seed(K + 2));
  std::vector<int> counts(grid.size());
#pragma omp parallel for schedule(dynamic) if (opts.parallel)
  for (std::size_t i = 0; i < grid.size(); ++i) counts[i] = shoot(form, grid[i]).count_below;
  const double step = seed(K + 2) - seed(K + 1);
  for (int extra = 0; counts.back() < K; ++extra) {
    if (extra > 64)
      throw SolverError("bracket exhaustion: scan window missed eigenvalue index " +
                        std::to_string(counts.back() + 1));
    grid.push_back(grid.back() + step);
    counts.push_back(shoot(form, grid.back()).count_below);
  }
  for (std::size_t i = 1; i < counts.size(); ++i)
    if (counts[i] < counts[i - 1])
      throw SolverError("non-monotone oscillation count at mu=" + std::to_string(grid[i]));

  std::vector<Bracket> brackets(K);
  for (int k = 1; k <= K; ++k) {
    auto it = std::find_if(counts.begin(), counts.end(), [k](int c) { return c >= k; });
    if (it == counts.end() || it == counts.begin())
      throw SolverError("bracket exhaustion for eigenvalue index " + std::to_string(k));
    const std::size_t i = static_cast<std::size_t>(it - counts.begin());
    brackets[k - 1] = {grid[i - 1], grid[i]};
  }

  EigenSystem es;
  es.N = N;
  es.T = T;
  es.Q_sup = form.Q_sup;
  es.lambdas.assign(K, 0.0);
  es.psi.resize(N + 1, K);
  es.dpsi.resize(N + 1, K);
  es.sup_norms.assign(K, 0.0);
  es.deriv_sup_norms.assign(K, 0.0);
  es.vk.assign(K, {});
  std::vector<std::string> failures(K);

  Eigen::VectorXd a_x(N + 1), da_x(N + 1);
  for (int i = 0; i <= N; ++i) {
    a_x(i) = spec.a(static_cast<double>(i) / N);
    da_x(i) = spec.da(static_cast<double>(i) / N);
  }
  const Eigen::VectorXd wx = trapezoid_weights(N);
  const double h = form.dt();

#pragma omp parallel for schedule(dynamic) if (opts.parallel)
  for (int k = 1; k <= K; ++k) {
    double lo = brackets[k - 1].lo, hi = brackets[k - 1].hi;
    while (hi - lo > opts.rel_tol * hi) {
      const double mid = 0.5 * (lo + hi);
      if (shoot(form, mid).count_below >= k)
        hi = mid;
      else
        lo = mid;
    }
    const double mu = 0.5 * (lo + hi);
    Trajectory tr;
    const ShotResult r = integrate(form, mu, &tr);
    if (r.interior_zeros != k - 1) {
      failures[k - 1] = "eigenfunction " + std::to_string(k) + " has " +
                        std::to_string(r.interior_zeros) + " interior zeros";
      continue;
    }
    Eigen::VectorXd psi(N + 1), dpsi(N + 1);
    for (int i = 0; i <= N; ++i) {
      const double t = form.t_of_x.values(i);
      int j = std::min(static_cast<int>(t / h), N - 1);
      const double s = std::clamp((t - j * h) / h, 0.0, 1.0);
      const double dd0 = (form.Q(2 * j) - mu) * tr.u(j);
      const double dd1 = (form.Q(2 * j + 2) - mu) * tr.u(j + 1);
      double u, du;
      hermite(h, s, tr.u(j), tr.du(j), tr.u(j + 1), tr.du(j + 1), u);
      hermite(h, s, tr.du(j), dd0, tr.du(j + 1), dd1, du);
      const double ia = 1.0 / std::sqrt(a_x(i));
      psi(i) = u * ia;
      dpsi(i) = (du - 0.5 * da_x(i) * u) * ia * ia * ia;
    }
    psi(0) = 0.0;
    const double scale = 1.0 / std::sqrt(wx.dot(psi.cwiseProduct(psi)));
    psi *= scale;
    dpsi *= scale;
    es.lambdas[k - 1] = 1.0 / mu;
    es.psi.col(k - 1) = psi;
    es.dpsi.col(k - 1) = dpsi;
    es.sup_norms[k - 1] = psi.cwiseAbs().maxCoeff();
    es.deriv_sup_norms[k - 1] = dpsi.cwiseAbs().maxCoeff();
    const Eigen::VectorXd wt = trapezoid_weights(N) * T;
    es.vk[k - 1] = {tr.u.cwiseAbs().maxCoeff(), tr.du.cwiseAbs().maxCoeff(),
                    std::sqrt(wt.dot(tr.u.cwiseProduct(tr.u)))};
  }
  for (const auto& f : failures)
    if (!f.empty()) throw SolverError("oscillation check failed: " + f);
  for (int k = 1; k < K; ++k)
    if (!(es.lambdas[k] < es.lambdas[k - 1]) || !(es.lambdas[k] > 0.0))
      throw SolverError("eigenvalues not strictly decreasing at index " + std::to_string(k + 1));
  return es;
}

EigenSystem solve_eigs(const CoefficientPair& spec, int K, int N, const SolveOptions& opts) {
  return solve_eigs(liouville_transform(spec, N), spec, K, N, opts);
}

EigenSystem svd_oracle(const CoefficientPair& spec, int N, int K) {
  const Eigen::MatrixXd M = discretize_R(spec, N);
  const Eigen::VectorXd w = trapezoid_weights(N);
  const Eigen::VectorXd ws = w.cwiseSqrt();
  const Eigen::MatrixXd A = ws.asDiagonal() * M * ws.cwiseInverse().asDiagonal();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(N + 1, N + 1);
  S.selfadjointView<Eigen::Lower>().rankUpdate(A);
  S = S.selfadjointView<Eigen::Lower>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S);
  if (solver.info() != Eigen::Success) throw SolverError("SVD oracle eigen decomposition failed");
  EigenSystem es;
  es.N = N;
  es.lambdas.resize(K);
  es.psi.resize(N + 1, K);
  es.dpsi.resize(N + 1, K);
  es.sup_norms.resize(K);
  es.deriv_sup_norms.resize(K);
  es.vk.assign(K, {});
  for (int k = 0; k < K; ++k) {
    const Eigen::Index col = N - k;
    es.lambdas[k] = solver.eigenvalues()(col);
    Eigen::VectorXd psi = solver.eigenvectors().col(col).cwiseQuotient(ws);
    psi /= std::sqrt(w.dot(psi.cwiseProduct(psi)));
    if (psi(1) < 0.0) psi = -psi;
    Eigen::VectorXd d(N + 1);
    d(0) = (psi(1) - psi(0)) * N;
    d(N) = (psi(N) - psi(N - 1)) * N;
    for (int i = 1; i < N; ++i) d(i) = 0.5 * (psi(i + 1) - psi(i - 1)) * N;
    es.psi.col(k) = psi;
    es.dpsi.col(k) = d;
    es.sup_norms[k] = psi.cwiseAbs().maxCoeff();
    es.deriv_sup_norms[k] = d.cwiseAbs().maxCoeff();
  }
  return es;
}

EigDiagnostics eig_diagnostics(const EigenSystem& eig) {
  EigDiagnostics d;
  d.c_l2_min = std::numeric_limits<double>::infinity();
  const double thresh = 2.0 * eig.T * eig.Q_sup;
  for (int k = 1; k <= eig.K(); ++k) {
    EigDiagnostics::Row r;
    r.k = k;
    r.lambda = eig.lambdas[k - 1];
    r.psi_sup = eig.sup_norms[k - 1];
    r.dpsi_sup_over_k = eig.deriv_sup_norms[k - 1] / k;
    const VkDiag& v = eig.vk[k - 1];
    r.v_sup = v.sup;
    r.v_deriv_sup = v.deriv_sup;
    r.v_l2 = v.l2;
    r.above_threshold = 1.0 / std::sqrt(r.lambda) > thresh;
    if (r.above_threshold) {
      if (d.k_star == 0) d.k_star = k;
      r.v_sup_ok = v.sup <= 2.0 * std::sqrt(r.lambda);
      r.v_deriv_ok = v.deriv_sup <= 2.0;
      if (!r.v_sup_ok || !r.v_deriv_ok) ++d.violations;
      d.c_l2_min = std::min(d.c_l2_min, v.l2 / std::sqrt(r.lambda));
    }
    d.rows.push_back(r);
  }
  if (!std::isfinite(d.c_l2_min)) d.c_l2_min = 0.0;
  return d;
}

std::string eigen_cache_key(const CoefficientPair& spec, int N, int K) {
  std::string canon = "a:";
  char buf[64];
  for (double c : spec.a.coeffs()) {
    std::snprintf(buf, sizeof buf, "%.17g,", c);
    canon += buf;
  }
  canon += ";b:";
  for (double c : spec.b.coeffs()) {
    std::snprintf(buf, sizeof buf, "%.17g,", c);
    canon += buf;
  }
  canon += ";N:" + std::to_string(N) + ";K:" + std::to_string(K);
  std::uint64_t hsh = 1469598103934665603ULL;
  for (unsigned char ch : canon) {
    hsh ^= ch;
    hsh *= 1099511628211ULL;
  }
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hsh));
  return buf;
}

}  // namespace lapcert
