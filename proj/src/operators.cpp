#include "lapcert/operators.hpp"

#include <cmath>
#include <string>

#include "lapcert/eigensolver.hpp"
#include "lapcert/error.hpp"

namespace lapcert {

namespace {
constexpr int kPositivitySamples = 4097;

Eigen::VectorXd cumulative_trapezoid(const Eigen::VectorXd& v, double h) {
  Eigen::VectorXd out(v.size());
  out(0) = 0.0;
  for (Eigen::Index i = 1; i < v.size(); ++i) out(i) = out(i - 1) + 0.5 * h * (v(i - 1) + v(i));
  return out;
}
}  // namespace

CoefficientPair CoefficientPair::make(std::vector<double> a_coeffs, std::vector<double> b_coeffs) {
  for (double c : a_coeffs)
    if (!std::isfinite(c)) throw OperatorSpecError("non-finite coefficient in a");
  for (double c : b_coeffs)
    if (!std::isfinite(c)) throw OperatorSpecError("non-finite coefficient in b");
  CoefficientPair s;
  s.a = Polynomial(std::move(a_coeffs));
  s.b = Polynomial(std::move(b_coeffs));
  if (s.a.degree() > kMaxPolynomialDegree || s.b.degree() > kMaxPolynomialDegree)
    throw OperatorSpecError("polynomial degree exceeds " + std::to_string(kMaxPolynomialDegree));
  s.da = s.a.derivative();
  s.dda = s.da.derivative();
  s.db = s.b.derivative();
  double amin = std::min(s.a(0.0), s.a(1.0));
  for (int i = 0; i < kPositivitySamples; ++i)
    amin = std::min(amin, s.a(static_cast<double>(i) / (kPositivitySamples - 1)));
  if (!(amin > 0.0))
    throw OperatorSpecError("a(x) must be positive on [0,1]; sampled minimum " + std::to_string(amin));
  s.a_min = amin;
  return s;
}

FunctionGrid::FunctionGrid(Eigen::VectorXd v) : values(std::move(v)) {
  if (values.size() < 2) throw OperatorSpecError("function grid needs at least two samples");
  if (!values.allFinite()) throw OperatorSpecError("function grid has non-finite samples");
}

double FunctionGrid::at(double x) const {
  const int n = N();
  const double s = std::clamp(x, 0.0, 1.0) * n;
  int i = static_cast<int>(std::floor(s));
  if (i >= n) i = n - 1;
  const double w = s - i;
  return (1.0 - w) * values(i) + w * values(i + 1);
}

FunctionGrid sample(const Polynomial& poly, int N) {
  Eigen::VectorXd v(N + 1);
  for (int i = 0; i <= N; ++i) v(i) = poly(static_cast<double>(i) / N);
  return FunctionGrid(std::move(v));
}

Eigen::VectorXd trapezoid_weights(int N) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(N + 1, 1.0 / N);
  w(0) *= 0.5;
  w(N) *= 0.5;
  return w;
}

double trapezoid(const FunctionGrid& f) { return trapezoid_weights(f.N()).dot(f.values); }

double inner(const FunctionGrid& f, const FunctionGrid& g) {
  if (f.N() != g.N()) throw OperatorSpecError("grid size mismatch in inner product");
  return trapezoid_weights(f.N()).dot(f.values.cwiseProduct(g.values));
}

FunctionGrid cumulative_antiderivative(const CoefficientPair& spec, int N) {
  if (N < 64) throw OperatorSpecError("grid size must be at least 64");
  Eigen::VectorXd ratio(N + 1);
  for (int i = 0; i <= N; ++i) {
    const double x = static_cast<double>(i) / N;
    const double a = spec.a(x);
    if (!(a > 0.0)) throw OperatorSpecError("non-positive a at x=" + std::to_string(x));
    ratio(i) = spec.b(x) / a;
  }
  return FunctionGrid(cumulative_trapezoid(ratio, 1.0 / N));
}

FunctionGrid apply_R(const CoefficientPair& spec, const FunctionGrid& f) {
  const int N = f.N();
  const Eigen::VectorXd C = cumulative_antiderivative(spec, N).values;
  Eigen::VectorXd integrand(N + 1);
  for (int i = 0; i <= N; ++i) integrand(i) = std::exp(C(i)) * f.values(i) / spec.a(f.x(i));
  Eigen::VectorXd g = cumulative_trapezoid(integrand, f.h());
  for (int i = 0; i <= N; ++i) g(i) *= std::exp(-C(i));
  return FunctionGrid(std::move(g));
}

FunctionGrid apply_RT(const CoefficientPair& spec, const FunctionGrid& h) {
  const int N = h.N();
  const double dx = h.h();
  const Eigen::VectorXd C = cumulative_antiderivative(spec, N).values;
  Eigen::VectorXd tail(N + 1);
  tail(N) = 0.0;
  double prev = std::exp(-C(N)) * h.values(N);
  for (int i = N - 1; i >= 0; --i) {
    const double cur = std::exp(-C(i)) * h.values(i);
    tail(i) = tail(i + 1) + 0.5 * dx * (prev + cur);
    prev = cur;
  }
  for (int i = 0; i <= N; ++i) tail(i) *= std::exp(C(i)) / spec.a(h.x(i));
  return FunctionGrid(std::move(tail));
}

Eigen::MatrixXd discretize_R(const CoefficientPair& spec, int N) {
  if (N > 4096) throw CapacityError("operators", "discretize_R limited to N <= 4096");
  const Eigen::VectorXd C = cumulative_antiderivative(spec, N).values;
  const double h = 1.0 / N;
  Eigen::VectorXd col_scale(N + 1);
  for (int j = 0; j <= N; ++j) col_scale(j) = std::exp(C(j)) / spec.a(static_cast<double>(j) / N);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N + 1, N + 1);
  for (int i = 1; i <= N; ++i) {
    const double row_scale = std::exp(-C(i));
    for (int j = 0; j <= i; ++j) {
      const double w = (j == 0 || j == i) ? 0.5 * h : h;
      M(i, j) = row_scale * w * col_scale(j);
    }
  }
  return M;
}

Eigen::MatrixXd basis_rows(const EigenSystem& eig, const Eigen::VectorXd& xs, int p) {
  if (p > eig.K())
    throw CapacityError("operators", "p=" + std::to_string(p) + " exceeds eigenpair count " +
                                         std::to_string(eig.K()));
  Eigen::MatrixXd out(xs.size(), p);
  const int N = eig.N;
  for (Eigen::Index j = 0; j < xs.size(); ++j) {
    const double s = std::clamp(xs(j), 0.0, 1.0) * N;
    int i = static_cast<int>(std::floor(s));
    if (i >= N) i = N - 1;
    const double w = s - i;
    for (int k = 0; k < p; ++k)
      out(j, k) = std::sqrt(eig.lambdas[k]) * ((1.0 - w) * eig.psi(i, k) + w * eig.psi(i + 1, k));
  }
  return out;
}

DesignMatrix assemble_design(const EigenSystem& eig, int n, int p) {
  if (n < 1) throw CapacityError("operators", "n must be positive");
  Eigen::VectorXd xs(n);
  for (int j = 0; j < n; ++j) xs(j) = static_cast<double>(j + 1) / n;
  DesignMatrix d;
  d.rows = basis_rows(eig, xs, p);
  d.n = n;
  d.p = p;
  return d;
}

FunctionGrid phi_from_psi(const CoefficientPair& spec, const EigenSystem& eig, int k) {
  if (k < 1 || k > eig.K()) throw CapacityError("operators", "eigen index out of range");
  FunctionGrid psi(eig.psi.col(k - 1));
  FunctionGrid g = apply_RT(spec, psi);
  g.values /= std::sqrt(eig.lambdas[k - 1]);
  return g;
}

}  // namespace lapcert
