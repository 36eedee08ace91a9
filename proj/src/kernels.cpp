#include "lapcert/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace lapcert::kernels {

namespace {
inline Eigen::Index num_blocks(Eigen::Index n) { return (n + kBlock - 1) / kBlock; }

double f_at(const SampleInputs& in, const Eigen::VectorXd& theta, const Eigen::VectorXd& eta) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < eta.size(); ++j) acc += in.fam->h(eta(j)) - (*in.y)(j) * eta(j);
  return acc + 0.5 * in.prior->dot(theta.cwiseProduct(theta));
}
}  // namespace

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}
int max_threads() { return omp_get_max_threads(); }

namespace serial {

double loglik_sum(const ExpFamily& fam, const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < eta.size(); ++j) acc += fam.h(eta(j)) - y(j) * eta(j);
  return acc;
}

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& R, const Eigen::VectorXd& w) {
  const Eigen::Index p = R.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < R.rows(); ++j)
    for (Eigen::Index a = 0; a < p; ++a)
      for (Eigen::Index b = 0; b <= a; ++b) out(a, b) += w(j) * R(j, a) * R(j, b);
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index b = 0; b < a; ++b) out(b, a) = out(a, b);
  return out;
}

double cubic_form(const ExpFamily& fam, const Eigen::VectorXd& eta, const Eigen::VectorXd& Rv) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < eta.size(); ++j) acc += fam.h3(eta(j)) * Rv(j) * Rv(j) * Rv(j);
  return acc;
}

double max_whitened_row_norm(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& L) {
  double best = 0.0;
  const auto tri = L.triangularView<Eigen::Lower>();
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const Eigen::VectorXd z = tri.solve(rows.row(i).transpose());
    best = std::max(best, z.norm());
  }
  return best;
}

double max_abs(const Eigen::VectorXd& v) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) best = std::max(best, std::abs(v(i)));
  return best;
}

Eigen::VectorXd log_weights(const SampleInputs& in, const Eigen::MatrixXd& Z) {
  Eigen::VectorXd out(Z.cols());
  for (Eigen::Index m = 0; m < Z.cols(); ++m) {
    const Eigen::VectorXd theta = *in.theta_hat + (*in.LinvT) * Z.col(m);
    const Eigen::VectorXd eta = (*in.R) * theta;
    out(m) = -f_at(in, theta, eta) + in.f_hat + 0.5 * Z.col(m).squaredNorm();
  }
  return out;
}

}  // namespace serial

namespace parallel {

double loglik_sum(const ExpFamily& fam, const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  const Eigen::Index nb = num_blocks(eta.size());
  std::vector<double> part(nb, 0.0);
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < nb; ++b) {
    const Eigen::Index lo = b * kBlock, hi = std::min(eta.size(), lo + kBlock);
    double acc = 0.0;
    for (Eigen::Index j = lo; j < hi; ++j) acc += fam.h(eta(j)) - y(j) * eta(j);
    part[b] = acc;
  }
  double acc = 0.0;
  for (double v : part) acc += v;
  return acc;
}

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& R, const Eigen::VectorXd& w) {
  const Eigen::Index p = R.cols();
  const Eigen::Index nb = num_blocks(R.rows());
  std::vector<Eigen::MatrixXd> part(nb);
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < nb; ++b) {
    const Eigen::Index lo = b * kBlock, len = std::min(R.rows() - lo, kBlock);
    const auto Rb = R.middleRows(lo, len);
    part[b] = Rb.transpose() * w.segment(lo, len).asDiagonal() * Rb;
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, p);
  for (const auto& m : part) out += m;
  return 0.5 * (out + out.transpose());
}

double cubic_form(const ExpFamily& fam, const Eigen::VectorXd& eta, const Eigen::VectorXd& Rv) {
  const Eigen::Index nb = num_blocks(eta.size());
  std::vector<double> part(nb, 0.0);
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < nb; ++b) {
    const Eigen::Index lo = b * kBlock, hi = std::min(eta.size(), lo + kBlock);
    double acc = 0.0;
    for (Eigen::Index j = lo; j < hi; ++j) acc += fam.h3(eta(j)) * Rv(j) * Rv(j) * Rv(j);
    part[b] = acc;
  }
  double acc = 0.0;
  for (double v : part) acc += v;
  return acc;
}

double max_whitened_row_norm(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& L) {
  const Eigen::Index nb = num_blocks(rows.rows());
  std::vector<double> part(nb, 0.0);
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < nb; ++b) {
    const Eigen::Index lo = b * kBlock, len = std::min(rows.rows() - lo, kBlock);
    // Solve L Z = R_b^T for the whole block at once.
    const Eigen::MatrixXd Z =
        L.triangularView<Eigen::Lower>().solve(rows.middleRows(lo, len).transpose());
    part[b] = Z.colwise().norm().maxCoeff();
  }
  return *std::max_element(part.begin(), part.end());
}

double max_abs(const Eigen::VectorXd& v) {
  const Eigen::Index nb = num_blocks(v.size());
  std::vector<double> part(nb, 0.0);
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < nb; ++b) {
    const Eigen::Index lo = b * kBlock, len = std::min(v.size() - lo, kBlock);
    part[b] = v.segment(lo, len).cwiseAbs().maxCoeff();
  }
  return part.empty() ? 0.0 : *std::max_element(part.begin(), part.end());
}

Eigen::VectorXd log_weights(const SampleInputs& in, const Eigen::MatrixXd& Z) {
  Eigen::VectorXd out(Z.cols());
  const Eigen::MatrixXd Theta = ((*in.LinvT) * Z).colwise() + *in.theta_hat;
#pragma omp parallel for schedule(static)
  for (Eigen::Index m = 0; m < Z.cols(); ++m) {
    const Eigen::VectorXd theta = Theta.col(m);
    const Eigen::VectorXd eta = (*in.R) * theta;
    out(m) = -f_at(in, theta, eta) + in.f_hat + 0.5 * Z.col(m).squaredNorm();
  }
  return out;
}

}  // namespace parallel

}  // namespace lapcert::kernels
