#pragma once

#include <Eigen/Dense>

#include "lapcert/model.hpp"

// Hot loops over observation rows, grid points and Monte-Carlo samples.
// `serial` is the reference; `parallel` is OpenMP over fixed row blocks whose
// partial results are combined in block order, so the answer does not depend
// on the thread count.
namespace lapcert::kernels {

inline constexpr Eigen::Index kBlock = 1024;

struct SampleInputs {
  const ExpFamily* fam;
  const Eigen::MatrixXd* R;       // n x p
  const Eigen::VectorXd* y;       // n
  const Eigen::VectorXd* prior;   // p, diagonal of G^2
  const Eigen::VectorXd* theta_hat;
  double f_hat;
  const Eigen::MatrixXd* LinvT;   // p x p, maps white noise to theta offsets
};

namespace serial {
double loglik_sum(const ExpFamily& fam, const Eigen::VectorXd& eta, const Eigen::VectorXd& y);
Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& R, const Eigen::VectorXd& w);
double cubic_form(const ExpFamily& fam, const Eigen::VectorXd& eta, const Eigen::VectorXd& Rv);
double max_whitened_row_norm(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& L);
double max_abs(const Eigen::VectorXd& v);
Eigen::VectorXd log_weights(const SampleInputs& in, const Eigen::MatrixXd& Z);
}  // namespace serial

namespace parallel {
double loglik_sum(const ExpFamily& fam, const Eigen::VectorXd& eta, const Eigen::VectorXd& y);
Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& R, const Eigen::VectorXd& w);
double cubic_form(const ExpFamily& fam, const Eigen::VectorXd& eta, const Eigen::VectorXd& Rv);
double max_whitened_row_norm(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& L);
double max_abs(const Eigen::VectorXd& v);
Eigen::VectorXd log_weights(const SampleInputs& in, const Eigen::MatrixXd& Z);
}  // namespace parallel

void set_threads(int n);
int max_threads();

}  // namespace lapcert::kernels
