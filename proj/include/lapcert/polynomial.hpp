#pragma once

#include <vector>

namespace lapcert {

// Real polynomial with ascending-degree coefficients.
class Polynomial {
 public:
  Polynomial() : c_{0.0} {}
  explicit Polynomial(std::vector<double> coeffs);

  double operator()(double x) const;
  Polynomial derivative() const;
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<double>& coeffs() const { return c_; }

 private:
  std::vector<double> c_;
};

}  // namespace lapcert
