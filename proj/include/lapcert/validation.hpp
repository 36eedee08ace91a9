#pragma once

#include <cstdint>
#include <string>

#include "lapcert/posterior.hpp"

namespace lapcert {

enum class TVMethod { quadrature, importance };

struct TVEstimate {
  TVMethod method = TVMethod::importance;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double ess = 0.0;
  std::string grid_spec;
  bool low_ess = false;
};

std::string to_string(TVMethod m);

inline constexpr double kQuadratureHalfWidth = 10.0;
inline constexpr int kMaxImportanceDim = 30;
// Round-off slack when comparing an estimate against a bound that is exactly 0.
inline constexpr double kDominanceFloor = 1e-12;

TVEstimate tv_quadrature(const LaplaceFit& fit, const Problem& prob, int per_axis);
TVEstimate tv_importance(const LaplaceFit& fit, const Problem& prob, int M, std::uint64_t seed);

}  // namespace lapcert
