#pragma once

// mu_c(x) = max(||grad f(x)||^{3/2}, (-lambda_min(hess f(x)))^3 / c^{3/2}).
// mu_c(x) <= eps^{3/2} certifies an (eps, c)-approximate second-order
// local minimum.

#include <algorithm>
#include <cmath>

#include "hcn/core.hpp"
#include "hcn/problems.hpp"

namespace hcn {

struct StationarityMeasure {
  double value = 0.0;
  double grad_part = 0.0;
  double eig_part = 0.0;  // negative when the Hessian is positive definite
};

inline StationarityMeasure stationarity_from(const Vector& grad, const Matrix& hess, double c) {
  if (!(c > 0.0)) throw ConfigError("mu_measure: c must be positive");
  StationarityMeasure out;
  out.grad_part = std::pow(grad.norm(), 1.5);
  const double neg = -min_eigenvalue_sym(hess);
  out.eig_part = neg * neg * neg / std::pow(c, 1.5);
  out.value = std::max(out.grad_part, out.eig_part);
  return out;
}

inline StationarityMeasure mu_measure(const ObjectiveOracle& oracle, const Vector& x, double c) {
  return stationarity_from(oracle.gradient(x), oracle.hessian(x), c);
}

}  // namespace hcn
