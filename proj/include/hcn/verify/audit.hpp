#pragma once

// Per-step audits of the one-step descent inequalities for a cubic step
// x+ = x + s computed from estimates (g, H) with regularization M >= L,
// and direct checks of gradient dominance f(x) - f* <= tau ||grad f(x)||^alpha.
//
// With eg = ||grad f(x) - g||, eH = ||hess f(x) - H|| and r = ||s||:
//
//   descent:   f(x) - f(x+) >= mu_M(x+) / (1008 sqrt M) + M r^3 / 72
//                              - 4 eg^{3/2} / sqrt M - 73 eH^3 / M^2
//   decrease:  f(x) - f(x+) >= M r^3 / 36 - 3 eg^{3/2} / sqrt M - 72 eH^3 / M^2
//   gradient:  ||grad f(x+)||^{3/2} / sqrt M <= 3 M r^3 + 2 eg^{3/2} / sqrt M + eH^3 / M^2
//   curvature: (-lambda_min(hess f(x+)))^3 / M^2 <= 14 M r^3 + 4 eH^3 / M^2
//
// Each slack is (right side of the claimed ">=") minus its threshold, so a
// valid inequality has slack >= 0 up to the stated tolerance.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>

#include "hcn/core.hpp"
#include "hcn/cubic_solver.hpp"
#include "hcn/problems.hpp"
#include "hcn/stationarity.hpp"

namespace hcn {

struct AuditRecord {
  double f_x = 0.0;
  double f_plus = 0.0;
  double r = 0.0;
  double M = 0.0;
  double grad_error = 0.0;
  double hess_error = 0.0;
  StationarityMeasure mu_plus;
  double slack_descent = 0.0;
  double slack_decrease = 0.0;
  double slack_gradient = 0.0;
  double slack_curvature = 0.0;
  double tolerance = 0.0;  // slacks down to -tolerance are accepted

  bool descent_ok() const { return slack_descent >= -tolerance; }
  bool decrease_ok() const { return slack_decrease >= -tolerance; }
  bool gradient_ok() const { return slack_gradient >= -tolerance; }
  bool curvature_ok() const { return slack_curvature >= -tolerance; }
  bool all_ok() const { return descent_ok() && decrease_ok() && gradient_ok() && curvature_ok(); }
};

inline constexpr double kAuditRelativeTolerance = 1e-8;

// Full-batch evaluations spent by one audit_step call.
struct AuditCost {
  std::uint64_t grad_evals = 0;
  std::uint64_t hess_evals = 0;
};

inline AuditCost audit_cost(const ObjectiveOracle& oracle) { return {2 * oracle.size(), 2 * oracle.size()}; }

// Audits the step s from x. Refuses (NumericalError) when s does not solve
// the model given by (g, H, M) to within subproblem_tol.
inline AuditRecord audit_step(const ObjectiveOracle& oracle, const Vector& x, const Vector& s, const Vector& g,
                              const Matrix& H, double M, double subproblem_tol = kDefaultSubproblemTol) {
  const Index d = oracle.dim();
  if (x.size() != d || s.size() != d || g.size() != d || H.rows() != d || H.cols() != d)
    throw ConfigError("audit_step: dimension mismatch");
  if (!(M > 0.0)) throw ConfigError("audit_step: M must be positive");

  const double r = s.norm();
  const double h_norm = spectral_norm_sym(H);
  const Vector residual = g + H * s + 0.5 * M * r * s;
  const double allowance = subproblem_tol * (g.norm() + M * r * r + h_norm * r) +
                           64.0 * std::numeric_limits<double>::epsilon() * (g.norm() + (h_norm + M * r) * r);
  if (residual.norm() > allowance) {
    std::ostringstream msg;
    msg << "audit_step: step residual " << residual.norm() << " exceeds tolerance " << allowance;
    throw NumericalError(msg.str());
  }

  const Vector x_plus = x + s;
  AuditRecord rec;
  rec.r = r;
  rec.M = M;
  rec.f_x = oracle.value(x);
  rec.f_plus = oracle.value(x_plus);
  rec.grad_error = (oracle.gradient(x) - g).norm();
  rec.hess_error = spectral_norm_sym(oracle.hessian(x) - H);
  const Vector grad_plus = oracle.gradient(x_plus);
  rec.mu_plus = stationarity_from(grad_plus, oracle.hessian(x_plus), M);

  const double sqrt_m = std::sqrt(M);
  const double r3 = r * r * r;
  const double eg = std::pow(rec.grad_error, 1.5);
  const double eh = rec.hess_error * rec.hess_error * rec.hess_error;
  const double decrease = rec.f_x - rec.f_plus;

  rec.slack_descent = decrease - (rec.mu_plus.value / (1008.0 * sqrt_m) + M * r3 / 72.0 - 4.0 * eg / sqrt_m -
                                  73.0 * eh / (M * M));
  rec.slack_decrease = decrease - (M * r3 / 36.0 - 3.0 * eg / sqrt_m - 72.0 * eh / (M * M));
  rec.slack_gradient = 3.0 * M * r3 + 2.0 * eg / sqrt_m + eh / (M * M) - rec.mu_plus.grad_part / sqrt_m;
  const double neg = std::max(0.0, rec.mu_plus.eig_part) * std::pow(M, 1.5);  // (-lambda_min)^3, clipped at 0
  rec.slack_curvature = 14.0 * M * r3 + 4.0 * eh / (M * M) - neg / (M * M);
  rec.tolerance = kAuditRelativeTolerance * std::max(1.0, std::abs(rec.f_x));
  return rec;
}

// Variant taking the next iterate instead of the step.
inline AuditRecord audit_step_points(const ObjectiveOracle& oracle, const Vector& x, const Vector& x_plus,
                                     const Vector& g, const Matrix& H, double M,
                                     double subproblem_tol = kDefaultSubproblemTol) {
  if (x_plus.size() != x.size()) throw ConfigError("audit_step: dimension mismatch");
  return audit_step(oracle, x, Vector(x_plus - x), g, H, M, subproblem_tol);
}

// ---------------------------------------------------------------------------

struct DominanceCheck {
  std::size_t violations = 0;
  double worst_excess = -std::numeric_limits<double>::infinity();  // max of lhs - rhs
};

inline DominanceCheck check_grad_dominance_detail(const ObjectiveOracle& oracle, const GradDominanceSpec& spec,
                                                  std::span<const Vector> points) {
  spec.validate();
  const auto f_star = oracle.optimum();
  if (!f_star) throw ConfigError("check_grad_dominance: optimal value f* is not known");
  DominanceCheck out;
  for (const auto& x : points) {
    if (!x.allFinite()) throw ConfigError("check_grad_dominance: non-finite point");
    const double f = oracle.value(x);
    const double excess = (f - *f_star) - spec.tau * std::pow(oracle.gradient(x).norm(), spec.alpha);
    out.worst_excess = std::max(out.worst_excess, excess);
    if (excess > 1e-9 * std::max(1.0, std::abs(f))) ++out.violations;
  }
  return out;
}

inline std::size_t check_grad_dominance(const ObjectiveOracle& oracle, const GradDominanceSpec& spec,
                                        std::span<const Vector> points) {
  return check_grad_dominance_detail(oracle, spec, points).violations;
}

}  // namespace hcn
