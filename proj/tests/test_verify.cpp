#include <gtest/gtest.h>

#include <cmath>

#include "hcn/optimizer.hpp"
#include "hcn/verify/audit.hpp"
#include "hcn/verify/rate.hpp"

using namespace hcn;

namespace {

Vector random_point(Index d, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Vector x(d);
  for (Index j = 0; j < d; ++j) x(j) = n(rng);
  return x;
}

Vector random_direction(Index d, Rng& rng) {
  const Vector v = random_point(d, rng);
  return v / v.norm();
}

}  // namespace

TEST(Audit, ExactQuadraticStepSatisfiesDecreaseBound) {
  auto [f, spec] = synthetic_strongly_convex(40, 5, 0.5, 1);
  Rng rng(2);
  for (int k = 0; k < 20; ++k) {
    const Vector x = random_point(5, rng, 3.0);
    const Vector g = f->gradient(x);
    const Matrix H = f->hessian(x);
    const double M = 1.0;
    const CubicStep step = solve_cubic(factorize(H), g, M);
    const AuditRecord a = audit_step(*f, x, step.s, g, H, M);
    // Independent evaluation of the decrease bound.
    const double expect = f->value(x) - f->value(x + step.s) - M * std::pow(step.r, 3) / 36;
    EXPECT_NEAR(a.slack_decrease, expect, 1e-12 * std::max(1.0, std::abs(f->value(x))));
    EXPECT_GE(a.slack_decrease, 0.0);
    EXPECT_TRUE(a.all_ok());
  }
}

TEST(Audit, StrictLocalMinimumGivesZeroStep) {
  auto [f, spec] = synthetic_strongly_convex(30, 4, 1.0, 3);
  const Vector x = f->minimizer();
  const Vector g = f->gradient(x);
  const Matrix H = f->hessian(x);
  const CubicStep step = solve_cubic(factorize(H), g, 2.0);
  EXPECT_LE(step.r, 1e-14);
  const AuditRecord a = audit_step(*f, x, step.s, g, H, 2.0);
  EXPECT_TRUE(a.all_ok());
  EXPECT_GE(a.slack_descent, -a.tolerance);
}

TEST(Audit, ExactLogisticStepsHoldAllInequalities) {
  const auto f = logreg_oracle(synthetic_logistic_dataset({200, 8, 0.1, 2.0, 4}), 1e-3);
  const double M = f->lipschitz();
  Vector x = Vector::Constant(8, 2.0);
  for (int t = 0; t < 30; ++t) {
    const Vector g = f->gradient(x);
    const Matrix H = f->hessian(x);
    const CubicStep step = solve_cubic(factorize(H), g, M);
    const AuditRecord a = audit_step(*f, x, step.s, g, H, M);
    EXPECT_TRUE(a.all_ok()) << "step " << t << " descent " << a.slack_descent;
    EXPECT_LE(a.grad_error, 1e-12);
    x += step.s;
  }
}

TEST(Audit, NoisyGradientStepsHoldFullForm) {
  const auto f = logreg_nonconvex_oracle(synthetic_logistic_dataset({150, 6, 0.1, 2.0, 5}), 0.1);
  const double M = f->lipschitz();
  Rng rng(6);
  for (int k = 0; k < 100; ++k) {
    const Vector x = random_point(6, rng, 2.0);
    const Vector g = f->gradient(x) + 0.1 * random_direction(6, rng);
    const Matrix H = f->hessian(x);
    const CubicStep step = solve_cubic(factorize(H), g, M);
    const AuditRecord a = audit_step(*f, x, step.s, g, H, M);
    EXPECT_NEAR(a.grad_error, 0.1, 1e-12);
    EXPECT_TRUE(a.all_ok()) << "sample " << k;
  }
}

TEST(Audit, NoisyHessianStepsHoldFullForm) {
  const auto f = logreg_oracle(synthetic_logistic_dataset({150, 5, 0.1, 2.0, 7}), 1e-3);
  const double M = f->lipschitz();
  Rng rng(8);
  for (int k = 0; k < 50; ++k) {
    const Vector x = random_point(5, rng, 2.0);
    Matrix E = Matrix::Zero(5, 5);
    const Vector u = random_direction(5, rng);
    E = 0.05 * u * u.transpose();
    const Vector g = f->gradient(x);
    const Matrix H = f->hessian(x) - E;
    const CubicStep step = solve_cubic(factorize(H), g, M);
    const AuditRecord a = audit_step(*f, x, step.s, g, H, M);
    EXPECT_NEAR(a.hess_error, 0.05, 1e-12);
    EXPECT_TRUE(a.all_ok()) << "sample " << k;
  }
}

TEST(Audit, RefusesInaccurateStep) {
  auto [f, spec] = synthetic_strongly_convex(20, 3, 1.0, 9);
  const Vector x = Vector::Ones(3);
  const Vector g = f->gradient(x);
  const Matrix H = f->hessian(x);
  const CubicStep step = solve_cubic(factorize(H), g, 1.0);
  const Vector wrong = 1.5 * step.s;
  EXPECT_THROW(audit_step(*f, x, wrong, g, H, 1.0), NumericalError);
  EXPECT_NO_THROW(audit_step_points(*f, x, Vector(x + step.s), g, H, 1.0));
}

TEST(Audit, CostCountsFullBatchPasses) {
  auto [f, spec] = synthetic_strongly_convex(17, 3, 1.0, 10);
  const AuditCost c = audit_cost(*f);
  EXPECT_EQ(c.grad_evals, 34u);
  EXPECT_EQ(c.hess_evals, 34u);
}

TEST(Dominance, StronglyConvexHasNoViolations) {
  auto [f, spec] = synthetic_strongly_convex(100, 6, 0.5, 11);
  Rng rng(12);
  std::vector<Vector> points;
  for (int k = 0; k < 1000; ++k) points.push_back(random_point(6, rng, 5.0));
  EXPECT_EQ(check_grad_dominance(*f, spec, points), 0u);
}

TEST(Dominance, HalvedConstantIsViolated) {
  auto [f, spec] = synthetic_strongly_convex(100, 6, 0.5, 11);
  // Along an eigenvector of eigenvalue l the bound reads l/2 <= tau l^2, so
  // tau = 1/(4 mu) fails wherever l < 2 mu.
  ASSERT_LT(min_eigenvalue_sym(f->full_hessian()), 2 * 0.5);
  Rng rng(13);
  std::vector<Vector> points;
  for (int k = 0; k < 1000; ++k) points.push_back(random_point(6, rng, 5.0));
  EXPECT_GT(check_grad_dominance(*f, {spec.tau / 2, spec.alpha}, points), 0u);
}

TEST(Dominance, ConvexLogisticOnBallWithDiameterConstant) {
  auto f = logreg_oracle(synthetic_logistic_dataset({200, 5, 0.1, 1.0, 14}), 1e-2);
  const auto opt = compute_optimum(*f, Vector::Zero(5), f->lipschitz());
  const double D = 4.0;
  Rng rng(15);
  std::uniform_real_distribution<double> radius(0.0, 1.0);
  std::vector<Vector> points;
  for (int k = 0; k < 500; ++k)
    points.push_back(opt.x + (D / 2) * std::cbrt(radius(rng)) * random_direction(5, rng));
  EXPECT_EQ(check_grad_dominance(*f, {D, 1.0}, points), 0u);
}

TEST(Dominance, MissingOptimumThrows) {
  auto f = logreg_oracle(synthetic_logistic_dataset({20, 3, 0.1, 1.0, 16}), 1e-2);
  std::vector<Vector> points{Vector::Zero(3)};
  EXPECT_THROW(check_grad_dominance(*f, {1.0, 2.0}, points), ConfigError);
}

TEST(RateFit, InverseSquareSequenceRecoversSlope) {
  std::vector<double> gaps;
  for (int t = 1; t <= 100; ++t) gaps.push_back(1.0 / (t * t));
  const RateFit fit = fit_rate_gaps(gaps, 0.0, {.alpha = 1.0});
  EXPECT_EQ(fit.regime, RateRegime::sublinear);
  EXPECT_NEAR(fit.loglog_slope, -2.0, 0.05);
  EXPECT_EQ(fit.violations, 0u);
  EXPECT_DOUBLE_EQ(fit.gamma, 1.5);
}

TEST(RateFit, PlantedPowerLawsAreRecovered) {
  Rng rng(17);
  std::uniform_real_distribution<double> c_dist(0.1, 10.0), p_dist(1.0, 3.0);
  for (int k = 0; k < 25; ++k) {
    const double c = c_dist(rng), p = p_dist(rng);
    std::vector<double> gaps;
    for (int t = 1; t <= 200; ++t) gaps.push_back(c * std::pow(t, -p));
    RateFitOptions opts;
    opts.alpha = 1.0;
    opts.sublinear_slope_target = -p;
    opts.sublinear_slope_tolerance = 0.05;
    const RateFit fit = fit_rate_gaps(gaps, 0.0, opts);
    EXPECT_NEAR(fit.loglog_slope, -p, 0.05);
    EXPECT_EQ(fit.violations, 0u);
  }
}

TEST(RateFit, PlantedSuperlinearContraction) {
  std::vector<double> gaps{0.5};
  while (gaps.size() < 40) gaps.push_back(std::pow(gaps.back(), 4.0 / 3.0));
  const RateFit fit = fit_rate_gaps(gaps, 0.0, {.alpha = 2.0});
  EXPECT_EQ(fit.regime, RateRegime::superlinear);
  EXPECT_GE(fit.usable, 8u);
  EXPECT_TRUE(fit.superlinear_detected);
  EXPECT_EQ(fit.violations, 0u);
  EXPECT_EQ(fit.superlinear_start, 0u);
}

TEST(RateFit, GeometricSequenceIsNotSuperlinear) {
  std::vector<double> gaps;
  for (int t = 0; t < 30; ++t) gaps.push_back(0.9 * std::pow(0.5, t));
  const RateFit fit = fit_rate_gaps(gaps, 0.0, {.alpha = 2.0});
  EXPECT_FALSE(fit.superlinear_detected);
  EXPECT_GT(fit.violations, 0u);
  const RateFit linear = fit_rate_gaps(gaps, 0.0, {.alpha = 1.5});
  EXPECT_EQ(linear.regime, RateRegime::linear);
  EXPECT_NEAR(linear.log_linear_slope, std::log(0.5), 1e-12);
  EXPECT_EQ(linear.violations, 0u);
}

TEST(RateFit, RegimesFollowAlpha) {
  EXPECT_EQ(regime_for_alpha(1.0), RateRegime::sublinear);
  EXPECT_EQ(regime_for_alpha(1.49), RateRegime::sublinear);
  EXPECT_EQ(regime_for_alpha(1.5), RateRegime::linear);
  EXPECT_EQ(regime_for_alpha(1.7), RateRegime::superlinear);
}

TEST(RateFit, ShortTraceThrows) {
  std::vector<double> gaps{1, 0.5, 0.25, 0.1, 0.05, 0.01, 0.001};
  EXPECT_THROW(fit_rate_gaps(gaps, 0.0), ConfigError);
  // points at or below the floor are not usable
  std::vector<double> floored{1, 0.5, 0.25, 0.1, 0.05, 0.01, 0.001, 0.0, 0.0, 0.0};
  EXPECT_THROW(fit_rate_gaps(floored, 0.0), ConfigError);
}

TEST(RateFit, RecurrenceConstantsBoundEveryStep) {
  std::vector<double> gaps;
  for (int t = 1; t <= 50; ++t) gaps.push_back(3.0 / (t * t) + (t % 7 == 0 ? 1e-4 : 0.0));
  const RateFit fit = fit_rate_gaps(gaps, 0.0, {.alpha = 1.0});
  for (std::size_t t = 0; t + 1 < gaps.size(); ++t)
    EXPECT_GE(gaps[t] - gaps[t + 1], fit.C_hat * std::pow(gaps[t + 1], fit.gamma) - fit.a_hat - 1e-15);
  EXPECT_GT(fit.a_hat, 0.0);
}

TEST(RateFit, CubicNewtonOnStronglyConvexLogistic) {
  auto f = logreg_oracle(synthetic_logistic_dataset({500, 20, 0.1, 2.0, 1}), 0.1);
  compute_optimum(*f, Vector::Zero(20), f->lipschitz());
  RunConfig c;
  c.S = 40;
  c.x0 = Vector::Constant(20, 5.0);
  c.M_policy = MPolicy::fixed(f->lipschitz());
  c.timing = false;
  const RunResult r = run(f, c);
  RateFitOptions opts;
  opts.contraction = 1.2;
  const RateFit fit = fit_rate(r.trace, *f->optimum(), opts);
  EXPECT_TRUE(fit.superlinear_detected);
  EXPECT_GT(fit.superlinear_start, opts.burn_in);
  EXPECT_LE(fit.loglog_slope, -1.7);
}
