#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "hcn/cubic_solver.hpp"

using namespace hcn;

namespace {

Matrix random_symmetric(Index d, Rng& rng, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix a(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = u(rng);
  return a;
}

Vector random_vector(Index d, Rng& rng, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(d);
  for (Index i = 0; i < d; ++i) v(i) = u(rng);
  return v;
}

// Dense grid over [lo, hi]^2, then repeated zoom around the best point.
double grid_min_2d(const Vector& g, const Matrix& h, double M, double lo, double hi, double step) {
  double best = std::numeric_limits<double>::infinity();
  Vector arg(2), s(2);
  const int n = static_cast<int>(std::round((hi - lo) / step));
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      s << lo + i * step, lo + j * step;
      const double v = cubic_model_value(g, h, M, s);
      if (v < best) {
        best = v;
        arg = s;
      }
    }
  double w = step;
  for (int level = 0; level < 8; ++level) {
    const Vector c = arg;
    for (int i = -20; i <= 20; ++i)
      for (int j = -20; j <= 20; ++j) {
        s << c(0) + i * w / 10, c(1) + j * w / 10;
        const double v = cubic_model_value(g, h, M, s);
        if (v < best) {
          best = v;
          arg = s;
        }
      }
    w /= 10;
  }
  return best;
}

void expect_step_invariants(const Matrix& h, const Vector& g, double M, const CubicStep& s, double tol) {
  EXPECT_LE(std::abs(s.s.norm() - s.r), 1e-12 * (1.0 + s.r));
  const double scale = g.norm() + M * s.r * s.r + spectral_norm_sym(h) * s.r;
  EXPECT_LE((g + h * s.s + 0.5 * M * s.r * s.s).norm(), tol * scale + 1e-14);
  Matrix shifted = h;
  shifted.diagonal().array() += 0.5 * M * s.r;
  EXPECT_GE(min_eigenvalue_sym(shifted), -tol);
}

}  // namespace

TEST(Factorize, IdentityHasUnitEigenvalues) {
  const SpectralCache c = factorize(Matrix::Identity(3, 3));
  EXPECT_TRUE(c.eigenvalues.isApprox(Vector::Ones(3)));
  EXPECT_LE((c.eigenvectors.transpose() * c.eigenvectors - Matrix::Identity(3, 3)).norm(), 1e-12);
}

TEST(Factorize, DiagonalSortedAscending) {
  Matrix h = Vector(Eigen::Vector2d(2.0, -1.0)).asDiagonal();
  const SpectralCache c = factorize(h);
  EXPECT_DOUBLE_EQ(c.eigenvalues(0), -1.0);
  EXPECT_DOUBLE_EQ(c.eigenvalues(1), 2.0);
  EXPECT_DOUBLE_EQ(c.lambda_min(), -1.0);
}

TEST(Factorize, RandomReconstructionAndOrthogonality) {
  Rng rng(11);
  for (int k = 0; k < 50; ++k) {
    const Matrix h = random_symmetric(5, rng);
    const SpectralCache c = factorize(h);
    EXPECT_LE((c.reconstruct() - h).norm() / h.norm(), 1e-9);
    EXPECT_LE((c.eigenvectors.transpose() * c.eigenvectors - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-10);
    for (Index i = 1; i < 5; ++i) EXPECT_LE(c.eigenvalues(i - 1), c.eigenvalues(i));
  }
}

TEST(Factorize, RejectsBadInput) {
  Matrix h = Matrix::Identity(2, 2);
  h(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(factorize(h), ConfigError);
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 1e-6;
  EXPECT_THROW(factorize(asym), ConfigError);
  EXPECT_THROW(factorize(Matrix::Zero(2, 3)), ConfigError);
}

TEST(Factorize, HashIdentifiesSource) {
  Rng rng(5);
  const Matrix a = random_symmetric(4, rng);
  Matrix b = a;
  b(0, 0) += 1.0;
  EXPECT_EQ(factorize(a).source_hash, factorize(a).source_hash);
  EXPECT_NE(factorize(a).source_hash, factorize(b).source_hash);
}

TEST(SolveCubic, ZeroGradientPsdGivesZeroStep) {
  const SpectralCache c = factorize(Matrix::Identity(3, 3));
  const CubicStep s = solve_cubic(c, Vector::Zero(3), 2.0);
  EXPECT_EQ(s.r, 0.0);
  EXPECT_EQ(s.s.norm(), 0.0);
  EXPECT_FALSE(s.hard_case);
}

TEST(SolveCubic, OneDimensionalMatchesGridSearch) {
  Matrix h = Matrix::Zero(1, 1);
  Vector g = Vector::Ones(1);
  const CubicStep s = solve_cubic(factorize(h), g, 3.0);
  // 1 + (3/2)|s| s = 0
  EXPECT_NEAR(s.s(0), -std::sqrt(2.0 / 3.0), 1e-10);
  double best = std::numeric_limits<double>::infinity(), arg = 0;
  for (int i = 0; i <= 1000000; ++i) {
    const double x = -5.0 + 1e-5 * i;
    const double v = x + 0.5 * std::abs(x) * std::abs(x) * std::abs(x);
    if (v < best) {
      best = v;
      arg = x;
    }
  }
  EXPECT_NEAR(s.s(0), arg, 2e-5);
  EXPECT_LE(s.model_value, best + 1e-12);
}

TEST(SolveCubic, HardCaseTwoDimensional) {
  Matrix h = Vector(Eigen::Vector2d(-1.0, 1.0)).asDiagonal();
  Vector g(2);
  g << 0.0, 1.0;
  const CubicStep s = solve_cubic(factorize(h), g, 2.0);
  EXPECT_TRUE(s.hard_case);
  EXPECT_NEAR(s.r, 1.0, 1e-8);
  EXPECT_NEAR(std::abs(s.s(0)), std::sqrt(3.0) / 2.0, 1e-10);
  EXPECT_NEAR(s.s(1), -0.5, 1e-10);
  EXPECT_NEAR(s.model_value, -5.0 / 12.0, 1e-12);
  const double brute = grid_min_2d(g, h, 2.0, -3.0, 3.0, 1e-3);
  EXPECT_LE(s.model_value, brute + 1e-9);
  EXPECT_NEAR(s.model_value, brute, 1e-8);
}

TEST(SolveCubic, ZeroGradientIndefiniteMovesAlongMinimalEigenvector) {
  Matrix h = Vector(Eigen::Vector3d(-2.0, 1.0, 3.0)).asDiagonal();
  const CubicStep s = solve_cubic(factorize(h), Vector::Zero(3), 4.0);
  EXPECT_TRUE(s.hard_case);
  EXPECT_NEAR(s.r, 1.0, 1e-12);  // 2 |lambda_min| / M
  EXPECT_NEAR(std::abs(s.s(0)), 1.0, 1e-12);
  EXPECT_LT(s.model_value, 0.0);
}

TEST(SolveCubicFresh, IdentityHessianMatchesSecularOracle) {
  CubicModel m{Vector(Eigen::Vector2d(1.0, 0.0)), Matrix::Identity(2, 2), 6.0};
  const CubicStep s = solve_cubic_fresh(m);
  // 1 = t (1 + 3 t), solved by bisection.
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid * (1.0 + 3.0 * mid) < 1.0 ? lo : hi) = mid;
  }
  EXPECT_NEAR(lo, (-1.0 + std::sqrt(13.0)) / 6.0, 1e-14);
  EXPECT_NEAR(s.s(0), -lo, 1e-10);
  EXPECT_NEAR(s.s(1), 0.0, 1e-14);
}

TEST(SolveCubicFresh, LargeRegularizationShrinksStep) {
  Rng rng(3);
  const Matrix h = random_symmetric(3, rng);
  const Vector g = random_vector(3, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (double M : {1.0, 1e2, 1e4, 1e6, 1e8}) {
    const CubicStep s = solve_cubic_fresh({g, h, M});
    EXPECT_LT(s.r, prev);
    prev = s.r;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(SolveCubicFresh, SmallStepApproachesNewtonStep) {
  Rng rng(8);
  const Matrix b = random_symmetric(4, rng);
  const Matrix h = b * b.transpose() + 4.0 * Matrix::Identity(4, 4);
  const Vector g = 1e-3 * random_vector(4, rng);
  const double M = 1.0;
  const CubicStep s = solve_cubic_fresh({g, h, M});
  const Vector newton = -h.ldlt().solve(g);
  // (H + M r / 2) s = -g, so s - newton = O(M r^2 / lambda_min(H)).
  EXPECT_LE((s.s - newton).norm(), M * s.r * s.r);
}

TEST(SolveCubic, RandomInstancesSatisfyOptimalityConditions) {
  Rng rng(2024);
  std::uniform_real_distribution<double> mdist(0.1, 20.0);
  for (int k = 0; k < 400; ++k) {
    const Index d = 1 + k % 8;
    const Matrix h = random_symmetric(d, rng);
    const Vector g = random_vector(d, rng);
    const double M = mdist(rng);
    const CubicStep s = solve_cubic(factorize(h), g, M);
    expect_step_invariants(h, g, M, s, kDefaultSubproblemTol);
    EXPECT_NEAR(s.model_value, cubic_model_value(g, h, M, s.s), 1e-10 * (1.0 + std::abs(s.model_value)));
  }
}

TEST(SolveCubic, TwoDimensionalRandomInstancesBeatGrid) {
  Rng rng(99);
  std::uniform_real_distribution<double> mdist(0.5, 10.0);
  for (int k = 0; k < 20; ++k) {
    const Matrix h = random_symmetric(2, rng);
    const Vector g = random_vector(2, rng);
    const double M = mdist(rng);
    const CubicStep s = solve_cubic(factorize(h), g, M);
    const double bound = 2.0 * s.r + 1.0;
    EXPECT_LE(s.model_value, grid_min_2d(g, h, M, -bound, bound, bound / 200.0) + 1e-9);
  }
}

TEST(SolveCubic, NearHardCaseIsContinuous) {
  Matrix h = Vector(Eigen::Vector2d(-1.0, 1.0)).asDiagonal();
  const CubicStep exact = solve_cubic(factorize(h), Vector(Eigen::Vector2d(0.0, 1.0)), 2.0);
  for (double eps : {1e-4, 1e-6, 1e-8}) {
    const CubicStep near = solve_cubic(factorize(h), Vector(Eigen::Vector2d(eps, 1.0)), 2.0);
    EXPECT_NEAR(near.r, exact.r, 1e-3);
    // the optimal value moves by at most eps * ||s|| to first order
    EXPECT_NEAR(near.model_value, exact.model_value, 2 * eps * exact.r + 1e-12);
    expect_step_invariants(h, Vector(Eigen::Vector2d(eps, 1.0)), 2.0, near, kDefaultSubproblemTol);
  }
}

TEST(SolveCubic, CacheReuseMatchesFreshFactorization) {
  Rng rng(17);
  const Matrix h = random_symmetric(6, rng);
  const SpectralCache cache = factorize(h);
  for (int k = 0; k < 10; ++k) {
    const Vector g = random_vector(6, rng);
    const CubicStep a = solve_cubic(cache, g, 3.0);
    const CubicStep b = solve_cubic_fresh({g, h, 3.0});
    EXPECT_EQ(a.s, b.s);
  }
}

TEST(SolveCubic, RejectsInvalidArguments) {
  const SpectralCache c = factorize(Matrix::Identity(2, 2));
  EXPECT_THROW(solve_cubic(c, Vector::Ones(3), 1.0), ConfigError);
  EXPECT_THROW(solve_cubic(c, Vector::Ones(2), 0.0), ConfigError);
  EXPECT_THROW(solve_cubic(c, Vector::Ones(2), 1.0, 1e-3), ConfigError);
  EXPECT_THROW(solve_cubic(c, Vector::Ones(2), 1.0, 0.0), ConfigError);
}
