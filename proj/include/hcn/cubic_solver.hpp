#pragma once

// Exact solver for the cubically regularized quadratic model
//
//     Omega(s) = <g, s> + 1/2 <H s, s> + (M/6) ||s||^3
//
// for symmetric, possibly indefinite H. The global minimizer s* with
// r = ||s*|| is characterized by
//
//     (H + (M/2) r I) s* = -g,     H + (M/2) r I  >= 0.
//
// We diagonalize H once (SpectralCache) and then solve the scalar secular
// equation ||(H + (M/2) r I)^{-1} g|| = r by safeguarded Newton iteration
// on 1/||s(r)|| - 1/r over r > max(0, -2 lambda_min / M). The factorization
// can be shared across many right-hand sides, which is what the lazy-Hessian
// methods rely on.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <string_view>

#include "hcn/core.hpp"

namespace hcn {

inline constexpr double kDefaultSubproblemTol = 1e-10;

struct SpectralCache {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // orthonormal columns, matching eigenvalues
  std::size_t source_hash = 0;

  Index dim() const { return eigenvalues.size(); }
  double lambda_min() const { return eigenvalues.size() ? eigenvalues(0) : 0.0; }
  double norm() const {
    if (eigenvalues.size() == 0) return 0.0;
    return std::max(std::abs(eigenvalues(0)), std::abs(eigenvalues(eigenvalues.size() - 1)));
  }
  Matrix reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  }
};

struct CubicModel {
  Vector g;
  Matrix H;
  double M = 1.0;
};

struct CubicStep {
  Vector s;
  double r = 0.0;
  double model_value = 0.0;
  bool hard_case = false;
  int newton_iters = 0;
  double residual = 0.0;  // ||g + H s + (M/2) r s||
};

namespace detail {

inline std::size_t hash_matrix(const Matrix& h) {
  const auto* bytes = reinterpret_cast<const char*>(h.data());
  std::string_view view(bytes, static_cast<std::size_t>(h.size()) * sizeof(double));
  return std::hash<std::string_view>{}(view) ^ (static_cast<std::size_t>(h.rows()) * 0x9e3779b97f4a7c15ULL);
}

}  // namespace detail

// Spectral decomposition H = Q diag(lambda) Q^T with ascending eigenvalues.
// Throws ConfigError on non-finite entries, non-square input, or asymmetry
// above 1e-12 relative.
inline SpectralCache factorize(const Matrix& h) {
  if (h.rows() != h.cols()) throw ConfigError("factorize: matrix is not square");
  if (!h.allFinite()) throw ConfigError("factorize: matrix has non-finite entries");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  const double asym = (h - h.transpose()).cwiseAbs().maxCoeff();
  if (h.size() > 0 && asym > 1e-12 * scale) {
    std::ostringstream msg;
    msg << "factorize: matrix is not symmetric (max asymmetry " << asym << ")";
    throw ConfigError(msg.str());
  }
  SpectralCache cache;
  cache.source_hash = detail::hash_matrix(h);
  if (h.size() == 0) return cache;
  const Matrix sym = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw NumericalError("factorize: eigendecomposition failed");
  cache.eigenvalues = es.eigenvalues();
  cache.eigenvectors = es.eigenvectors();
  return cache;
}

inline double cubic_model_value(const Vector& g, const Matrix& h, double M, const Vector& s) {
  const double r = s.norm();
  return g.dot(s) + 0.5 * s.dot(h * s) + M / 6.0 * r * r * r;
}

// ||(H + (M/2) r I)^{-1} g|| for r with H + (M/2) r I > 0; +inf otherwise.
inline double secular_norm(const SpectralCache& cache, const Vector& g, double M, double r) {
  const Vector c = cache.eigenvectors.transpose() * g;
  double acc = 0.0;
  for (Index i = 0; i < c.size(); ++i) {
    const double w = cache.eigenvalues(i) + 0.5 * M * r;
    if (w <= 0.0) return std::numeric_limits<double>::infinity();
    acc += (c(i) / w) * (c(i) / w);
  }
  return std::sqrt(acc);
}

inline CubicStep solve_cubic(const SpectralCache& cache, const Vector& g, double M,
                             double tol = kDefaultSubproblemTol) {
  const Index d = cache.dim();
  if (g.size() != d) throw ConfigError("solve_cubic: gradient dimension does not match factorization");
  if (!(M > 0.0) || !std::isfinite(M)) throw ConfigError("solve_cubic: M must be positive and finite");
  if (!(tol > 0.0 && tol <= 1e-4)) throw ConfigError("solve_cubic: tol must lie in (0, 1e-4]");
  if (!g.allFinite()) throw ConfigError("solve_cubic: gradient has non-finite entries");

  const Vector& lam = cache.eigenvalues;
  const Matrix& q = cache.eigenvectors;
  const Vector c = q.transpose() * g;
  const double gnorm = c.norm();
  const double lam_min = d > 0 ? lam(0) : 0.0;
  const double half_m = 0.5 * M;

  CubicStep out;
  out.s = Vector::Zero(d);

  auto finish = [&](const Vector& y) {
    out.s = q * y;
    out.r = out.s.norm();
    const double r = y.norm();
    out.model_value = c.dot(y) + 0.5 * y.dot(lam.cwiseProduct(y)) + M / 6.0 * r * r * r;
    Vector res = c + lam.cwiseProduct(y) + half_m * r * y;
    out.residual = res.norm();
    return out;
  };

  if (d == 0) return out;

  if (gnorm == 0.0) {
    if (lam_min >= 0.0) return out;
    Vector y = Vector::Zero(d);
    y(0) = -2.0 * lam_min / M;
    out.hard_case = true;
    return finish(y);
  }

  const double r_low = std::max(0.0, -lam_min / half_m);
  const double cluster_tol = 1e-12 * std::max(cache.norm(), std::numeric_limits<double>::min());
  Index n_min = 0;
  while (n_min < d && lam(n_min) <= lam_min + cluster_tol) ++n_min;
  bool orthogonal = true;
  for (Index i = 0; i < n_min; ++i)
    if (std::abs(c(i)) > 1e-11 * gnorm) orthogonal = false;
  const Index first = orthogonal ? n_min : 0;  // components entering the secular sum

  // The iteration runs on sigma = r - r_low so that the shifted eigenvalues
  // w_i = lam_i + (M/2) r keep full relative precision near the hard case.
  auto base = [&](Index i) { return lam_min < 0.0 ? lam(i) - lam_min : lam(i); };
  auto eval = [&](double sigma, double& norm_s, double& cube_sum) {
    double sq = 0.0, cu = 0.0;
    for (Index i = first; i < d; ++i) {
      const double w = base(i) + half_m * sigma;
      const double t = c(i) / w;
      sq += t * t;
      cu += t * t / w;
    }
    norm_s = std::sqrt(sq);
    cube_sum = cu;
  };
  auto step_at = [&](double sigma) {
    Vector y = Vector::Zero(d);
    for (Index i = first; i < d; ++i) y(i) = -c(i) / (base(i) + half_m * sigma);
    return y;
  };

  if (orthogonal && r_low > 0.0) {
    double p = 0.0, unused = 0.0;
    eval(0.0, p, unused);
    if (p <= r_low) {
      Vector y = step_at(0.0);
      // Both signs of the eigenvector component are global minimizers; take +.
      y(0) = std::sqrt(std::max(0.0, r_low * r_low - p * p));
      out.hard_case = true;
      return finish(y);
    }
  }

  // Bracket the root of phi = ||s|| - r on (0, hi] in sigma. Since
  // ||s(r)|| <= ||g|| / (lam_min + (M/2) r), phi(r) <= 0 beyond the positive
  // root of (M/2) r^2 + lam_min r - ||g||.
  double r_hi = lam_min >= 0.0 ? 2.0 * gnorm / (lam_min + std::sqrt(lam_min * lam_min + 2.0 * M * gnorm))
                               : (-lam_min + std::sqrt(lam_min * lam_min + 2.0 * M * gnorm)) / M;
  double lo = 0.0;
  double hi = std::max(r_hi - r_low, 0.0) * (1.0 + 1e-12) + std::numeric_limits<double>::min();
  {
    double ns = 0.0, cs = 0.0;
    int expand = 0;
    eval(hi, ns, cs);
    while (ns > r_low + hi) {
      if (++expand > 2100) throw NumericalError("solve_cubic: failed to bracket the secular root");
      hi *= 2.0;
      eval(hi, ns, cs);
    }
  }

  constexpr int kMaxIter = 200;
  const double eps = std::numeric_limits<double>::epsilon();
  double sigma = hi;
  double last_gap = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int it = 0; it < kMaxIter; ++it) {
    out.newton_iters = it + 1;
    double ns = 0.0, cs = 0.0;
    eval(sigma, ns, cs);
    const double r = r_low + sigma;
    const double gap = ns - r;
    last_gap = gap;
    if (std::abs(gap) <= 0.5 * tol * r || hi - lo <= 4.0 * eps * hi) {
      converged = true;
      break;
    }
    if (gap > 0.0) lo = sigma; else hi = sigma;
    // Newton on psi = 1/||s|| - 1/r, which is nearly linear in r.
    const double psi = 1.0 / ns - 1.0 / r;
    const double dpsi = half_m * cs / (ns * ns * ns) + 1.0 / (r * r);
    double next = sigma - psi / dpsi;
    if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
    sigma = next;
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "solve_cubic: secular iteration did not converge in " << kMaxIter
        << " iterations (last residual " << last_gap << ")";
    throw NumericalError(msg.str());
  }
  return finish(step_at(sigma));
}

inline CubicStep solve_cubic_fresh(const CubicModel& model, double tol = kDefaultSubproblemTol) {
  if (model.g.size() != model.H.rows()) throw ConfigError("solve_cubic_fresh: dimension mismatch");
  return solve_cubic(factorize(model.H), model.g, model.M, tol);
}

}  // namespace hcn
