#pragma once

// Cubic Newton with helper functions: S rounds of m cubic steps. At the
// start of each round the snapshot x~ is refreshed (last or best iterate),
// then every step builds (g, H) from the configured estimator and moves to
// the global minimizer of the cubic model.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hcn/core.hpp"
#include "hcn/costmodel.hpp"
#include "hcn/cubic_solver.hpp"
#include "hcn/estimators.hpp"
#include "hcn/problems.hpp"
#include "hcn/stationarity.hpp"
#include "hcn/trace.hpp"
#include "hcn/verify/audit.hpp"

namespace hcn {

// Constants of the closed-form M rule max(L, a delta1 m^2, b delta2 m).
enum class MRule { standard, dominated };  // (32, 16) and (34, 11)

inline std::string_view to_string(MRule r) { return r == MRule::standard ? "standard" : "dominated"; }

// 4 (delta1/M)^{3/2} + 73 (delta2/M)^3 <= 1 / (24 m^3)
inline bool m_condition_holds(double M, double delta1, double delta2, std::size_t m) {
  const double md = static_cast<double>(m);
  const double lhs = 4.0 * std::pow(delta1 / M, 1.5) + 73.0 * std::pow(delta2 / M, 3.0);
  return lhs <= 1.0 / (24.0 * md * md * md) * (1.0 + 1e-12);
}

inline double select_M(double L, double delta1, double delta2, std::size_t m, MRule rule = MRule::standard) {
  if (!(L > 0.0) || !(delta1 >= 0.0) || !(delta2 >= 0.0) || m < 1)
    throw ConfigError("select_M: need L > 0, delta1 >= 0, delta2 >= 0, m >= 1");
  if (!std::isfinite(L) || !std::isfinite(delta1) || !std::isfinite(delta2))
    throw ConfigError("select_M: inputs must be finite");
  const double md = static_cast<double>(m);
  const double a = rule == MRule::standard ? 32.0 : 34.0;
  const double b = rule == MRule::standard ? 16.0 : 11.0;
  const double M = std::max({L, a * delta1 * md * md, b * delta2 * md});
  // The (34, 11) constants belong to the gradient-dominated analysis and do
  // not satisfy the general step-length condition when both terms bind.
  if (rule == MRule::standard && !m_condition_holds(M, delta1, delta2, m))
    throw NumericalError("select_M: returned M violates the step-length condition");
  return M;
}

struct MPolicy {
  enum class Kind { fixed, automatic };
  Kind kind = Kind::automatic;
  double value = 0.0;  // fixed M
  MRule rule = MRule::standard;

  static MPolicy fixed(double M) { return {Kind::fixed, M, MRule::standard}; }
  static MPolicy automatic(MRule rule = MRule::standard) { return {Kind::automatic, 0.0, rule}; }
};

enum class SnapshotPolicy { last_iterate, best_iterate };

inline std::string_view to_string(SnapshotPolicy p) {
  return p == SnapshotPolicy::last_iterate ? "last_iterate" : "best_iterate";
}

struct RunConfig {
  std::size_t m = 1;
  std::size_t S = 1;
  MPolicy M_policy;
  SnapshotPolicy snapshot_policy = SnapshotPolicy::last_iterate;
  EstimatorConfig estimator;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double tol_subproblem = kDefaultSubproblemTol;
  Vector x0;
  std::uint64_t seed = 0;
  double d_eff = 0.0;       // 0 means the problem dimension
  bool record_mu = false;   // mu_M(x_t) each step, charged to the audit ledger
  bool audit = false;       // per-step inequality audit, charged to the audit ledger
  bool timing = true;       // wall_ns per step; zero when disabled

  void validate(const ObjectiveOracle& oracle) const {
    if (m < 1) throw ConfigError("run: m must be >= 1");
    if (x0.size() != oracle.dim()) throw ConfigError("run: x0 dimension does not match the oracle");
    if (!x0.allFinite()) throw ConfigError("run: x0 has non-finite entries");
    if (!(tol_subproblem > 0.0 && tol_subproblem <= 1e-4)) throw ConfigError("run: tol_subproblem must lie in (0, 1e-4]");
    if (d_eff < 0.0 || !std::isfinite(d_eff)) throw ConfigError("run: d_eff must be finite and >= 0");
    if (M_policy.kind == MPolicy::Kind::fixed) {
      if (!(M_policy.value > 0.0) || !std::isfinite(M_policy.value)) throw ConfigError("run: fixed M must be positive");
    } else if (!std::isfinite(delta1) || !std::isfinite(delta2) || !std::isfinite(oracle.lipschitz()) ||
               !(oracle.lipschitz() > 0.0)) {
      throw ConfigError("run: automatic M needs finite delta1, delta2 and a positive finite L");
    }
    estimator.validate(oracle);
  }

  double resolve_M(const ObjectiveOracle& oracle) const {
    if (M_policy.kind == MPolicy::Kind::fixed) return M_policy.value;
    return select_M(oracle.lipschitz(), delta1, delta2, m, M_policy.rule);
  }
};

struct RunResult {
  Vector x;
  std::vector<Vector> iterates;  // x_0 .. x_T
  Trace trace;                   // rows for x_1 .. x_T
  CostLedger ledger;
  double f0 = 0.0;
  double M = 0.0;
  std::vector<AuditRecord> audits;
};

namespace detail {

inline void charge(CostLedger& ledger, const HelperEstimates& e) {
  ledger.grad_units += e.grad_component_evals;
  ledger.hess_units += e.hess_component_evals;
  ledger.helper_grad_units += e.helper_grad_evals;
  ledger.helper_hess_units += e.helper_hess_evals;
}

inline void charge(CostLedger& ledger, const Snapshot& s) {
  ledger.grad_units += s.grad_evals;
  ledger.hess_units += s.hess_evals;
  ledger.helper_grad_units += s.helper_grad_evals;
  ledger.helper_hess_units += s.helper_hess_evals;
}

inline double divergence_scale(const ObjectiveOracle& oracle, double f0) {
  if (auto fs = oracle.optimum(); fs && f0 - *fs > 0.0) return f0 - *fs;
  return std::max(1.0, std::abs(f0));
}

}  // namespace detail

inline RunResult run(const OraclePtr& oracle_ptr, const RunConfig& config) {
  if (!oracle_ptr) throw ConfigError("run: null oracle");
  const ObjectiveOracle& oracle = *oracle_ptr;
  config.validate(oracle);

  RunResult out;
  out.M = config.resolve_M(oracle);
  const double M = out.M;
  const std::size_t n = oracle.size();
  Rng rng(config.estimator.seed);
  const HelperEstimator estimator(oracle_ptr, config.estimator, rng);

  CostLedger& ledger = out.ledger;
  ledger.d_eff = config.d_eff > 0.0 ? config.d_eff : static_cast<double>(oracle.dim());

  Vector x = config.x0;
  out.f0 = oracle.value(x);
  const double guard = 1e10 * detail::divergence_scale(oracle, out.f0);
  out.iterates.push_back(x);
  std::vector<double> f_hist{out.f0};

  std::optional<Snapshot> snap;
  std::optional<SpectralCache> lazy_cache;
  const std::size_t total = config.S * config.m;
  out.trace.reserve(total);

  for (std::size_t t = 0; t < total; ++t) {
    const auto t_start = std::chrono::steady_clock::now();
    bool refreshed = false;
    if (t % config.m == 0 && estimator.needs().any()) {
      Vector anchor = x;
      if (config.snapshot_policy == SnapshotPolicy::best_iterate) {
        // Candidates x_{t-m+1} .. x_t; their values were already computed
        // for the trace, but the policy's evaluations are charged anyway.
        const std::size_t first = t + 1 >= config.m ? t + 1 - config.m : 0;
        std::size_t best = t;
        for (std::size_t i = t + 1; i-- > first;)
          if (f_hist[i] < f_hist[best]) best = i;
        ledger.audit_grad_units += (t - first + 1) * n;
        anchor = out.iterates[best];
      }
      snap = estimator.snapshot(anchor);
      detail::charge(ledger, *snap);
      refreshed = true;
      if (estimator.lazy_hessian()) {
        lazy_cache = factorize(snap->hess);
        ++ledger.factorizations;
      }
    } else if (snap) {
      ++snap->age;
    }

    const HelperEstimates est = estimator.estimate(x, snap ? &*snap : nullptr, rng);
    detail::charge(ledger, est);

    CubicStep step;
    try {
      if (estimator.lazy_hessian()) {
        step = solve_cubic(*lazy_cache, est.g, M, config.tol_subproblem);
      } else {
        const SpectralCache cache = factorize(est.H);
        ++ledger.factorizations;
        step = solve_cubic(cache, est.g, M, config.tol_subproblem);
      }
    } catch (const NumericalError& e) {
      std::ostringstream msg;
      msg << "iteration " << t << ": " << e.what();
      throw NumericalError(msg.str());
    }

    if (config.audit) {
      out.audits.push_back(audit_step(oracle, x, step.s, est.g, est.H, M, config.tol_subproblem));
      const AuditCost c = audit_cost(oracle);
      ledger.audit_grad_units += c.grad_evals;
      ledger.audit_hess_units += c.hess_evals;
    }

    x += step.s;
    const double f = oracle.value(x);
    if (!std::isfinite(f) || f - out.f0 > guard) {
      std::ostringstream msg;
      msg << "iteration " << t << ": objective diverged (f = " << f << ", f0 = " << out.f0
          << "); M is likely too small";
      throw NumericalError(msg.str());
    }

    TraceRow row;
    row.iter = t + 1;
    row.f = f;
    row.r = step.r;
    row.snapshot = refreshed;
    const Vector grad = oracle.gradient(x);
    row.grad_norm = grad.norm();
    ledger.audit_grad_units += n;
    if (config.record_mu) {
      row.mu_M = stationarity_from(grad, oracle.hessian(x), M).value;
      ledger.audit_hess_units += n;
    }
    row.grad_units = ledger.grad_units;
    row.hess_units = ledger.hess_units;
    row.factorizations = ledger.factorizations;
    row.gradcost_total = ledger.gradcost_total();
    row.audit_grad_units = ledger.audit_grad_units;
    row.audit_hess_units = ledger.audit_hess_units;
    if (config.timing)
      row.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t_start)
                        .count();
    out.trace.push_back(row);
    out.iterates.push_back(x);
    f_hist.push_back(f);
  }
  out.x = x;
  return out;
}

// ---------------------------------------------------------------------------

enum class OutputMode { uniform_random, last, best_f };

inline std::size_t select_output(const Trace& trace, OutputMode mode, std::uint64_t seed = 0) {
  if (trace.empty()) throw ConfigError("select_output: empty trace");
  switch (mode) {
    case OutputMode::last: return trace.size() - 1;
    case OutputMode::best_f: {
      std::size_t best = 0;
      for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i].f < trace[best].f) best = i;
      return best;
    }
    default: {
      Rng rng(seed);
      return std::uniform_int_distribution<std::size_t>(0, trace.size() - 1)(rng);
    }
  }
}

// Minimizes f by exact cubic Newton steps until ||grad f|| <= grad_tol and
// records the result as the oracle's optimal value.
struct OptimumResult {
  Vector x;
  double f = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
};

inline OptimumResult compute_optimum(ObjectiveOracle& oracle, const Vector& x0, double M, double grad_tol = 1e-12,
                                     std::size_t max_iter = 500) {
  if (x0.size() != oracle.dim()) throw ConfigError("compute_optimum: x0 dimension mismatch");
  if (!(M > 0.0)) throw ConfigError("compute_optimum: M must be positive");
  OptimumResult out;
  out.x = x0;
  Vector g = oracle.gradient(out.x);
  while (g.norm() > grad_tol && out.iterations < max_iter) {
    const CubicStep step = solve_cubic(factorize(oracle.hessian(out.x)), g, M);
    if (step.r == 0.0) break;
    out.x += step.s;
    g = oracle.gradient(out.x);
    ++out.iterations;
  }
  out.grad_norm = g.norm();
  out.f = oracle.value(out.x);
  if (out.grad_norm > std::max(grad_tol, 1e-9))
    throw NumericalError("compute_optimum: did not reach the requested gradient tolerance");
  oracle.set_optimum(out.f);
  return out;
}

}  // namespace hcn
