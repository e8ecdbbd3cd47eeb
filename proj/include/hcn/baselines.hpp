#pragma once

// First-order comparators: gradient descent with Armijo backtracking and
// constant-step minibatch SGD. Traces share the cubic-method schema with
// hess_units = 0.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <variant>

#include "hcn/core.hpp"
#include "hcn/costmodel.hpp"
#include "hcn/estimators.hpp"
#include "hcn/problems.hpp"
#include "hcn/trace.hpp"

namespace hcn {

struct GDLineSearch {
  double c_armijo = 1e-4;
  double backtrack_factor = 0.5;
  double init_step = 1.0;
};

struct SGDConfig {
  double step = 0.1;
  std::size_t batch = 1;
  std::uint64_t seed = 0;
};

struct BaselineConfig {
  std::variant<GDLineSearch, SGDConfig> variant = GDLineSearch{};
  std::size_t iters = 100;
  Vector x0;
  double d_eff = 0.0;  // 0 means the problem dimension
  bool timing = true;

  void validate(const ObjectiveOracle& oracle) const {
    if (x0.size() != oracle.dim()) throw ConfigError("baseline: x0 dimension does not match the oracle");
    if (!x0.allFinite()) throw ConfigError("baseline: x0 has non-finite entries");
    if (const auto* gd = std::get_if<GDLineSearch>(&variant)) {
      if (!(gd->init_step > 0.0)) throw ConfigError("gd: init_step must be positive");
      if (!(gd->c_armijo > 0.0 && gd->c_armijo < 1.0)) throw ConfigError("gd: c_armijo must lie in (0, 1)");
      if (!(gd->backtrack_factor > 0.0 && gd->backtrack_factor < 1.0))
        throw ConfigError("gd: backtrack_factor must lie in (0, 1)");
    } else {
      const auto& sgd = std::get<SGDConfig>(variant);
      if (!(sgd.step > 0.0)) throw ConfigError("sgd: step must be positive");
      if (sgd.batch < 1 || sgd.batch > oracle.size()) throw ConfigError("sgd: batch must lie in [1, n]");
    }
  }
};

struct BaselineResult {
  Vector x;
  Trace trace;
  CostLedger ledger;
  double f0 = 0.0;
};

namespace detail {

inline TraceRow baseline_row(std::uint64_t iter, double f, double grad_norm, double r, const CostLedger& ledger,
                             std::chrono::steady_clock::time_point start, bool timing) {
  TraceRow row;
  row.iter = iter;
  row.f = f;
  row.grad_norm = grad_norm;
  row.r = r;
  row.grad_units = ledger.grad_units;
  row.hess_units = ledger.hess_units;
  row.factorizations = ledger.factorizations;
  row.gradcost_total = ledger.gradcost_total();
  row.audit_grad_units = ledger.audit_grad_units;
  row.audit_hess_units = ledger.audit_hess_units;
  if (timing)
    row.wall_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
  return row;
}

}  // namespace detail

// Accepts eta when f(x - eta g) <= f(x) - c eta ||g||^2; the trial step
// doubles after each acceptance. A zero gradient ends the run. Function
// values inside the line search are charged like gradients.
inline BaselineResult run_gd(const ObjectiveOracle& oracle, const BaselineConfig& config) {
  config.validate(oracle);
  const auto& ls = std::get<GDLineSearch>(config.variant);
  const std::uint64_t n = oracle.size();
  BaselineResult out;
  out.ledger.d_eff = config.d_eff > 0.0 ? config.d_eff : static_cast<double>(oracle.dim());
  Vector x = config.x0;
  double f = oracle.value(x);
  out.f0 = f;
  Vector g = oracle.gradient(x);
  out.ledger.grad_units += 2 * n;
  double eta = ls.init_step;
  for (std::size_t t = 0; t < config.iters; ++t) {
    const auto start = std::chrono::steady_clock::now();
    const double g2 = g.squaredNorm();
    if (g2 == 0.0) break;
    int halvings = 0;
    Vector trial = x - eta * g;
    double f_trial = oracle.value(trial);
    out.ledger.grad_units += n;
    while (!(f_trial <= f - ls.c_armijo * eta * g2)) {
      if (++halvings > 60) {
        std::ostringstream msg;
        msg << "gd: line search failed after 60 reductions at iteration " << t;
        throw NumericalError(msg.str());
      }
      eta *= ls.backtrack_factor;
      trial = x - eta * g;
      f_trial = oracle.value(trial);
      out.ledger.grad_units += n;
    }
    const double r = eta * std::sqrt(g2);
    x = std::move(trial);
    f = f_trial;
    g = oracle.gradient(x);
    out.ledger.grad_units += n;
    out.trace.push_back(detail::baseline_row(t + 1, f, g.norm(), r, out.ledger, start, config.timing));
    eta /= ls.backtrack_factor;
  }
  out.x = x;
  return out;
}

// Constant-step minibatch SGD with replacement; batch = n is the full
// gradient. The recorded f and gradient norm are full-batch diagnostics
// charged to the audit counters.
inline BaselineResult run_sgd(const ObjectiveOracle& oracle, const BaselineConfig& config) {
  config.validate(oracle);
  const auto& sgd = std::get<SGDConfig>(config.variant);
  const std::uint64_t n = oracle.size();
  BaselineResult out;
  out.ledger.d_eff = config.d_eff > 0.0 ? config.d_eff : static_cast<double>(oracle.dim());
  Rng rng(sgd.seed);
  Vector x = config.x0;
  out.f0 = oracle.value(x);
  for (std::size_t t = 0; t < config.iters; ++t) {
    const auto start = std::chrono::steady_clock::now();
    const Vector g = sgd.batch == n ? oracle.gradient(x)
                                    : oracle.batch_gradient(sample_batch(oracle.size(), sgd.batch, rng), x);
    out.ledger.grad_units += sgd.batch;
    x -= sgd.step * g;
    const double f = oracle.value(x);
    const double gn = oracle.gradient(x).norm();
    out.ledger.audit_grad_units += n;
    if (!std::isfinite(f)) {
      std::ostringstream msg;
      msg << "sgd: objective became non-finite at iteration " << t;
      throw NumericalError(msg.str());
    }
    out.trace.push_back(detail::baseline_row(t + 1, f, gn, sgd.step * g.norm(), out.ledger, start, config.timing));
  }
  out.x = x;
  return out;
}

inline BaselineResult run_baseline(const ObjectiveOracle& oracle, const BaselineConfig& config) {
  return std::holds_alternative<GDLineSearch>(config.variant) ? run_gd(oracle, config) : run_sgd(oracle, config);
}

}  // namespace hcn
