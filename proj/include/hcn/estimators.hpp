#pragma once

// Gradient and Hessian estimates (g, H) fed to each cubic step.
//
// Every estimate is built from helper functions h1 (gradient side) and h2
// (Hessian side). Basic stochastic helpers use plain minibatch means. The
// variance-reduced forms correct the helper with information at a snapshot
// point x~:
//
//   g = grad h1(x) - grad h1(x~) + grad f(x~) + (hess f(x~) - hess h1(x~)) (x - x~)
//   H = hess h2(x) - hess h2(x~) + hess f(x~)
//
// which is exact whenever f - h1 and f - h2 are quadratic. Lazy variants
// take h2 = 0, so H = hess f(x~) stays fixed between snapshot refreshes.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hcn/core.hpp"
#include "hcn/problems.hpp"

namespace hcn {

namespace estimator {

struct Exact {};
struct BasicStochastic {
  std::size_t b_g = 1;
  std::size_t b_h = 1;
  bool resample_each_step = true;
};
struct VarianceReduced {
  std::size_t b_g = 1;
  std::size_t b_h = 1;
};
struct LazyVR {
  std::size_t b_g = 1;
};
struct LazyExact {};
struct Auxiliary {
  OraclePtr helper;
};

}  // namespace estimator

using EstimatorVariant = std::variant<estimator::Exact, estimator::BasicStochastic, estimator::VarianceReduced,
                                      estimator::LazyVR, estimator::LazyExact, estimator::Auxiliary>;

struct EstimatorConfig {
  EstimatorVariant variant = estimator::Exact{};
  std::uint64_t seed = 0;

  void validate(const ObjectiveOracle& oracle) const {
    const std::size_t n = oracle.size();
    auto check_batch = [n](std::size_t b, const char* name) {
      if (b < 1 || b > n) throw ConfigError(std::string("estimator: ") + name + " must lie in [1, n]");
    };
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, estimator::BasicStochastic> ||
                        std::is_same_v<T, estimator::VarianceReduced>) {
            check_batch(v.b_g, "b_g");
            check_batch(v.b_h, "b_h");
          } else if constexpr (std::is_same_v<T, estimator::LazyVR>) {
            check_batch(v.b_g, "b_g");
          } else if constexpr (std::is_same_v<T, estimator::Auxiliary>) {
            if (!v.helper) throw ConfigError("estimator: auxiliary variant needs a helper oracle");
            if (v.helper->dim() != oracle.dim())
              throw ConfigError("estimator: helper oracle dimension does not match");
          }
        },
        variant);
  }
};

// Default batch sizes tied to the inner-loop length m.
inline estimator::VarianceReduced default_vr(std::size_t m, std::size_t n) {
  const std::size_t m2 = m * m;
  return {std::min(m2 * m2, n), std::min(m2, n)};
}
inline estimator::LazyVR default_lazy_vr(std::size_t m, std::size_t n) { return {std::min(m * m, n)}; }

struct HelperEstimates {
  Vector g;
  Matrix H;
  std::uint64_t grad_component_evals = 0;
  std::uint64_t hess_component_evals = 0;
  std::uint64_t helper_grad_evals = 0;
  std::uint64_t helper_hess_evals = 0;
  bool used_snapshot = false;
};

struct SnapshotNeeds {
  bool grad = false;
  bool hess = false;
  bool helper = false;
  bool any() const { return grad || hess || helper; }
};

inline SnapshotNeeds snapshot_needs(const EstimatorVariant& v) {
  if (std::holds_alternative<estimator::VarianceReduced>(v) || std::holds_alternative<estimator::LazyVR>(v))
    return {true, true, false};
  if (std::holds_alternative<estimator::LazyExact>(v)) return {false, true, false};
  if (std::holds_alternative<estimator::Auxiliary>(v)) return {true, true, true};
  return {};
}

// Full information at the anchor point x~. Fields not required by the
// estimator in use stay empty.
struct Snapshot {
  Vector x;
  double f = 0.0;
  Vector grad;
  Matrix hess;
  Vector helper_grad;  // grad h(x~) for a fixed helper
  Matrix helper_hess;  // hess h(x~) for a fixed helper
  std::size_t age = 0;
  // Evaluations spent building this snapshot.
  std::uint64_t grad_evals = 0;
  std::uint64_t hess_evals = 0;
  std::uint64_t helper_grad_evals = 0;
  std::uint64_t helper_hess_evals = 0;
};

inline Snapshot take_snapshot(const ObjectiveOracle& oracle, const Vector& x, SnapshotNeeds needs,
                              const ObjectiveOracle* helper = nullptr) {
  Snapshot s;
  s.x = x;
  s.f = oracle.value(x);
  if (needs.grad) {
    s.grad = oracle.gradient(x);
    s.grad_evals = oracle.size();
  }
  if (needs.hess) {
    s.hess = oracle.hessian(x);
    s.hess_evals = oracle.size();
  }
  if (needs.helper) {
    if (!helper) throw ConfigError("snapshot: helper quantities requested without a helper oracle");
    s.helper_grad = helper->gradient(x);
    s.helper_hess = helper->hessian(x);
    s.helper_grad_evals = helper->size();
    s.helper_hess_evals = helper->size();
  }
  return s;
}

// Uniform sampling with replacement.
inline std::vector<std::size_t> sample_batch(std::size_t n, std::size_t b, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> idx(b);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

// ---------------------------------------------------------------------------

inline HelperEstimates estimate_exact(const ObjectiveOracle& oracle, const Vector& x) {
  HelperEstimates e;
  e.g = oracle.gradient(x);
  e.H = oracle.hessian(x);
  e.grad_component_evals = oracle.size();
  e.hess_component_evals = oracle.size();
  return e;
}

inline HelperEstimates estimate_basic_batches(const ObjectiveOracle& oracle, const Vector& x,
                                              std::span<const std::size_t> batch_g,
                                              std::span<const std::size_t> batch_h) {
  HelperEstimates e;
  e.g = oracle.batch_gradient(batch_g, x);
  e.H = oracle.batch_hessian(batch_h, x);
  e.grad_component_evals = batch_g.size();
  e.hess_component_evals = batch_h.size();
  return e;
}

inline HelperEstimates estimate_basic(const ObjectiveOracle& oracle, const Vector& x,
                                      const estimator::BasicStochastic& cfg, Rng& rng) {
  const auto bg = sample_batch(oracle.size(), cfg.b_g, rng);
  const auto bh = sample_batch(oracle.size(), cfg.b_h, rng);
  return estimate_basic_batches(oracle, x, bg, bh);
}

namespace detail {

inline void check_snapshot(const ObjectiveOracle& oracle, const Snapshot& snap, bool need_grad) {
  if (snap.x.size() != oracle.dim() || snap.hess.rows() != oracle.dim() ||
      (need_grad && snap.grad.size() != oracle.dim()))
    throw ConfigError("estimator: snapshot dimension mismatch or missing snapshot quantities");
}

}  // namespace detail

// Variance-reduced estimate with h1 the mean over batch_g. With batch_h
// present, H uses h2 = mean over batch_h; without it, h2 = 0 (lazy Hessian).
inline HelperEstimates estimate_vr_batches(const ObjectiveOracle& oracle, const Vector& x, const Snapshot& snap,
                                           std::span<const std::size_t> batch_g,
                                           std::optional<std::span<const std::size_t>> batch_h) {
  detail::check_snapshot(oracle, snap, true);
  const Vector dx = x - snap.x;
  HelperEstimates e;
  e.used_snapshot = true;
  const Matrix h1_hess_tilde = oracle.batch_hessian(batch_g, snap.x);
  e.g = oracle.batch_gradient(batch_g, x) - oracle.batch_gradient(batch_g, snap.x) + snap.grad +
        (snap.hess - h1_hess_tilde) * dx;
  e.grad_component_evals = 2 * batch_g.size();
  e.hess_component_evals = batch_g.size();
  if (batch_h) {
    e.H = oracle.batch_hessian(*batch_h, x) - oracle.batch_hessian(*batch_h, snap.x) + snap.hess;
    e.hess_component_evals += 2 * batch_h->size();
  } else {
    e.H = snap.hess;
  }
  return e;
}

inline HelperEstimates estimate_vr(const ObjectiveOracle& oracle, const Vector& x, const Snapshot& snap,
                                   const estimator::VarianceReduced& cfg, Rng& rng) {
  const auto bg = sample_batch(oracle.size(), cfg.b_g, rng);
  const auto bh = sample_batch(oracle.size(), cfg.b_h, rng);
  return estimate_vr_batches(oracle, x, snap, bg, std::span<const std::size_t>(bh));
}

inline HelperEstimates estimate_vr(const ObjectiveOracle& oracle, const Vector& x, const Snapshot& snap,
                                   const estimator::LazyVR& cfg, Rng& rng) {
  const auto bg = sample_batch(oracle.size(), cfg.b_g, rng);
  return estimate_vr_batches(oracle, x, snap, bg, std::nullopt);
}

// h1 = f, h2 = 0: exact gradient, snapshot Hessian.
inline HelperEstimates estimate_lazy_exact(const ObjectiveOracle& oracle, const Vector& x, const Snapshot& snap) {
  detail::check_snapshot(oracle, snap, false);
  HelperEstimates e;
  e.used_snapshot = true;
  e.g = oracle.gradient(x);
  e.H = snap.hess;
  e.grad_component_evals = oracle.size();
  return e;
}

// h1 = h2 = helper, a fixed auxiliary objective. The main oracle is touched
// only through the snapshot.
inline HelperEstimates estimate_auxiliary(const ObjectiveOracle& main, const ObjectiveOracle& helper,
                                          const Vector& x, const Snapshot& snap) {
  if (helper.dim() != main.dim()) throw ConfigError("auxiliary: helper dimension does not match");
  detail::check_snapshot(main, snap, true);
  if (snap.helper_grad.size() != main.dim() || snap.helper_hess.rows() != main.dim())
    throw ConfigError("auxiliary: snapshot lacks helper quantities");
  const Vector dx = x - snap.x;
  HelperEstimates e;
  e.used_snapshot = true;
  e.g = helper.gradient(x) - snap.helper_grad + snap.grad + (snap.hess - snap.helper_hess) * dx;
  e.H = helper.hessian(x) - snap.helper_hess + snap.hess;
  e.helper_grad_evals = helper.size();
  e.helper_hess_evals = helper.size();
  return e;
}

// ---------------------------------------------------------------------------

// Stateful front end used by the optimizer: owns the configuration and any
// batches fixed at construction.
class HelperEstimator {
 public:
  HelperEstimator(OraclePtr oracle, EstimatorConfig config, Rng& rng)
      : oracle_(std::move(oracle)), config_(std::move(config)) {
    config_.validate(*oracle_);
    if (const auto* b = std::get_if<estimator::BasicStochastic>(&config_.variant); b && !b->resample_each_step) {
      fixed_g_ = sample_batch(oracle_->size(), b->b_g, rng);
      fixed_h_ = sample_batch(oracle_->size(), b->b_h, rng);
    }
  }

  const EstimatorConfig& config() const { return config_; }
  SnapshotNeeds needs() const { return snapshot_needs(config_.variant); }

  // H is constant between snapshot refreshes, so one factorization serves
  // the whole inner loop.
  bool lazy_hessian() const {
    return std::holds_alternative<estimator::LazyVR>(config_.variant) ||
           std::holds_alternative<estimator::LazyExact>(config_.variant);
  }

  const ObjectiveOracle* helper() const {
    if (const auto* a = std::get_if<estimator::Auxiliary>(&config_.variant)) return a->helper.get();
    return nullptr;
  }

  Snapshot snapshot(const Vector& x) const { return take_snapshot(*oracle_, x, needs(), helper()); }

  HelperEstimates estimate(const Vector& x, const Snapshot* snap, Rng& rng) const {
    const ObjectiveOracle& f = *oracle_;
    auto need_snap = [&]() -> const Snapshot& {
      if (!snap) throw ConfigError("estimator: variant requires a snapshot");
      return *snap;
    };
    return std::visit(
        [&](const auto& v) -> HelperEstimates {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, estimator::Exact>) {
            return estimate_exact(f, x);
          } else if constexpr (std::is_same_v<T, estimator::BasicStochastic>) {
            if (!v.resample_each_step) return estimate_basic_batches(f, x, fixed_g_, fixed_h_);
            return estimate_basic(f, x, v, rng);
          } else if constexpr (std::is_same_v<T, estimator::VarianceReduced> ||
                               std::is_same_v<T, estimator::LazyVR>) {
            return estimate_vr(f, x, need_snap(), v, rng);
          } else if constexpr (std::is_same_v<T, estimator::LazyExact>) {
            return estimate_lazy_exact(f, x, need_snap());
          } else {
            return estimate_auxiliary(f, *v.helper, x, need_snap());
          }
        },
        config_.variant);
  }

 private:
  OraclePtr oracle_;
  EstimatorConfig config_;
  std::vector<std::size_t> fixed_g_;
  std::vector<std::size_t> fixed_h_;
};

// ---------------------------------------------------------------------------
// Helper objectives and empirical similarity.

// h_B = (1/b) sum_{i in B} f_i over a fixed index multiset.
class SubsetOracle final : public ObjectiveOracle {
 public:
  SubsetOracle(OraclePtr base, std::vector<std::size_t> indices)
      : base_(std::move(base)), idx_(std::move(indices)) {
    if (idx_.empty()) throw ConfigError("subset oracle: empty index set");
    for (auto i : idx_)
      if (i >= base_->size()) throw ConfigError("subset oracle: index out of range");
  }
  std::size_t size() const override { return idx_.size(); }
  Index dim() const override { return base_->dim(); }
  double lipschitz() const override { return base_->lipschitz(); }
  double component_value(std::size_t i, const Vector& x) const override {
    return base_->component_value(idx_[i], x);
  }
  void add_component_gradient(std::size_t i, const Vector& x, double w, Vector& out) const override {
    base_->add_component_gradient(idx_[i], x, w, out);
  }
  void add_component_hessian(std::size_t i, const Vector& x, double w, Matrix& out) const override {
    base_->add_component_hessian(idx_[i], x, w, out);
  }

 private:
  OraclePtr base_;
  std::vector<std::size_t> idx_;
};

// h = 0.
class ZeroOracle final : public ObjectiveOracle {
 public:
  explicit ZeroOracle(Index d) : d_(d) {}
  std::size_t size() const override { return 1; }
  Index dim() const override { return d_; }
  double lipschitz() const override { return 0.0; }
  double component_value(std::size_t, const Vector&) const override { return 0.0; }
  void add_component_gradient(std::size_t, const Vector&, double, Vector&) const override {}
  void add_component_hessian(std::size_t, const Vector&, double, Matrix&) const override {}

 private:
  Index d_;
};

enum class SimilarityMode { bounded, lipschitz };

struct SimilarityEstimate {
  double delta1 = 0.0;
  double delta2 = 0.0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

// Empirical similarity constants of a helper h used as h1 = h2 = h.
//   bounded:   max ||grad h(x) - grad f(x)||,  max ||hess h(x) - hess f(x)||
//   lipschitz: max ||G - grad f(x)|| / ||x - x~||^2,  max ||H - hess f(x)|| / ||x - x~||
// with (G, H) the snapshot-corrected estimates at (x, x~).
inline SimilarityEstimate measure_similarity(const ObjectiveOracle& main, const ObjectiveOracle& helper,
                                             std::span<const std::pair<Vector, Vector>> pairs,
                                             SimilarityMode mode) {
  if (pairs.size() < 10) throw ConfigError("measure_similarity: need at least 10 point pairs");
  if (helper.dim() != main.dim()) throw ConfigError("measure_similarity: helper dimension does not match");
  SimilarityEstimate out;
  for (const auto& [x, xt] : pairs) {
    if (mode == SimilarityMode::bounded) {
      out.delta1 = std::max(out.delta1, (helper.gradient(x) - main.gradient(x)).norm());
      out.delta2 = std::max(out.delta2, spectral_norm_sym(helper.hessian(x) - main.hessian(x)));
      continue;
    }
    const double dist = (x - xt).norm();
    if (dist == 0.0) {
      ++out.skipped;
      out.warnings.emplace_back("measure_similarity: coincident point pair skipped");
      continue;
    }
    const Snapshot snap = take_snapshot(main, xt, {true, true, true}, &helper);
    const HelperEstimates e = estimate_auxiliary(main, helper, x, snap);
    out.delta1 = std::max(out.delta1, (e.g - main.gradient(x)).norm() / (dist * dist));
    out.delta2 = std::max(out.delta2, spectral_norm_sym(e.H - main.hessian(x)) / dist);
  }
  return out;
}

}  // namespace hcn
