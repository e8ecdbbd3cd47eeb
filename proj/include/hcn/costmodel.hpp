#pragma once

// Arithmetic-cost accounting in gradient-equivalent units, where one
// component Hessian costs d_eff component gradients, and the per-accuracy
// cost objectives used to pick the inner-loop length m of the
// variance-reduced and lazy methods.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string_view>

#include "hcn/core.hpp"

namespace hcn {

struct CostLedger {
  std::uint64_t grad_units = 0;  // component-gradient evaluations
  std::uint64_t hess_units = 0;  // component-Hessian evaluations
  std::uint64_t factorizations = 0;
  double d_eff = 1.0;
  // Convergence diagnostics; never part of the algorithm's cost.
  std::uint64_t audit_grad_units = 0;
  std::uint64_t audit_hess_units = 0;
  // Evaluations of an auxiliary helper oracle (unlabeled data).
  std::uint64_t helper_grad_units = 0;
  std::uint64_t helper_hess_units = 0;

  double gradcost_total() const {
    return static_cast<double>(grad_units) + d_eff * static_cast<double>(hess_units);
  }

  void merge(const CostLedger& other) {
    grad_units += other.grad_units;
    hess_units += other.hess_units;
    factorizations += other.factorizations;
    audit_grad_units += other.audit_grad_units;
    audit_hess_units += other.audit_hess_units;
    helper_grad_units += other.helper_grad_units;
    helper_hess_units += other.helper_hess_units;
  }
};

struct LedgerSummary {
  double gradcost_total = 0.0;
  std::uint64_t grad_units = 0;
  std::uint64_t hess_units = 0;
  std::uint64_t factorizations = 0;
  double d_eff = 1.0;
  std::uint64_t audit_grad_units = 0;
  std::uint64_t audit_hess_units = 0;
  std::uint64_t helper_grad_units = 0;
  std::uint64_t helper_hess_units = 0;
};

inline LedgerSummary ledger_summary(const CostLedger& ledger) {
  return {ledger.gradcost_total(), ledger.grad_units,        ledger.hess_units,
          ledger.factorizations,   ledger.d_eff,             ledger.audit_grad_units,
          ledger.audit_hess_units, ledger.helper_grad_units, ledger.helper_hess_units};
}

enum class CostMethod { vr, lazy };

inline std::string_view to_string(CostMethod m) { return m == CostMethod::vr ? "vr" : "lazy"; }

namespace detail {

using u128 = unsigned __int128;

inline void check_nd(std::uint64_t n, std::uint64_t d, std::uint64_t m) {
  if (n < 1 || d < 1 || m < 1) throw ConfigError("cost model: n, d and m must be >= 1");
  if (n > 10'000'000ULL || d > 10'000'000ULL || n * d > 100'000'000'000ULL)
    throw ConfigError("cost model: n*d too large for exact integer evaluation");
}

// min(m^k, cap) without overflow.
inline u128 capped_pow(std::uint64_t m, int k, u128 cap) {
  u128 acc = 1;
  for (int i = 0; i < k; ++i) {
    acc *= m;
    if (acc >= cap) return cap;
  }
  return acc;
}

// d n + d min(m^3, n m) + min(m^5, n m); the VR cost is this over m.
inline u128 vr_numerator(std::uint64_t n, std::uint64_t d, std::uint64_t m) {
  const u128 nm = static_cast<u128>(n) * m;
  return static_cast<u128>(d) * n + static_cast<u128>(d) * capped_pow(m, 3, nm) + capped_pow(m, 5, nm);
}

// n d + min(m^3, m n); the lazy cost is this over sqrt(m).
inline u128 lazy_numerator(std::uint64_t n, std::uint64_t d, std::uint64_t m) {
  const u128 nm = static_cast<u128>(n) * m;
  return static_cast<u128>(n) * d + capped_pow(m, 3, nm);
}

inline double to_double(u128 v) { return static_cast<double>(v); }

// Exact "a < b" on the cost values.
inline bool vr_less(u128 num_a, std::uint64_t m_a, u128 num_b, std::uint64_t m_b) {
  return num_a * m_b < num_b * m_a;
}
inline bool lazy_less(u128 num_a, std::uint64_t m_a, u128 num_b, std::uint64_t m_b) {
  return num_a * num_a * m_b < num_b * num_b * m_a;
}

inline std::uint64_t isqrt_ceil(std::uint64_t n) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while (r * r < n) ++r;
  return r;
}

}  // namespace detail

// (d n + d (m^3 ^ n m) + (m^5 ^ n m)) / m
inline double g_vr(std::uint64_t n, std::uint64_t d, std::uint64_t m) {
  detail::check_nd(n, d, m);
  return detail::to_double(detail::vr_numerator(n, d, m)) / static_cast<double>(m);
}

// (n d + (m^3 ^ m n)) / sqrt(m)
inline double g_lazy(std::uint64_t n, std::uint64_t d, std::uint64_t m) {
  detail::check_nd(n, d, m);
  return detail::to_double(detail::lazy_numerator(n, d, m)) / std::sqrt(static_cast<double>(m));
}

inline double cost_objective(CostMethod method, std::uint64_t n, std::uint64_t d, std::uint64_t m) {
  return method == CostMethod::vr ? g_vr(n, d, m) : g_lazy(n, d, m);
}

struct MChoice {
  std::uint64_t m_star = 1;
  double cost_star = 0.0;
};

// Integer minimization of the cost objective over m in [1, n d], ties to the
// smaller m. Values are compared exactly on integer numerators.
//
// Every m < ceil(sqrt(n)) is evaluated. From m0 = ceil(sqrt(n)) on, both
// minima saturate at n m, so the objectives reduce to closed forms whose
// minimum over the tail is known exactly:
//   vr:   d n / m + d n + n, strictly decreasing, tail minimum at m = n d;
//   lazy: n d / sqrt(m) + n sqrt(m), convex with minimum at m = d.
// The result therefore equals an exhaustive scan of [1, n d].
inline MChoice choose_m(std::uint64_t n, std::uint64_t d, CostMethod method) {
  detail::check_nd(n, d, 1);
  const std::uint64_t upper = n * d;
  const std::uint64_t tail_start = detail::isqrt_ceil(n);
  const bool vr = method == CostMethod::vr;
  auto numerator = [&](std::uint64_t m) {
    return vr ? detail::vr_numerator(n, d, m) : detail::lazy_numerator(n, d, m);
  };
  auto less = [&](detail::u128 a, std::uint64_t ma, detail::u128 b, std::uint64_t mb) {
    return vr ? detail::vr_less(a, ma, b, mb) : detail::lazy_less(a, ma, b, mb);
  };

  std::uint64_t best_m = 1;
  detail::u128 best_num = numerator(1);
  const std::uint64_t head_end = std::min(upper, tail_start > 0 ? tail_start - 1 : 0);
  for (std::uint64_t m = 2; m <= head_end; ++m) {
    const auto num = numerator(m);
    if (less(num, m, best_num, best_m)) {
      best_num = num;
      best_m = m;
    }
  }
  if (tail_start <= upper) {
    const std::uint64_t m_tail = vr ? upper : std::clamp<std::uint64_t>(d, tail_start, upper);
    const auto num = numerator(m_tail);
    if (less(num, m_tail, best_num, best_m)) {
      best_num = num;
      best_m = m_tail;
    }
  }
  return {best_m, cost_objective(method, n, d, best_m)};
}

}  // namespace hcn
