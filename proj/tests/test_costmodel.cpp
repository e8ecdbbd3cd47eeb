#include <gtest/gtest.h>

#include <cmath>

#include "hcn/costmodel.hpp"

using namespace hcn;

namespace {

// Direct floating evaluation of the two objectives, independent of the
// integer implementation.
double vr_formula(double n, double d, double m) {
  return (d * n + d * std::min(m * m * m, n * m) + std::min(std::pow(m, 5), n * m)) / m;
}
double lazy_formula(double n, double d, double m) { return (n * d + std::min(m * m * m, m * n)) / std::sqrt(m); }

}  // namespace

TEST(GVr, InnerLengthOne) {
  for (std::uint64_t n : {1u, 7u, 1000u})
    for (std::uint64_t d : {1u, 3u, 50u}) EXPECT_EQ(g_vr(n, d, 1), static_cast<double>(d * (n + 1) + 1));
}

TEST(GVr, WorkedExample) { EXPECT_EQ(g_vr(1000, 100, 10), 21000.0); }

TEST(GLazy, InnerLengthOne) {
  for (std::uint64_t n : {1u, 7u, 1000u})
    for (std::uint64_t d : {1u, 3u, 50u}) EXPECT_EQ(g_lazy(n, d, 1), static_cast<double>(n * d + 1));
}

TEST(GLazy, WorkedExample) { EXPECT_EQ(g_lazy(1000, 100, 100), 20000.0); }

TEST(CostObjectives, AgreeWithDirectFormula) {
  for (std::uint64_t n : {3u, 100u, 4096u})
    for (std::uint64_t d : {1u, 10u, 300u})
      for (std::uint64_t m : {1u, 2u, 9u, 64u, 1000u}) {
        EXPECT_DOUBLE_EQ(g_vr(n, d, m), vr_formula(n, d, m));
        EXPECT_DOUBLE_EQ(g_lazy(n, d, m), lazy_formula(n, d, m));
      }
}

TEST(CostObjectives, RejectZeroArguments) {
  EXPECT_THROW(g_vr(0, 1, 1), ConfigError);
  EXPECT_THROW(g_lazy(1, 0, 1), ConfigError);
  EXPECT_THROW(g_vr(1, 1, 0), ConfigError);
  EXPECT_THROW(choose_m(0, 1, CostMethod::lazy), ConfigError);
}

TEST(ChooseM, EqualsExhaustiveScan) {
  for (std::uint64_t n : {1u, 2u, 10u, 37u, 100u, 250u})
    for (std::uint64_t d : {1u, 2u, 5u, 17u, 60u})
      for (auto method : {CostMethod::vr, CostMethod::lazy}) {
        std::uint64_t best_m = 1;
        double best = cost_objective(method, n, d, 1);
        for (std::uint64_t m = 2; m <= n * d; ++m) {
          const double c = cost_objective(method, n, d, m);
          // strict improvement beyond rounding, so ties go to the smaller m
          if (c < best * (1 - 1e-15)) {
            best = c;
            best_m = m;
          }
        }
        const auto got = choose_m(n, d, method);
        EXPECT_EQ(got.cost_star, cost_objective(method, n, d, got.m_star));
        EXPECT_NEAR(got.cost_star, best, 1e-12 * best) << n << " " << d << " " << to_string(method);
        EXPECT_EQ(got.m_star, best_m) << n << " " << d << " " << to_string(method);
      }
}

TEST(ChooseM, LazyUnitDimensionMinimizesSweep) {
  const std::uint64_t n = 500;
  const auto got = choose_m(n, 1, CostMethod::lazy);
  for (std::uint64_t m = 1; m <= n; ++m) EXPECT_LE(got.cost_star, lazy_formula(n, 1, m) * (1 + 1e-15));
}

TEST(ChooseM, LazyClosedFormWithinFactorTwo) {
  // Below sqrt(n) the objective is (nd + m^3)/sqrt(m), minimized at
  // m = (nd/5)^{1/3}; above it (nd + mn)/sqrt(m), minimized at m = d.
  for (std::uint64_t n : {100u, 1000u, 10000u})
    for (std::uint64_t d : {1u, 2u, 5u, 10u, 20u, 50u, 100u}) {
      const double nn = static_cast<double>(n), dd = static_cast<double>(d);
      const double low = std::min(std::cbrt(nn * dd / 5), std::sqrt(nn));
      const double high = std::max(dd, std::sqrt(nn));
      const double closed = lazy_formula(nn, dd, low) <= lazy_formula(nn, dd, high) ? low : high;
      const double m = static_cast<double>(choose_m(n, d, CostMethod::lazy).m_star);
      EXPECT_LE(m, 2 * closed) << n << " " << d;
      EXPECT_GE(m, closed / 2) << n << " " << d;
    }
}

TEST(ChooseM, MinimizedValuesTrackScalingEnvelopes) {
  for (std::uint64_t n : {100u, 1000u, 10000u})
    for (std::uint64_t d : {1u, 2u, 5u, 10u, 20u, 50u, 100u}) {
      const double nd = static_cast<double>(n * d), nn = static_cast<double>(n);
      const double vr_env = std::min(std::pow(nd, 0.8), std::pow(nn, 2.0 / 3) * d + nn);
      const double lazy_env = std::min(std::pow(nd, 5.0 / 6), nn * std::sqrt(static_cast<double>(d)));
      const double vr = choose_m(n, d, CostMethod::vr).cost_star;
      const double lazy = choose_m(n, d, CostMethod::lazy).cost_star;
      EXPECT_LE(vr, 4 * vr_env) << n << " " << d;
      EXPECT_GE(vr, vr_env / 4) << n << " " << d;
      EXPECT_LE(lazy, 4 * lazy_env) << n << " " << d;
      EXPECT_GE(lazy, lazy_env / 4) << n << " " << d;
    }
}

TEST(ChooseM, LargeInputsStayExact) {
  const auto vr = choose_m(1000000, 1000, CostMethod::vr);
  const auto lazy = choose_m(1000000, 1000, CostMethod::lazy);
  EXPECT_EQ(vr.cost_star, g_vr(1000000, 1000, vr.m_star));
  EXPECT_EQ(lazy.cost_star, g_lazy(1000000, 1000, lazy.m_star));
  EXPECT_LE(lazy.cost_star, g_lazy(1000000, 1000, 1000));
}

TEST(Ledger, FreshLedgerIsZero) {
  const auto s = ledger_summary(CostLedger{});
  EXPECT_EQ(s.gradcost_total, 0.0);
  EXPECT_EQ(s.grad_units, 0u);
  EXPECT_EQ(s.hess_units, 0u);
  EXPECT_EQ(s.factorizations, 0u);
  EXPECT_EQ(s.audit_grad_units + s.audit_hess_units, 0u);
}

TEST(Ledger, GradientEquivalentTotal) {
  CostLedger l;
  l.grad_units = 10;
  l.hess_units = 2;
  l.d_eff = 5;
  l.audit_grad_units = 1000;
  l.audit_hess_units = 1000;
  EXPECT_EQ(ledger_summary(l).gradcost_total, 20.0);
  EXPECT_EQ(ledger_summary(l).audit_grad_units, 1000u);
}

TEST(Ledger, MergeAddsCounters) {
  CostLedger a, b;
  a.grad_units = 3;
  a.factorizations = 1;
  b.grad_units = 4;
  b.hess_units = 2;
  b.helper_grad_units = 5;
  a.merge(b);
  EXPECT_EQ(a.grad_units, 7u);
  EXPECT_EQ(a.hess_units, 2u);
  EXPECT_EQ(a.factorizations, 1u);
  EXPECT_EQ(a.helper_grad_units, 5u);
}
