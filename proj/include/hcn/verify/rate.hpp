#pragma once

// Rate analysis of a gap sequence F_t = f(x_t) - f* under gradient dominance
// of degree alpha. With gamma = 3 / (2 alpha) the gaps obey
//
//   F_t - F_{t+1} >= C F_{t+1}^gamma - a,
//
// which is sublinear for alpha < 3/2, linear for alpha = 3/2 and
// superlinear (F_{t+1} <~ F_t^{1/gamma}) for alpha > 3/2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "hcn/core.hpp"
#include "hcn/trace.hpp"

namespace hcn {

enum class RateRegime { sublinear, linear, superlinear };

inline std::string_view to_string(RateRegime r) {
  switch (r) {
    case RateRegime::sublinear: return "sublinear";
    case RateRegime::linear: return "linear";
    default: return "superlinear";
  }
}

inline RateRegime regime_for_alpha(double alpha) {
  if (alpha < 1.5) return RateRegime::sublinear;
  if (alpha == 1.5) return RateRegime::linear;
  return RateRegime::superlinear;
}

struct RateFitOptions {
  double alpha = 2.0;
  // Required contraction F_{t+1} <= F_t^p (1 + slack); p = 0 means 1 / gamma.
  double contraction = 0.0;
  double slack = 0.0;
  std::size_t terminal_window = 5;  // pairs checked in the superlinear phase
  std::size_t burn_in = 5;          // leading points dropped before slope fits
  double tail_fraction = 0.5;
  double sublinear_slope_target = -2.0;
  double sublinear_slope_tolerance = 0.3;
  // Gaps at or below floor_rel * max(1, |f*|) are treated as converged and
  // excluded; they carry only rounding noise.
  double floor_rel = 1e-13;
};

struct RateFit {
  double gamma = 0.0;
  double C_hat = 0.0;
  double a_hat = 0.0;
  RateRegime regime = RateRegime::sublinear;
  std::size_t violations = 0;
  std::size_t usable = 0;  // leading gaps above the floor
  // Least-squares slope of log F_t against log t over the tail of the
  // pre-superlinear segment (t counted from 1).
  double loglog_slope = std::numeric_limits<double>::quiet_NaN();
  // Slope of log F_t against t (linear regime).
  double log_linear_slope = std::numeric_limits<double>::quiet_NaN();
  // First index from which every later pair contracts; usable if none.
  std::size_t superlinear_start = 0;
  bool superlinear_detected = false;
};

namespace detail {

inline double ls_slope(std::span<const double> xs, std::span<const double> ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

// gaps[t] = F_{t+1}, i.e. the gap after t + 1 iterations.
inline RateFit fit_rate_gaps(std::span<const double> gaps, double f_star, const RateFitOptions& opts = {}) {
  if (!(opts.alpha >= 1.0 && opts.alpha <= 2.0)) throw ConfigError("fit_rate: alpha must lie in [1, 2]");
  RateFit fit;
  fit.gamma = 3.0 / (2.0 * opts.alpha);
  fit.regime = regime_for_alpha(opts.alpha);
  const double p = opts.contraction > 0.0 ? opts.contraction : 1.0 / fit.gamma;

  const double floor = opts.floor_rel * std::max(1.0, std::abs(f_star));
  std::size_t usable = 0;
  while (usable < gaps.size() && std::isfinite(gaps[usable]) && gaps[usable] > floor) ++usable;
  fit.usable = usable;
  if (usable < 8) throw ConfigError("fit_rate: fewer than 8 usable points in the trace");
  const auto F = gaps.first(usable);

  // Recurrence constants.
  double min_drop = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t + 1 < usable; ++t) min_drop = std::min(min_drop, F[t] - F[t + 1]);
  fit.a_hat = std::max(0.0, -min_drop);
  fit.C_hat = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t + 1 < usable; ++t)
    fit.C_hat = std::min(fit.C_hat, (F[t] - F[t + 1] + fit.a_hat) / std::pow(F[t + 1], fit.gamma));

  auto contracts = [&](std::size_t t) {
    return F[t] < 1.0 && F[t + 1] <= std::pow(F[t], p) * (1.0 + opts.slack);
  };
  fit.superlinear_start = usable;
  if (fit.regime == RateRegime::superlinear) {
    std::size_t start = usable - 1;
    while (start > 0 && contracts(start - 1)) --start;
    if (start < usable - 1) fit.superlinear_start = start;
  }

  auto tail_slope = [&](std::size_t end, bool loglog) {
    if (end <= opts.burn_in + 1) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t len = end - opts.burn_in;
    const auto keep = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(opts.tail_fraction * len)));
    std::vector<double> xs, ys;
    for (std::size_t t = end - std::min(keep, len); t < end; ++t) {
      const double iter = static_cast<double>(t + 1);
      xs.push_back(loglog ? std::log(iter) : iter);
      ys.push_back(std::log(F[t]));
    }
    return detail::ls_slope(xs, ys);
  };
  const std::size_t pre_end = std::min(usable, fit.superlinear_start + 1);
  fit.loglog_slope = tail_slope(pre_end, true);
  fit.log_linear_slope = tail_slope(usable, false);

  switch (fit.regime) {
    case RateRegime::superlinear: {
      const std::size_t pairs = std::min(opts.terminal_window, usable - 1);
      for (std::size_t t = usable - 1 - pairs; t + 1 < usable; ++t)
        if (!contracts(t)) ++fit.violations;
      fit.superlinear_detected = pairs == opts.terminal_window && fit.violations == 0;
      break;
    }
    case RateRegime::linear:
      if (!(fit.log_linear_slope < 0.0)) ++fit.violations;
      break;
    case RateRegime::sublinear:
      if (!(fit.loglog_slope <= opts.sublinear_slope_target + opts.sublinear_slope_tolerance)) ++fit.violations;
      break;
  }
  return fit;
}

inline RateFit fit_rate(const Trace& trace, double f_star, const RateFitOptions& opts = {}) {
  std::vector<double> gaps;
  gaps.reserve(trace.size());
  for (const auto& row : trace) gaps.push_back(row.f - f_star);
  return fit_rate_gaps(gaps, f_star, opts);
}

}  // namespace hcn
