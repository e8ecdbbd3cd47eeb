#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace hcn {

// One iteration of a run. Counters are cumulative.
struct TraceRow {
  std::uint64_t iter = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  double mu_M = std::numeric_limits<double>::quiet_NaN();  // NaN unless recorded
  double r = 0.0;
  bool snapshot = false;
  std::uint64_t grad_units = 0;
  std::uint64_t hess_units = 0;
  std::uint64_t factorizations = 0;
  double gradcost_total = 0.0;
  std::uint64_t audit_grad_units = 0;
  std::uint64_t audit_hess_units = 0;
  std::int64_t wall_ns = 0;
};

using Trace = std::vector<TraceRow>;

}  // namespace hcn
