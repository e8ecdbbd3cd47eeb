#pragma once

// Named experiment presets. Each writes one trace CSV per method plus a
// summary CSV into the output directory.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "hcn/costmodel.hpp"
#include "hcn/harness/config.hpp"
#include "hcn/harness/csv.hpp"

namespace hcn {

struct PresetOptions {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = ".";
  KeyValues overrides;  // applied on top of the preset defaults
  bool timing = false;
  std::vector<std::size_t> m_values;  // auxiliary and sweep-m; empty means the default list
};

struct PresetOutput {
  std::string name;
  std::vector<MethodRun> runs;
  CsvTable summary{{}};
  std::vector<std::filesystem::path> files;
};

inline std::vector<std::string> preset_names() {
  return {"lazy-vs-vr", "auxiliary", "nonconvex-reg", "diag-nn", "crossover"};
}

namespace detail {

inline KeyValues merged(const std::map<std::string, std::string>& defaults, const PresetOptions& opts) {
  KeyValues kv;
  for (const auto& [k, v] : defaults) kv.set(k, v);
  kv.set("seed", std::to_string(opts.seed));
  kv.set("timing", opts.timing ? "true" : "false");
  for (const auto& [k, v] : opts.overrides.values()) kv.set(k, v);
  return kv;
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

inline std::string fmt_u(std::uint64_t v) { return std::to_string(v); }

inline double gradcost_at(const Trace& trace, double target) {
  for (const auto& r : trace)
    if (r.f <= target) return r.gradcost_total;
  return std::numeric_limits<double>::quiet_NaN();
}

inline double final_f(const MethodRun& run) { return run.trace.empty() ? run.f0 : run.trace.back().f; }

}  // namespace detail

// Runs the listed methods on one problem with matched x0 and iteration
// budget (S m steps each).
inline PresetOutput run_method_comparison(const std::string& preset, const std::map<std::string, std::string>& defaults,
                                          const std::vector<std::string>& methods, const PresetOptions& opts) {
  KeyValues kv = detail::merged(defaults, opts);
  kv.take("method");  // the preset chooses methods
  const ProblemBundle problem = build_problem(kv, false);
  std::vector<MethodSpec> specs;
  for (const auto& name : methods) {
    KeyValues per = kv;
    per.set("method", name);
    specs.push_back(build_method(per, problem));
    kv = per;  // carry consumption marks
  }
  kv.check_all_used();

  detail::ensure_dir(opts.out_dir);
  PresetOutput out;
  out.name = preset;
  for (const auto& spec : specs) {
    out.runs.push_back(run_method(problem, spec));
    const auto path = opts.out_dir / (preset + "_" + spec.name + ".csv");
    write_trace_csv(out.runs.back().trace, path);
    out.files.push_back(path);
  }

  double target = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < specs.size(); ++i)
    if (specs[i].is_cubic()) target = std::max(target, detail::final_f(out.runs[i]));

  out.summary = CsvTable({"method", "iterations", "final_f", "grad_units", "hess_units", "factorizations",
                          "gradcost_total", "target_f", "gradcost_at_target"});
  for (const auto& r : out.runs) {
    out.summary.add_row({r.name, detail::fmt_u(r.trace.size()), format_double(detail::final_f(r)),
                         detail::fmt_u(r.ledger.grad_units), detail::fmt_u(r.ledger.hess_units),
                         detail::fmt_u(r.ledger.factorizations), format_double(r.ledger.gradcost_total()),
                         format_double(target), format_double(detail::gradcost_at(r.trace, target))});
  }
  const auto summary_path = opts.out_dir / (preset + "_summary.csv");
  out.summary.write(summary_path);
  out.files.push_back(summary_path);
  return out;
}

inline const std::vector<std::string>& comparison_methods() {
  static const std::vector<std::string> m{"vr", "lazy_vr", "scn", "cn", "gd", "sgd"};
  return m;
}

inline PresetOutput preset_lazy_vs_vr(const PresetOptions& opts) {
  return run_method_comparison("lazy-vs-vr",
                               {{"problem", "logistic"}, {"data", "synthetic"}, {"n", "2000"}, {"d", "50"},
                                {"l2", "1e-3"}, {"m", "10"}, {"S", "5"}, {"M", "auto"}},
                               comparison_methods(), opts);
}

inline PresetOutput preset_nonconvex_reg(const PresetOptions& opts) {
  return run_method_comparison("nonconvex-reg",
                               {{"problem", "nonconvex"}, {"data", "synthetic"}, {"n", "2000"}, {"d", "50"},
                                {"lambda", "0.1"}, {"m", "10"}, {"S", "5"}, {"M", "auto"}, {"record_mu", "true"}},
                               comparison_methods(), opts);
}

inline PresetOutput preset_diag_nn(const PresetOptions& opts) {
  return run_method_comparison("diag-nn",
                               {{"problem", "diag_nn"}, {"n", "1000"}, {"d", "20"}, {"lambda", "1e-3"},
                                {"m", "10"}, {"S", "5"}, {"M", "auto"}, {"x0", "random"}, {"sgd_step", "0.05"},
                                {"record_mu", "true"}},
                               comparison_methods(), opts);
}

// Cubic Newton with a helper built from unlabeled data. Every m shares the
// same number of rounds S, hence the same number of labeled accesses per
// round; m = 1 is classic cubic Newton.
inline PresetOutput preset_auxiliary(const PresetOptions& opts) {
  const std::vector<std::size_t> ms = opts.m_values.empty() ? std::vector<std::size_t>{1, 2, 4, 8} : opts.m_values;
  KeyValues kv = detail::merged({{"problem", "logistic"}, {"data", "synthetic"}, {"n", "2000"}, {"d", "50"},
                                 {"l2", "1e-3"}, {"S", "3"}, {"M", "auto"}, {"labeled_fraction", "0.5"}},
                                opts);
  kv.set("method", "aux");
  kv.set("helper_seed", kv.get_string("helper_seed", std::to_string(opts.seed + 17)));
  const ProblemBundle problem = build_problem(kv, true);
  std::vector<MethodSpec> specs;
  for (auto m : ms) {
    KeyValues per = kv;
    per.set("m", std::to_string(m));
    MethodSpec spec = build_method(per, problem);
    spec.name = "aux_m" + std::to_string(m);
    specs.push_back(std::move(spec));
    kv = per;
  }
  kv.check_all_used();

  detail::ensure_dir(opts.out_dir);
  PresetOutput out;
  out.name = "auxiliary";
  out.summary = CsvTable({"method", "m", "iterations", "final_f", "labeled_grad_units", "labeled_hess_units",
                          "helper_grad_units", "helper_hess_units"});
  for (std::size_t i = 0; i < specs.size(); ++i) {
    out.runs.push_back(run_method(problem, specs[i]));
    const auto& r = out.runs.back();
    const auto path = opts.out_dir / ("auxiliary_" + specs[i].name + ".csv");
    write_trace_csv(r.trace, path);
    out.files.push_back(path);
    out.summary.add_row({specs[i].name, detail::fmt_u(ms[i]), detail::fmt_u(r.trace.size()),
                         format_double(detail::final_f(r)), detail::fmt_u(r.ledger.grad_units),
                         detail::fmt_u(r.ledger.hess_units), detail::fmt_u(r.ledger.helper_grad_units),
                         detail::fmt_u(r.ledger.helper_hess_units)});
  }
  const auto summary_path = opts.out_dir / "auxiliary_summary.csv";
  out.summary.write(summary_path);
  out.files.push_back(summary_path);
  return out;
}

// d values 1, 2, 5, 10, ... up to n.
inline std::vector<std::uint64_t> crossover_d_values(std::uint64_t n) {
  std::vector<std::uint64_t> ds;
  for (std::uint64_t base = 1; base <= n; base *= 10)
    for (std::uint64_t k : {1ULL, 2ULL, 5ULL})
      if (base * k <= n) ds.push_back(base * k);
  return ds;
}

inline CsvTable crossover_table(const std::vector<std::uint64_t>& ns) {
  CsvTable t({"n", "d", "d_ge_n23", "m_vr", "cost_vr", "m_lazy", "cost_lazy", "lazy_le_vr"});
  for (auto n : ns) {
    for (auto d : crossover_d_values(n)) {
      const auto vr = choose_m(n, d, CostMethod::vr);
      const auto lazy = choose_m(n, d, CostMethod::lazy);
      const bool big_d = static_cast<double>(d) >= std::cbrt(static_cast<double>(n) * static_cast<double>(n));
      t.add_row({std::to_string(n), std::to_string(d), big_d ? "1" : "0", std::to_string(vr.m_star),
                 format_double(vr.cost_star), std::to_string(lazy.m_star), format_double(lazy.cost_star),
                 lazy.cost_star <= vr.cost_star ? "1" : "0"});
    }
  }
  return t;
}

inline PresetOutput preset_crossover(const PresetOptions& opts) {
  std::vector<std::uint64_t> ns{100, 1000, 10000};
  if (opts.overrides.has("n")) ns = {opts.overrides.get_u64("n", 0)};
  opts.overrides.check_all_used();
  detail::ensure_dir(opts.out_dir);
  PresetOutput out;
  out.name = "crossover";
  out.summary = crossover_table(ns);
  const auto path = opts.out_dir / "crossover_grid.csv";
  out.summary.write(path);
  out.files.push_back(path);
  return out;
}

inline PresetOutput run_preset(const std::string& name, const PresetOptions& opts) {
  if (name == "lazy-vs-vr") return preset_lazy_vs_vr(opts);
  if (name == "auxiliary") return preset_auxiliary(opts);
  if (name == "nonconvex-reg") return preset_nonconvex_reg(opts);
  if (name == "diag-nn") return preset_diag_nn(opts);
  if (name == "crossover") return preset_crossover(opts);
  throw ConfigError("unknown preset '" + name + "' (lazy-vs-vr, auxiliary, nonconvex-reg, diag-nn, crossover)");
}

}  // namespace hcn
