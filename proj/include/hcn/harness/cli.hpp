#pragma once

// Command-line front end. Exit status: 0 success, 2 configuration error,
// 3 numerical or I/O failure.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hcn/costmodel.hpp"
#include "hcn/cubic_solver.hpp"
#include "hcn/harness/config.hpp"
#include "hcn/harness/csv.hpp"
#include "hcn/harness/presets.hpp"
#include "hcn/optimizer.hpp"
#include "hcn/verify/audit.hpp"
#include "hcn/verify/rate.hpp"

namespace hcn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

namespace cli {

inline KeyValues gather(const std::string& config_path, const std::vector<std::string>& sets) {
  KeyValues kv = config_path.empty() ? KeyValues{} : load_key_values(config_path);
  for (const auto& s : sets) kv.set_assignment(s);
  return kv;
}

inline void print_run_line(std::ostream& out, const MethodRun& r) {
  const double f = r.trace.empty() ? r.f0 : r.trace.back().f;
  out << r.name << ": iterations=" << r.trace.size() << " final_f=" << format_double(f)
      << " grad_units=" << r.ledger.grad_units << " hess_units=" << r.ledger.hess_units
      << " gradcost_total=" << format_double(r.ledger.gradcost_total()) << '\n';
}

inline int cmd_run(const std::string& config_path, const std::vector<std::string>& sets,
                   const std::optional<std::uint64_t>& seed, bool timing, const std::string& out_path,
                   std::ostream& out) {
  KeyValues kv = gather(config_path, sets);
  if (seed) kv.set("seed", std::to_string(*seed));
  if (timing) kv.set("timing", "true");
  const Experiment e = build_experiment(kv);
  const MethodRun r = run_method(e.problem, e.method);
  write_trace_csv(r.trace, std::filesystem::path(out_path));
  print_run_line(out, r);
  out << "trace written to " << out_path << '\n';
  return kExitOk;
}

inline int cmd_preset(const std::string& name, const std::string& config_path, const std::vector<std::string>& sets,
                      std::uint64_t seed, bool timing, const std::string& data, const std::vector<std::size_t>& ms,
                      const std::string& out_dir, std::ostream& out) {
  PresetOptions opts;
  opts.seed = seed;
  opts.timing = timing;
  opts.out_dir = out_dir;
  opts.overrides = gather(config_path, sets);
  if (!data.empty()) opts.overrides.set("data", data);
  opts.m_values = ms;
  const PresetOutput res = run_preset(name, opts);
  for (const auto& r : res.runs) print_run_line(out, r);
  for (const auto& f : res.files) out << "wrote " << f.string() << '\n';
  return kExitOk;
}

inline int cmd_sweep_m(const std::string& config_path, const std::vector<std::string>& sets,
                       const std::optional<std::uint64_t>& seed, std::vector<std::size_t> ms, std::size_t budget,
                       const std::string& out_dir, std::ostream& out) {
  if (ms.empty()) ms = {1, 2, 5, 10, 20};
  KeyValues base = gather(config_path, sets);
  if (seed) base.set("seed", std::to_string(*seed));
  if (!base.has("method")) base.set("method", "lazy_vr");
  detail::ensure_dir(out_dir);
  CsvTable summary({"m", "S", "iterations", "final_f", "grad_units", "hess_units", "factorizations", "gradcost_total"});
  for (auto m : ms) {
    if (m < 1) throw ConfigError("sweep-m: m values must be >= 1");
    KeyValues kv = base;
    kv.set("m", std::to_string(m));
    const std::size_t S = std::max<std::size_t>(1, budget / m);
    kv.set("S", std::to_string(S));
    const Experiment e = build_experiment(kv);
    MethodRun r = run_method(e.problem, e.method);
    r.name += "_m" + std::to_string(m);
    const auto path = std::filesystem::path(out_dir) / ("sweep_" + r.name + ".csv");
    write_trace_csv(r.trace, path);
    print_run_line(out, r);
    const double f = r.trace.empty() ? r.f0 : r.trace.back().f;
    summary.add_row({std::to_string(m), std::to_string(S), std::to_string(r.trace.size()), format_double(f),
                     std::to_string(r.ledger.grad_units), std::to_string(r.ledger.hess_units),
                     std::to_string(r.ledger.factorizations), format_double(r.ledger.gradcost_total())});
  }
  const auto path = std::filesystem::path(out_dir) / "sweep_summary.csv";
  summary.write(path);
  out << "wrote " << path.string() << '\n';
  return kExitOk;
}

inline int cmd_cost_model(const std::vector<std::uint64_t>& ns, const std::vector<std::uint64_t>& ds,
                          const std::string& out_path, std::ostream& out) {
  CsvTable t({"n", "d", "method", "m_star", "cost_star"});
  for (auto n : ns)
    for (auto d : ds)
      for (auto method : {CostMethod::vr, CostMethod::lazy}) {
        const auto c = choose_m(n, d, method);
        t.add_row({std::to_string(n), std::to_string(d), std::string(to_string(method)), std::to_string(c.m_star),
                   format_double(c.cost_star)});
      }
  t.write(out);
  if (!out_path.empty()) t.write(std::filesystem::path(out_path));
  return kExitOk;
}

// Quick self-checks of the solver, the one-step inequalities, gradient
// dominance and the superlinear regime.
inline int cmd_verify(std::uint64_t seed, std::ostream& out) {
  int failures = 0;
  auto report = [&](const std::string& name, bool ok, const std::string& detail) {
    out << (ok ? "PASS " : "FAIL ") << name << (detail.empty() ? "" : " (" + detail + ")") << '\n';
    if (!ok) ++failures;
  };

  {
    Rng rng(seed);
    std::uniform_real_distribution<double> entry(-2.0, 2.0), mdist(0.5, 10.0);
    double worst = 0.0;
    bool better_found = false;
    for (int k = 0; k < 300; ++k) {
      const Index d = 1 + k % 3;
      Matrix a(d, d);
      for (Index i = 0; i < d; ++i)
        for (Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = entry(rng);
      Vector g(d);
      for (Index i = 0; i < d; ++i) g(i) = entry(rng);
      const double M = mdist(rng);
      const CubicStep s = solve_cubic(factorize(a), g, M);
      const double scale = g.norm() + M * s.r * s.r + spectral_norm_sym(a) * s.r;
      worst = std::max(worst, s.residual / std::max(scale, 1e-300));
      for (int trial = 0; trial < 20; ++trial) {
        Vector y(d);
        for (Index i = 0; i < d; ++i) y(i) = entry(rng);
        if (cubic_model_value(g, a, M, y) < s.model_value - 1e-9) better_found = true;
      }
    }
    report("cubic subproblem optimality", worst <= 1e-8 && !better_found,
           "max relative residual " + format_double(worst));
  }

  {
    auto oracle = logreg_oracle(synthetic_logistic_dataset({200, 10, 0.1, 1.0, seed + 1}), 1e-3);
    RunConfig rc;
    rc.m = 1;
    rc.S = 30;
    rc.x0 = Vector::Zero(oracle->dim());
    rc.M_policy = MPolicy::automatic();
    rc.audit = true;
    rc.timing = false;
    const RunResult r = run(oracle, rc);
    std::size_t bad = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& a : r.audits) {
      if (!a.all_ok()) ++bad;
      worst = std::min({worst, a.slack_descent, a.slack_decrease, a.slack_gradient, a.slack_curvature});
    }
    report("one-step inequalities (exact oracles)", bad == 0, "min slack " + format_double(worst));
  }

  {
    auto [oracle, spec] = synthetic_strongly_convex(200, 10, 1.0, seed + 2);
    Rng rng(seed + 3);
    std::normal_distribution<double> normal(0.0, 3.0);
    std::vector<Vector> pts;
    for (int k = 0; k < 200; ++k) {
      Vector x(oracle->dim());
      for (Index j = 0; j < x.size(); ++j) x(j) = normal(rng);
      pts.push_back(x);
    }
    const auto v = check_grad_dominance(*oracle, spec, pts);
    report("gradient dominance (strongly convex)", v == 0, std::to_string(v) + " violations");
  }

  {
    auto oracle = logreg_oracle(synthetic_logistic_dataset({300, 10, 0.1, 2.0, seed + 4}), 0.1);
    const double L = oracle->lipschitz();
    compute_optimum(*oracle, Vector::Zero(oracle->dim()), L);
    RunConfig rc;
    rc.m = 1;
    rc.S = 40;
    rc.x0 = Vector::Constant(oracle->dim(), 5.0);
    rc.M_policy = MPolicy::fixed(L);
    rc.timing = false;
    const RunResult r = run(oracle, rc);
    RateFitOptions ro;
    ro.contraction = 1.2;
    try {
      const RateFit fit = fit_rate(r.trace, *oracle->optimum(), ro);
      report("superlinear terminal phase", fit.superlinear_detected,
             std::to_string(fit.violations) + " violations over " + std::to_string(fit.usable) + " usable points");
    } catch (const ConfigError& e) {
      report("superlinear terminal phase", false, e.what());
    }
  }
  return failures == 0 ? kExitOk : kExitNumerical;
}

}  // namespace cli

inline int cli_main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Cubic Newton with helper functions: experiments, cost model and verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hcn 1.0.0");

  std::string config_path, out_path = "trace.csv", out_dir = "out", data;
  std::vector<std::string> sets;
  std::uint64_t seed_value = 0;
  bool timing = false;
  std::vector<std::size_t> ms;
  std::size_t budget = 60;
  std::vector<std::uint64_t> ns, ds;
  std::string preset_name;

  auto* run_cmd = app.add_subcommand("run", "Run one configured method and write its trace");
  run_cmd->add_option("-c,--config", config_path, "Key/value configuration file")->check(CLI::ExistingFile);
  run_cmd->add_option("-s,--set", sets, "Override a configuration key (key=value)");
  auto* run_seed = run_cmd->add_option("--seed", seed_value, "Random seed");
  run_cmd->add_flag("--timing", timing, "Record wall-clock time per iteration");
  run_cmd->add_option("-o,--out", out_path, "Trace CSV path");

  auto* preset_cmd = app.add_subcommand("preset", "Run a named experiment preset");
  preset_cmd->add_option("name", preset_name, "Preset name")
      ->required()
      ->check(CLI::IsMember(preset_names()));
  preset_cmd->add_option("-c,--config", config_path, "Key/value overrides file")->check(CLI::ExistingFile);
  preset_cmd->add_option("-s,--set", sets, "Override a configuration key (key=value)");
  preset_cmd->add_option("--seed", seed_value, "Random seed");
  preset_cmd->add_flag("--timing", timing, "Record wall-clock time per iteration");
  preset_cmd->add_option("--data", data, "LibSVM data file instead of the synthetic data set")
      ->check(CLI::ExistingFile);
  preset_cmd->add_option("--m-values", ms, "Inner-loop lengths (auxiliary preset)")->delimiter(',');
  preset_cmd->add_option("-o,--out", out_dir, "Output directory");

  auto* sweep_cmd = app.add_subcommand("sweep-m", "Run one method over a grid of inner-loop lengths m");
  sweep_cmd->add_option("-c,--config", config_path, "Key/value configuration file")->check(CLI::ExistingFile);
  sweep_cmd->add_option("-s,--set", sets, "Override a configuration key (key=value)");
  auto* sweep_seed = sweep_cmd->add_option("--seed", seed_value, "Random seed");
  sweep_cmd->add_option("--m-values", ms, "Inner-loop lengths")->delimiter(',');
  sweep_cmd->add_option("--budget", budget, "Total iterations per m (S = budget / m)")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("-o,--out", out_dir, "Output directory");

  auto* cost_cmd = app.add_subcommand("cost-model", "Print optimal m and cost for both methods");
  cost_cmd->add_option("--n", ns, "Number of components")->required()->delimiter(',')->check(CLI::PositiveNumber);
  cost_cmd->add_option("--d", ds, "Dimension")->required()->delimiter(',')->check(CLI::PositiveNumber);
  cost_cmd->add_option("-o,--out", out_path, "Also write the table to this CSV file");

  auto* verify_cmd = app.add_subcommand("verify", "Run solver, audit and rate self-checks");
  verify_cmd->add_option("--seed", seed_value, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*run_cmd) {
      const auto seed = run_seed->count() ? std::optional<std::uint64_t>(seed_value) : std::nullopt;
      return cli::cmd_run(config_path, sets, seed, timing, out_path, out);
    }
    if (*preset_cmd) return cli::cmd_preset(preset_name, config_path, sets, seed_value, timing, data, ms, out_dir, out);
    if (*sweep_cmd) {
      const auto seed = sweep_seed->count() ? std::optional<std::uint64_t>(seed_value) : std::nullopt;
      return cli::cmd_sweep_m(config_path, sets, seed, ms, budget, out_dir, out);
    }
    if (*cost_cmd) return cli::cmd_cost_model(ns, ds, cost_cmd->count("--out") ? out_path : "", out);
    if (*verify_cmd) return cli::cmd_verify(seed_value, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const IoError& e) {
    err << "i/o failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitConfig;
}

}  // namespace hcn
