#pragma once

// Flat "key = value" configuration, one entry per line, '#' starts a
// comment. Values may be overridden from the command line with key=value
// strings. Every key must be consumed by the experiment builder; leftovers
// are reported as unknown.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "hcn/baselines.hpp"
#include "hcn/core.hpp"
#include "hcn/estimators.hpp"
#include "hcn/optimizer.hpp"
#include "hcn/problems.hpp"

namespace hcn {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

class KeyValues {
 public:
  void set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }

  // "key=value"
  void set_assignment(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError("config: expected key=value, got '" + std::string(text) + "'");
    const auto key = detail::trim(text.substr(0, eq));
    if (key.empty()) throw ConfigError("config: empty key in '" + std::string(text) + "'");
    set(std::string(key), std::string(detail::trim(text.substr(eq + 1))));
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::optional<std::string> take(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    used_.insert(key);
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    return take(key).value_or(fallback);
  }

  double get_double(const std::string& key, double fallback) const {
    const auto v = take(key);
    if (!v) return fallback;
    double out = 0.0;
    const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
    if (res.ec != std::errc{} || res.ptr != v->data() + v->size() || !std::isfinite(out))
      throw ConfigError("config: key '" + key + "' expects a finite number, got '" + *v + "'");
    return out;
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto v = take(key);
    if (!v) return fallback;
    std::uint64_t out = 0;
    const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
    if (res.ec != std::errc{} || res.ptr != v->data() + v->size())
      throw ConfigError("config: key '" + key + "' expects a non-negative integer, got '" + *v + "'");
    return out;
  }

  std::size_t get_size(const std::string& key, std::size_t fallback) const {
    return static_cast<std::size_t>(get_u64(key, fallback));
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto v = take(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError("config: key '" + key + "' expects true or false, got '" + *v + "'");
  }

  void check_all_used() const {
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) throw ConfigError("config: unknown key '" + k + "'");
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

inline KeyValues parse_key_values(std::istream& in, const std::string& source = "config") {
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = detail::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    const auto key = eq == std::string_view::npos ? std::string_view{} : detail::trim(view.substr(0, eq));
    if (key.empty()) {
      std::ostringstream msg;
      msg << source << ":" << line_no << ": expected 'key = value'";
      throw ConfigError(msg.str());
    }
    if (!seen.insert(std::string(key)).second) {
      std::ostringstream msg;
      msg << source << ":" << line_no << ": duplicate key '" << key << "'";
      throw ConfigError(msg.str());
    }
    kv.set(std::string(key), std::string(detail::trim(view.substr(eq + 1))));
  }
  return kv;
}

inline KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return parse_key_values(in, path);
}

// ---------------------------------------------------------------------------

struct ProblemBundle {
  std::string kind;
  std::shared_ptr<ObjectiveOracle> oracle;
  OraclePtr helper;  // auxiliary objective, when requested
  Dataset data;
};

struct MethodSpec {
  std::string name;
  std::variant<RunConfig, BaselineConfig> config;
  bool is_cubic() const { return std::holds_alternative<RunConfig>(config); }
};

struct Experiment {
  ProblemBundle problem;
  MethodSpec method;
};

inline Dataset load_dataset(const KeyValues& kv) {
  const std::string source = kv.get_string("data", "synthetic");
  if (source == "synthetic") {
    SyntheticLogisticOptions opts;
    opts.n = kv.get_size("n", opts.n);
    opts.d = static_cast<Index>(kv.get_size("d", static_cast<std::size_t>(opts.d)));
    opts.seed = kv.get_u64("data_seed", opts.seed);
    opts.label_noise = kv.get_double("label_noise", opts.label_noise);
    opts.feature_scale = kv.get_double("feature_scale", opts.feature_scale);
    if (!(opts.label_noise >= 0.0 && opts.label_noise <= 1.0)) throw ConfigError("config: label_noise must lie in [0, 1]");
    return synthetic_logistic_dataset(opts);
  }
  std::ifstream in(source);
  if (!in) throw ConfigError("config: cannot open data file '" + source + "'");
  std::optional<Index> dim;
  if (kv.has("d")) dim = static_cast<Index>(kv.get_size("d", 0));
  return parse_libsvm(in, dim);
}

// Rows become labeled and unlabeled halves; the unlabeled half gets labels
// drawn uniformly from {-1, +1}.
inline std::pair<Dataset, Dataset> labeled_unlabeled_split(const Dataset& data, double labeled_fraction,
                                                           std::uint64_t helper_seed) {
  if (!(labeled_fraction > 0.0 && labeled_fraction < 1.0))
    throw ConfigError("config: labeled_fraction must lie in (0, 1)");
  const auto first = static_cast<std::size_t>(std::floor(labeled_fraction * static_cast<double>(data.size())));
  auto [labeled, unlabeled] = split_dataset(data, first);
  Rng rng(helper_seed);
  std::bernoulli_distribution coin(0.5);
  for (Index i = 0; i < unlabeled.labels.size(); ++i) unlabeled.labels(i) = coin(rng) ? 1.0 : -1.0;
  return {std::move(labeled), std::move(unlabeled)};
}

// Targets b_i = a_i^T w + noise for the diagonal network.
inline Dataset synthetic_regression_dataset(std::size_t n, Index k, double noise, std::uint64_t seed) {
  if (n < 1 || k < 1) throw ConfigError("synthetic regression: need n >= 1 and k >= 1");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector w(k);
  for (Index j = 0; j < k; ++j) w(j) = normal(rng);
  Dataset data;
  data.features.resize(static_cast<Index>(n), k);
  data.labels.resize(static_cast<Index>(n));
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  for (Index i = 0; i < static_cast<Index>(n); ++i) {
    for (Index j = 0; j < k; ++j) data.features(i, j) = scale * normal(rng);
    data.labels(i) = data.features.row(i).dot(w) + noise * normal(rng);
  }
  return data;
}

inline ProblemBundle build_problem(const KeyValues& kv, bool with_helper) {
  ProblemBundle p;
  p.kind = kv.get_string("problem", "logistic");
  if (p.kind == "diag_nn") {
    const std::size_t n = kv.get_size("n", 1000);
    const auto k = static_cast<Index>(kv.get_size("d", 20));
    p.data = synthetic_regression_dataset(n, k, kv.get_double("label_noise", 0.1), kv.get_u64("data_seed", 1));
    LipschitzEstimateOptions opts;
    opts.pairs = kv.get_size("nn_lipschitz_pairs", 10000);
    opts.box = kv.get_double("nn_box", 1.0);
    p.oracle = diag_nn_oracle(p.data, kv.get_double("lambda", 1e-3), opts);
    if (with_helper) throw ConfigError("config: the auxiliary method needs a logistic problem");
    return p;
  }
  if (p.kind == "quadratic") {
    const std::size_t n = kv.get_size("n", 500);
    const auto d = static_cast<Index>(kv.get_size("d", 20));
    auto [oracle, spec] = synthetic_strongly_convex(n, d, kv.get_double("mu", 1.0), kv.get_u64("data_seed", 1));
    p.oracle = oracle;
    if (with_helper) throw ConfigError("config: the auxiliary method needs a logistic problem");
    return p;
  }
  if (p.kind != "logistic" && p.kind != "nonconvex")
    throw ConfigError("config: unknown problem '" + p.kind + "' (logistic, nonconvex, diag_nn, quadratic)");

  Dataset data = load_dataset(kv);
  if (!data.binary_labels()) throw ConfigError("config: logistic problems need labels in {-1, +1}");
  const double l2 = p.kind == "logistic" ? kv.get_double("l2", 1e-3) : 0.0;
  const double lambda = p.kind == "nonconvex" ? kv.get_double("lambda", 0.1) : 0.0;
  auto make = [&](Dataset d) { return std::make_shared<LogisticOracle>(std::move(d), l2, lambda); };
  if (with_helper) {
    auto [labeled, unlabeled] =
        labeled_unlabeled_split(data, kv.get_double("labeled_fraction", 0.5), kv.get_u64("helper_seed", 17));
    p.helper = make(std::move(unlabeled));
    p.data = labeled;
    p.oracle = make(std::move(labeled));
  } else {
    p.data = data;
    p.oracle = make(std::move(data));
  }
  return p;
}

inline Vector build_x0(const KeyValues& kv, Index d, const std::string& fallback) {
  const std::string mode = kv.get_string("x0", fallback);
  if (mode == "zeros") return Vector::Zero(d);
  if (mode == "random") {
    Rng rng(kv.get_u64("x0_seed", 3));
    std::normal_distribution<double> normal(0.0, kv.get_double("x0_scale", 0.5));
    Vector x(d);
    for (Index j = 0; j < d; ++j) x(j) = normal(rng);
    return x;
  }
  throw ConfigError("config: x0 must be 'zeros' or 'random'");
}

inline MethodSpec build_method(const KeyValues& kv, const ProblemBundle& problem) {
  const ObjectiveOracle& f = *problem.oracle;
  const std::size_t n = f.size();
  MethodSpec spec;
  spec.name = kv.get_string("method", "cn");
  const std::size_t m = kv.get_size("m", 10);
  const std::size_t S = kv.get_size("S", 5);
  const std::uint64_t seed = kv.get_u64("seed", 0);
  const Vector x0 = build_x0(kv, f.dim(), problem.kind == "diag_nn" ? "random" : "zeros");
  const double d_eff = kv.get_double("d_eff", 0.0);
  const bool timing = kv.get_bool("timing", false);

  if (spec.name == "gd" || spec.name == "sgd") {
    BaselineConfig b;
    b.iters = kv.get_size("iters", S * m);
    b.x0 = x0;
    b.d_eff = d_eff;
    b.timing = timing;
    if (spec.name == "gd") {
      GDLineSearch ls;
      ls.c_armijo = kv.get_double("gd_c", ls.c_armijo);
      ls.backtrack_factor = kv.get_double("gd_backtrack", ls.backtrack_factor);
      ls.init_step = kv.get_double("gd_init_step", ls.init_step);
      b.variant = ls;
    } else {
      SGDConfig s;
      s.step = kv.get_double("sgd_step", 0.5);
      s.batch = kv.get_size("sgd_batch", std::min<std::size_t>(m * m, n));
      s.seed = seed;
      b.variant = s;
    }
    b.validate(f);
    spec.config = b;
    return spec;
  }

  RunConfig rc;
  rc.m = m;
  rc.S = S;
  rc.x0 = x0;
  rc.seed = seed;
  rc.d_eff = d_eff;
  rc.timing = timing;
  rc.record_mu = kv.get_bool("record_mu", false);
  rc.audit = kv.get_bool("audit", false);
  rc.tol_subproblem = kv.get_double("tol_subproblem", rc.tol_subproblem);
  rc.delta1 = kv.get_double("delta1", 0.0);
  rc.delta2 = kv.get_double("delta2", 0.0);
  const std::string rule = kv.get_string("M_rule", "standard");
  if (rule != "standard" && rule != "dominated") throw ConfigError("config: M_rule must be 'standard' or 'dominated'");
  const MRule mrule = rule == "standard" ? MRule::standard : MRule::dominated;
  const std::string M = kv.get_string("M", "auto");
  if (M == "auto") {
    rc.M_policy = MPolicy::automatic(mrule);
  } else {
    KeyValues tmp;
    tmp.set("M", M);
    rc.M_policy = MPolicy::fixed(tmp.get_double("M", 0.0));
  }
  const std::string snap = kv.get_string("snapshot", "last");
  if (snap != "last" && snap != "best") throw ConfigError("config: snapshot must be 'last' or 'best'");
  rc.snapshot_policy = snap == "last" ? SnapshotPolicy::last_iterate : SnapshotPolicy::best_iterate;
  rc.estimator.seed = seed;

  if (spec.name == "cn") {
    rc.estimator.variant = estimator::Exact{};
  } else if (spec.name == "scn") {
    estimator::BasicStochastic b;
    b.b_g = kv.get_size("b_g", std::min(m * m, n));
    b.b_h = kv.get_size("b_h", std::min(m * m, n));
    b.resample_each_step = kv.get_bool("resample", true);
    rc.estimator.variant = b;
  } else if (spec.name == "vr") {
    auto v = default_vr(m, n);
    v.b_g = kv.get_size("b_g", v.b_g);
    v.b_h = kv.get_size("b_h", v.b_h);
    rc.estimator.variant = v;
  } else if (spec.name == "lazy_vr") {
    auto v = default_lazy_vr(m, n);
    v.b_g = kv.get_size("b_g", v.b_g);
    rc.estimator.variant = v;
  } else if (spec.name == "lazy_cn") {
    rc.estimator.variant = estimator::LazyExact{};
  } else if (spec.name == "aux") {
    if (!problem.helper) throw ConfigError("config: the auxiliary method needs a helper objective");
    rc.estimator.variant = estimator::Auxiliary{problem.helper};
  } else {
    throw ConfigError("config: unknown method '" + spec.name + "' (cn, scn, vr, lazy_vr, lazy_cn, aux, gd, sgd)");
  }
  rc.validate(f);
  spec.config = rc;
  return spec;
}

inline Experiment build_experiment(const KeyValues& kv) {
  Experiment e;
  const bool aux = kv.has("method") && *kv.take("method") == "aux";
  e.problem = build_problem(kv, aux);
  e.method = build_method(kv, e.problem);
  kv.check_all_used();
  return e;
}

// ---------------------------------------------------------------------------

struct MethodRun {
  std::string name;
  Trace trace;
  CostLedger ledger;
  Vector x;
  double f0 = 0.0;
};

inline MethodRun run_method(const ProblemBundle& problem, const MethodSpec& method) {
  MethodRun out;
  out.name = method.name;
  if (const auto* rc = std::get_if<RunConfig>(&method.config)) {
    RunResult r = run(problem.oracle, *rc);
    out.trace = std::move(r.trace);
    out.ledger = r.ledger;
    out.x = std::move(r.x);
    out.f0 = r.f0;
  } else {
    BaselineResult r = run_baseline(*problem.oracle, std::get<BaselineConfig>(method.config));
    out.trace = std::move(r.trace);
    out.ledger = r.ledger;
    out.x = std::move(r.x);
    out.f0 = r.f0;
  }
  return out;
}

}  // namespace hcn
