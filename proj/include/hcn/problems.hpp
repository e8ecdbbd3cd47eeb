#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hcn/core.hpp"

namespace hcn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

// out += coef * a a^T, written so that the result stays bitwise symmetric.
inline void add_outer_sym(Matrix& out, const Eigen::Ref<const Vector>& a, double coef) {
  const Index d = a.size();
  for (Index k = 0; k < d; ++k) {
    const double ak = a(k);
    for (Index j = k; j < d; ++j) {
      const double v = coef * (a(j) * ak);
      out(j, k) += v;
      if (j != k) out(k, j) += v;
    }
  }
}

inline void check_point(const Vector& x, Index d, const char* who) {
  if (x.size() != d) {
    std::ostringstream msg;
    msg << who << ": point has dimension " << x.size() << ", expected " << d;
    throw ConfigError(msg.str());
  }
}

}  // namespace detail

// f(x) = (1/n) sum_i f_i(x) with per-component value, gradient and Hessian
// access. Component accessors are pure; full and batch reductions sum in
// index order so results are reproducible.
class ObjectiveOracle {
 public:
  virtual ~ObjectiveOracle() = default;

  virtual std::size_t size() const = 0;
  virtual Index dim() const = 0;
  // Hessian-Lipschitz constant shared by every component.
  virtual double lipschitz() const = 0;

  virtual double component_value(std::size_t i, const Vector& x) const = 0;
  virtual void add_component_gradient(std::size_t i, const Vector& x, double weight, Vector& out) const = 0;
  virtual void add_component_hessian(std::size_t i, const Vector& x, double weight, Matrix& out) const = 0;

  std::optional<double> optimum() const { return f_star_; }
  void set_optimum(double f_star) { f_star_ = f_star; }

  Vector component_gradient(std::size_t i, const Vector& x) const {
    Vector out = Vector::Zero(dim());
    add_component_gradient(i, x, 1.0, out);
    return out;
  }
  Matrix component_hessian(std::size_t i, const Vector& x) const {
    Matrix out = Matrix::Zero(dim(), dim());
    add_component_hessian(i, x, 1.0, out);
    return out;
  }

  double value(const Vector& x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < size(); ++i) acc += component_value(i, x);
    return acc / static_cast<double>(size());
  }
  Vector gradient(const Vector& x) const {
    Vector out = Vector::Zero(dim());
    const double w = 1.0 / static_cast<double>(size());
    for (std::size_t i = 0; i < size(); ++i) add_component_gradient(i, x, w, out);
    return out;
  }
  Matrix hessian(const Vector& x) const {
    Matrix out = Matrix::Zero(dim(), dim());
    const double w = 1.0 / static_cast<double>(size());
    for (std::size_t i = 0; i < size(); ++i) add_component_hessian(i, x, w, out);
    return out;
  }
  Vector batch_gradient(std::span<const std::size_t> batch, const Vector& x) const {
    Vector out = Vector::Zero(dim());
    const double w = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i : batch) add_component_gradient(i, x, w, out);
    return out;
  }
  Matrix batch_hessian(std::span<const std::size_t> batch, const Vector& x) const {
    Matrix out = Matrix::Zero(dim(), dim());
    const double w = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i : batch) add_component_hessian(i, x, w, out);
    return out;
  }

 private:
  std::optional<double> f_star_;
};

using OraclePtr = std::shared_ptr<const ObjectiveOracle>;

struct Dataset {
  RowMatrix features;  // n x d
  Vector labels;       // n
  std::vector<std::string> warnings;

  std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
  Index dim() const { return features.cols(); }

  void validate() const {
    if (features.rows() < 1 || features.cols() < 1) throw ConfigError("dataset: need n >= 1 and d >= 1");
    if (labels.size() != features.rows()) throw ConfigError("dataset: label count does not match rows");
    if (!features.allFinite() || !labels.allFinite()) throw ConfigError("dataset: non-finite entries");
  }
  bool binary_labels() const {
    return (labels.array().abs() == 1.0).all();
  }
};

struct GradDominanceSpec {
  double tau = 1.0;
  double alpha = 2.0;

  void validate() const {
    if (!(tau > 0.0)) throw ConfigError("gradient dominance: tau must be positive");
    if (!(alpha >= 1.0 && alpha <= 2.0)) throw ConfigError("gradient dominance: alpha must lie in [1, 2]");
  }
};

// ---------------------------------------------------------------------------
// LibSVM text format: "label idx:val idx:val ...", 1-based ascending indices.

namespace detail {

inline bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

[[noreturn]] inline void libsvm_error(std::size_t line_no, const std::string& what) {
  std::ostringstream msg;
  msg << "libsvm parse error at line " << line_no << ": " << what;
  throw ConfigError(msg.str());
}

}  // namespace detail

inline Dataset parse_libsvm(std::istream& in, std::optional<Index> dim_override = std::nullopt) {
  struct Row {
    double label;
    std::vector<std::pair<Index, double>> entries;
  };
  std::vector<Row> rows;
  Index max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string tok;
    if (!(tokens >> tok)) continue;  // blank line
    Row row;
    if (!detail::parse_double(tok, row.label)) detail::libsvm_error(line_no, "malformed label '" + tok + "'");
    Index prev = 0;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) detail::libsvm_error(line_no, "malformed token '" + tok + "'");
      const std::string_view idx_str(tok.data(), colon);
      long long idx = 0;
      auto [p, ec] = std::from_chars(idx_str.data(), idx_str.data() + idx_str.size(), idx);
      if (ec != std::errc() || p != idx_str.data() + idx_str.size())
        detail::libsvm_error(line_no, "malformed index in '" + tok + "'");
      if (idx < 1) detail::libsvm_error(line_no, "index must be >= 1 in '" + tok + "'");
      if (idx <= prev) detail::libsvm_error(line_no, "indices must be strictly ascending at '" + tok + "'");
      double val = 0.0;
      if (!detail::parse_double(std::string_view(tok).substr(colon + 1), val))
        detail::libsvm_error(line_no, "malformed value in '" + tok + "'");
      prev = static_cast<Index>(idx);
      row.entries.emplace_back(prev, val);
    }
    max_index = std::max(max_index, prev);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("libsvm: no data rows");
  Index d = max_index;
  if (dim_override) {
    if (*dim_override < max_index) throw ConfigError("libsvm: feature index exceeds requested dimension");
    d = *dim_override;
  }
  Dataset data;
  data.features = RowMatrix::Zero(static_cast<Index>(rows.size()), d);
  data.labels.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    data.labels(static_cast<Index>(i)) = rows[i].label;
    for (auto [j, v] : rows[i].entries) data.features(static_cast<Index>(i), j - 1) = v;
  }
  const bool is_pm1 = (data.labels.array().abs() == 1.0).all();
  const bool is_01 = ((data.labels.array() == 0.0) || (data.labels.array() == 1.0)).all();
  if (!is_pm1 && is_01) {
    data.labels = (data.labels.array() == 0.0).select(-1.0, data.labels);
    data.warnings.emplace_back("labels in {0,1} mapped to {-1,+1}");
  }
  data.validate();
  return data;
}

// ---------------------------------------------------------------------------
// Logistic regression, optionally with the non-convex regularizer
// lambda * sum_j x_j^2 / (1 + x_j^2).

namespace detail {

// ln(1 + e^t)
inline double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// max over R of |d^3/dx^3 x^2/(1+x^2)|, attained at x^2 = 1 - 2/sqrt(5).
inline double reg_third_derivative_bound() {
  const double x = std::sqrt(1.0 - 2.0 / std::sqrt(5.0));
  const double x2 = x * x;
  return 24.0 * x * (1.0 - x2) / std::pow(1.0 + x2, 4);
}

}  // namespace detail

class LogisticOracle final : public ObjectiveOracle {
 public:
  LogisticOracle(Dataset data, double l2, double nonconvex_lambda = 0.0)
      : data_(std::move(data)), l2_(l2), reg_(nonconvex_lambda) {
    data_.validate();
    if (!data_.binary_labels()) throw ConfigError("logistic: labels must be in {-1,+1}");
    if (!(l2_ >= 0.0) || !(reg_ >= 0.0)) throw ConfigError("logistic: regularization weights must be >= 0");
    double max_norm = 0.0;
    for (Index i = 0; i < data_.features.rows(); ++i) max_norm = std::max(max_norm, data_.features.row(i).norm());
    lipschitz_ = max_norm * max_norm * max_norm / (6.0 * std::sqrt(3.0)) + reg_ * detail::reg_third_derivative_bound();
  }

  std::size_t size() const override { return data_.size(); }
  Index dim() const override { return data_.dim(); }
  double lipschitz() const override { return lipschitz_; }
  const Dataset& data() const { return data_; }
  double l2() const { return l2_; }

  double component_value(std::size_t i, const Vector& x) const override {
    detail::check_point(x, dim(), "logistic");
    const auto a = data_.features.row(static_cast<Index>(i));
    const double b = data_.labels(static_cast<Index>(i));
    double v = detail::softplus(-b * a.dot(x)) + 0.5 * l2_ * x.squaredNorm();
    if (reg_ > 0.0) v += reg_ * (x.array().square() / (1.0 + x.array().square())).sum();
    return v;
  }

  void add_component_gradient(std::size_t i, const Vector& x, double weight, Vector& out) const override {
    detail::check_point(x, dim(), "logistic");
    const auto a = data_.features.row(static_cast<Index>(i));
    const double b = data_.labels(static_cast<Index>(i));
    const double coef = -b * detail::sigmoid(-b * a.dot(x));
    out.noalias() += (weight * coef) * a.transpose();
    if (l2_ > 0.0) out.noalias() += (weight * l2_) * x;
    if (reg_ > 0.0) {
      for (Index j = 0; j < x.size(); ++j) {
        const double q = 1.0 + x(j) * x(j);
        out(j) += weight * reg_ * 2.0 * x(j) / (q * q);
      }
    }
  }

  void add_component_hessian(std::size_t i, const Vector& x, double weight, Matrix& out) const override {
    detail::check_point(x, dim(), "logistic");
    const auto a = data_.features.row(static_cast<Index>(i));
    const double t = a.dot(x);
    // l''(t) = sigma(t) sigma(-t) is even, so the labels drop out.
    const double curv = detail::sigmoid(t) * detail::sigmoid(-t);
    detail::add_outer_sym(out, a.transpose(), weight * curv);
    if (l2_ > 0.0) out.diagonal().array() += weight * l2_;
    if (reg_ > 0.0) {
      for (Index j = 0; j < x.size(); ++j) {
        const double x2 = x(j) * x(j);
        const double q = 1.0 + x2;
        out(j, j) += weight * reg_ * (2.0 - 6.0 * x2) / (q * q * q);
      }
    }
  }

 private:
  Dataset data_;
  double l2_;
  double reg_;
  double lipschitz_ = 0.0;
};

inline std::shared_ptr<LogisticOracle> logreg_oracle(Dataset data, double l2) {
  return std::make_shared<LogisticOracle>(std::move(data), l2, 0.0);
}

inline std::shared_ptr<LogisticOracle> logreg_nonconvex_oracle(Dataset data, double lambda) {
  return std::make_shared<LogisticOracle>(std::move(data), 0.0, lambda);
}

// ---------------------------------------------------------------------------
// Diagonal two-layer network: f_i(u, v) = (a_i^T (u o v) - b_i)^2 + lambda/2 ||(u,v)||^2.

struct LipschitzEstimateOptions {
  std::size_t pairs = 10000;
  double box = 1.0;  // sample points uniformly in [-box, box]^d
  double safety = 1.5;
  std::uint64_t seed = 0x5eed;
};

class DiagNNOracle final : public ObjectiveOracle {
 public:
  DiagNNOracle(Dataset data, double lambda, LipschitzEstimateOptions opts = {})
      : data_(std::move(data)), lambda_(lambda), k_(data_.features.cols()) {
    data_.validate();
    if (!(lambda_ >= 0.0)) throw ConfigError("diag-nn: lambda must be >= 0");
    lipschitz_ = estimate_lipschitz(opts);
  }

  std::size_t size() const override { return data_.size(); }
  Index dim() const override { return 2 * k_; }
  double lipschitz() const override { return lipschitz_; }

  double component_value(std::size_t i, const Vector& x) const override {
    check(x);
    const double e = residual(i, x);
    return e * e + 0.5 * lambda_ * x.squaredNorm();
  }

  void add_component_gradient(std::size_t i, const Vector& x, double weight, Vector& out) const override {
    check(x);
    const auto a = data_.features.row(static_cast<Index>(i)).transpose();
    const auto u = x.head(k_);
    const auto v = x.tail(k_);
    const double e2 = 2.0 * weight * residual(i, x);
    out.head(k_).array() += e2 * a.array() * v.array();
    out.tail(k_).array() += e2 * a.array() * u.array();
    if (lambda_ > 0.0) out.noalias() += (weight * lambda_) * x;
  }

  void add_component_hessian(std::size_t i, const Vector& x, double weight, Matrix& out) const override {
    check(x);
    const auto a = data_.features.row(static_cast<Index>(i)).transpose();
    Vector p(2 * k_);  // gradient of a^T (u o v) with respect to (u, v)
    p.head(k_) = a.cwiseProduct(x.tail(k_));
    p.tail(k_) = a.cwiseProduct(x.head(k_));
    detail::add_outer_sym(out, p, 2.0 * weight);
    const double e2 = 2.0 * weight * residual(i, x);
    for (Index j = 0; j < k_; ++j) {
      out(j, k_ + j) += e2 * a(j);
      out(k_ + j, j) += e2 * a(j);
    }
    if (lambda_ > 0.0) out.diagonal().array() += weight * lambda_;
  }

 private:
  void check(const Vector& x) const {
    if (x.size() % 2 != 0) throw ConfigError("diag-nn: point dimension must be even (packs u and v)");
    detail::check_point(x, dim(), "diag-nn");
  }

  double residual(std::size_t i, const Vector& x) const {
    const auto a = data_.features.row(static_cast<Index>(i)).transpose();
    return (a.array() * x.head(k_).array() * x.tail(k_).array()).sum() - data_.labels(static_cast<Index>(i));
  }

  // Per-component Hessian-Lipschitz ratio maximized over random pairs in a
  // box, inflated by a safety factor. The objective is quartic, so the
  // constant only holds on that box.
  double estimate_lipschitz(const LipschitzEstimateOptions& opts) const {
    Rng rng(opts.seed);
    std::uniform_real_distribution<double> coord(-opts.box, opts.box);
    std::uniform_int_distribution<std::size_t> pick(0, size() - 1);
    const Index d = dim();
    Vector x(d), y(d);
    double best = 0.0;
    for (std::size_t p = 0; p < opts.pairs; ++p) {
      for (Index j = 0; j < d; ++j) x(j) = coord(rng);
      for (Index j = 0; j < d; ++j) y(j) = coord(rng);
      const std::size_t i = pick(rng);
      const double dist = (x - y).norm();
      if (dist == 0.0) continue;
      const Matrix diff = component_hessian(i, x) - component_hessian(i, y);
      best = std::max(best, spectral_norm_sym(diff) / dist);
    }
    return opts.safety * best;
  }

  Dataset data_;
  double lambda_;
  Index k_;
  double lipschitz_ = 0.0;
};

inline std::shared_ptr<DiagNNOracle> diag_nn_oracle(Dataset data, double lambda, LipschitzEstimateOptions opts = {}) {
  return std::make_shared<DiagNNOracle>(std::move(data), lambda, opts);
}

// ---------------------------------------------------------------------------
// Strongly convex least-squares components with a known minimizer:
// f_i(x) = 1/2 (a_i^T x - y_i)^2 + mu/2 ||x||^2.

class QuadraticOracle final : public ObjectiveOracle {
 public:
  QuadraticOracle(Dataset data, double mu) : data_(std::move(data)), mu_(mu) {
    data_.validate();
    if (!(mu_ > 0.0)) throw ConfigError("quadratic: mu must be positive");
    const double n = static_cast<double>(data_.size());
    hessian_ = Matrix::Zero(dim(), dim());
    for (Index i = 0; i < data_.features.rows(); ++i)
      detail::add_outer_sym(hessian_, data_.features.row(i).transpose(), 1.0 / n);
    hessian_.diagonal().array() += mu_;
    const Vector rhs = data_.features.transpose() * data_.labels / n;
    minimizer_ = hessian_.ldlt().solve(rhs);
    set_optimum(value(minimizer_));
  }

  std::size_t size() const override { return data_.size(); }
  Index dim() const override { return data_.dim(); }
  double lipschitz() const override { return 0.0; }
  double mu() const { return mu_; }
  const Vector& minimizer() const { return minimizer_; }
  const Matrix& full_hessian() const { return hessian_; }

  double component_value(std::size_t i, const Vector& x) const override {
    detail::check_point(x, dim(), "quadratic");
    const double e = data_.features.row(static_cast<Index>(i)).dot(x) - data_.labels(static_cast<Index>(i));
    return 0.5 * e * e + 0.5 * mu_ * x.squaredNorm();
  }
  void add_component_gradient(std::size_t i, const Vector& x, double weight, Vector& out) const override {
    detail::check_point(x, dim(), "quadratic");
    const auto a = data_.features.row(static_cast<Index>(i));
    const double e = a.dot(x) - data_.labels(static_cast<Index>(i));
    out.noalias() += (weight * e) * a.transpose();
    out.noalias() += (weight * mu_) * x;
  }
  void add_component_hessian(std::size_t i, const Vector& x, double weight, Matrix& out) const override {
    detail::check_point(x, dim(), "quadratic");
    detail::add_outer_sym(out, data_.features.row(static_cast<Index>(i)).transpose(), weight);
    out.diagonal().array() += weight * mu_;
  }

 private:
  Dataset data_;
  double mu_;
  Matrix hessian_;
  Vector minimizer_;
};

// ---------------------------------------------------------------------------
// Seeded synthetic data.

struct SyntheticLogisticOptions {
  std::size_t n = 2000;
  Index d = 50;
  double label_noise = 0.1;  // probability of flipping the planted label
  double feature_scale = 1.0;
  std::uint64_t seed = 1;
};

// Gaussian features with row norms near feature_scale, labels from a planted
// separator with random flips.
inline Dataset synthetic_logistic_dataset(const SyntheticLogisticOptions& opts) {
  if (opts.n < 1 || opts.d < 1) throw ConfigError("synthetic logistic: need n >= 1 and d >= 1");
  Rng rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution flip(opts.label_noise);
  Vector w(opts.d);
  for (Index j = 0; j < opts.d; ++j) w(j) = normal(rng);
  w *= 3.0 / w.norm();
  Dataset data;
  data.features.resize(static_cast<Index>(opts.n), opts.d);
  data.labels.resize(static_cast<Index>(opts.n));
  const double scale = opts.feature_scale / std::sqrt(static_cast<double>(opts.d));
  for (Index i = 0; i < static_cast<Index>(opts.n); ++i) {
    for (Index j = 0; j < opts.d; ++j) data.features(i, j) = scale * normal(rng);
    double label = data.features.row(i).dot(w) >= 0.0 ? 1.0 : -1.0;
    if (flip(rng)) label = -label;
    data.labels(i) = label;
  }
  return data;
}

// Least-squares components plus mu/2 ||x||^2: (tau, alpha) = (1/(2 mu), 2).
inline std::pair<std::shared_ptr<QuadraticOracle>, GradDominanceSpec> synthetic_strongly_convex(
    std::size_t n, Index d, double mu, std::uint64_t seed) {
  if (!(mu > 0.0)) throw ConfigError("synthetic strongly convex: mu must be positive");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset data;
  data.features.resize(static_cast<Index>(n), d);
  data.labels.resize(static_cast<Index>(n));
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (Index i = 0; i < static_cast<Index>(n); ++i) {
    for (Index j = 0; j < d; ++j) data.features(i, j) = scale * normal(rng);
    data.labels(i) = normal(rng);
  }
  auto oracle = std::make_shared<QuadraticOracle>(std::move(data), mu);
  return {oracle, GradDominanceSpec{1.0 / (2.0 * mu), 2.0}};
}

// Splits rows [0, first) / [first, n).
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& data, std::size_t first) {
  if (first < 1 || first >= data.size()) throw ConfigError("split_dataset: split point out of range");
  const Index k = static_cast<Index>(first);
  const Index rest = static_cast<Index>(data.size()) - k;
  Dataset a, b;
  a.features = data.features.topRows(k);
  a.labels = data.labels.head(k);
  b.features = data.features.bottomRows(rest);
  b.labels = data.labels.tail(rest);
  return {a, b};
}

}  // namespace hcn
