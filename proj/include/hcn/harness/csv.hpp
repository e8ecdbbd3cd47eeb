#pragma once

// Trace CSV files. Doubles are written in shortest round-trip form, so
// reading a file back reproduces every value bit for bit.

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "hcn/core.hpp"
#include "hcn/trace.hpp"

namespace hcn {

inline constexpr std::string_view kTraceHeader =
    "iter,f,grad_norm,mu_M,r,snapshot,grad_units,hess_units,factorizations,gradcost_total,audit_grad_units,"
    "audit_hess_units,wall_ns";

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline double parse_csv_double(std::string_view tok) {
  if (tok == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (tok == "inf") return std::numeric_limits<double>::infinity();
  if (tok == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    throw ConfigError("csv: malformed number '" + std::string(tok) + "'");
  return v;
}

template <typename Int>
Int parse_csv_int(std::string_view tok) {
  Int v{};
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    throw ConfigError("csv: malformed integer '" + std::string(tok) + "'");
  return v;
}

inline void write_trace_csv(const Trace& trace, std::ostream& out) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace) {
    out << r.iter << ',' << format_double(r.f) << ',' << format_double(r.grad_norm) << ',' << format_double(r.mu_M)
        << ',' << format_double(r.r) << ',' << (r.snapshot ? 1 : 0) << ',' << r.grad_units << ',' << r.hess_units
        << ',' << r.factorizations << ',' << format_double(r.gradcost_total) << ',' << r.audit_grad_units << ','
        << r.audit_hess_units << ',' << r.wall_ns << '\n';
  }
}

inline void write_trace_csv(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_trace_csv(trace, out);
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline Trace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw ConfigError("csv: missing or unexpected header");
  Trace trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    while (true) {
      const auto pos = rest.find(',');
      f.push_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (f.size() != 13) throw ConfigError("csv: line " + std::to_string(line_no) + " has the wrong field count");
    TraceRow r;
    r.iter = parse_csv_int<std::uint64_t>(f[0]);
    r.f = parse_csv_double(f[1]);
    r.grad_norm = parse_csv_double(f[2]);
    r.mu_M = parse_csv_double(f[3]);
    r.r = parse_csv_double(f[4]);
    r.snapshot = parse_csv_int<int>(f[5]) != 0;
    r.grad_units = parse_csv_int<std::uint64_t>(f[6]);
    r.hess_units = parse_csv_int<std::uint64_t>(f[7]);
    r.factorizations = parse_csv_int<std::uint64_t>(f[8]);
    r.gradcost_total = parse_csv_double(f[9]);
    r.audit_grad_units = parse_csv_int<std::uint64_t>(f[10]);
    r.audit_hess_units = parse_csv_int<std::uint64_t>(f[11]);
    r.wall_ns = parse_csv_int<std::int64_t>(f[12]);
    trace.push_back(r);
  }
  return trace;
}

inline Trace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return read_trace_csv(in);
}

// Small generic table writer for summaries.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw ConfigError("csv table: row width does not match header");
    rows_.push_back(std::move(row));
  }

  void write(std::ostream& out) const {
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
      out << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    write(out);
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
  }

  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace hcn
