#pragma once

// Result tables. One row per (sweep value, curve, method); rates in bps/Hz.
//
//   # key = value             metadata lines, in insertion order
//   sweep_value,curve,method,primary_rate_bps_hz,secondary_rate_bps_hz,
//   stderr_bps_hz,secondary_stderr_bps_hz,n_samples,status
//
// Numbers are printed with 17 significant digits, so reading a file back
// gives the same doubles. Missing values are written as "nan".

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "symrad/errors.hpp"

namespace symrad::cli {

struct ResultRow {
  double sweep_value = 0.0;
  std::string curve;   // e.g. "gamma_db=10" or "p_dbm=0"; may be empty
  std::string method;
  double primary_rate = 0.0;
  double secondary_rate = 0.0;
  double std_error = 0.0;  // of primary_rate
  double secondary_std_error = 0.0;
  std::size_t n_samples = 0;
  std::string status = "ok";

  bool operator==(const ResultRow& o) const {
    auto same = [](double a, double b) {
      return a == b || (std::isnan(a) && std::isnan(b));
    };
    return same(sweep_value, o.sweep_value) && curve == o.curve &&
           method == o.method && same(primary_rate, o.primary_rate) &&
           same(secondary_rate, o.secondary_rate) &&
           same(std_error, o.std_error) &&
           same(secondary_std_error, o.secondary_std_error) &&
           n_samples == o.n_samples && status == o.status;
  }
};

struct ResultTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<ResultRow> rows;
};

inline constexpr const char* kCsvHeader =
    "sweep_value,curve,method,primary_rate_bps_hz,secondary_rate_bps_hz,"
    "stderr_bps_hz,secondary_stderr_bps_hz,n_samples,status";

namespace detail {

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void check_cell(const std::string& s, const char* what) {
  if (s.find_first_of(",\n\r") != std::string::npos) {
    throw ValidationError(std::string("csv: ") + what + " must not contain commas or newlines");
  }
}

}  // namespace detail

inline std::string format_csv(const ResultTable& t) {
  std::ostringstream o;
  for (const auto& [k, v] : t.metadata) {
    detail::check_cell(k, "metadata key");
    if (v.find_first_of("\n\r") != std::string::npos) {
      throw ValidationError("csv: metadata value must be a single line");
    }
    o << "# " << k << " = " << v << "\n";
  }
  o << kCsvHeader << "\n";
  for (const ResultRow& r : t.rows) {
    detail::check_cell(r.curve, "curve");
    detail::check_cell(r.method, "method");
    detail::check_cell(r.status, "status");
    if (r.std_error < 0.0 || r.secondary_std_error < 0.0) {
      throw ValidationError("csv: standard errors must be >= 0");
    }
    o << detail::num(r.sweep_value) << ',' << r.curve << ',' << r.method << ','
      << detail::num(r.primary_rate) << ',' << detail::num(r.secondary_rate) << ','
      << detail::num(r.std_error) << ',' << detail::num(r.secondary_std_error) << ','
      << r.n_samples << ',' << r.status << "\n";
  }
  return o.str();
}

inline void emit_csv(const ResultTable& t, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open output file '" + path + "'", 0, "output");
  f << format_csv(t);
  if (!f) throw ConfigError("write failed for '" + path + "'", 0, "output");
}

inline ResultTable parse_csv(const std::string& text) {
  ResultTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  auto to_double = [&](const std::string& s) {
    if (s == "nan") return std::nan("");
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) {
      throw ConfigError("bad number '" + s + "'", line_no);
    }
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.starts_with("# ")) {
      const auto eq = line.find(" = ");
      if (eq == std::string::npos) throw ConfigError("bad metadata line", line_no);
      t.metadata.emplace_back(line.substr(2, eq - 2), line.substr(eq + 3));
      continue;
    }
    if (!header) {
      if (line != kCsvHeader) throw ConfigError("unexpected header", line_no);
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 9) throw ConfigError("expected 9 columns", line_no);
    ResultRow r;
    r.sweep_value = to_double(cells[0]);
    r.curve = cells[1];
    r.method = cells[2];
    r.primary_rate = to_double(cells[3]);
    r.secondary_rate = to_double(cells[4]);
    r.std_error = to_double(cells[5]);
    r.secondary_std_error = to_double(cells[6]);
    r.n_samples = static_cast<std::size_t>(to_double(cells[7]));
    r.status = cells[8];
    t.rows.push_back(std::move(r));
  }
  if (!header) throw ConfigError("missing header");
  return t;
}

inline ResultTable load_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str());
}

}  // namespace symrad::cli
