#pragma once

// Experiment configuration: a flat, sectioned key = value text format.
//
//   # full-line comments start with '#' or ';'
//   [system]
//   p_dbm      = 0:5:30          # list items are scalars or start:step:stop
//   sigma2_dbm = -110
//   beta_hd_db = -120
//   J          = 200
//
// Each physical quantity has a linear key and, where it makes sense, a dB
// key (beta_hd / beta_hd_db, sigma2 / sigma2_dbm, p / p_dbm). Giving both is
// an error. dB values are converted to linear here and nowhere else; the
// emitter writes linear keys with 17 significant digits so that
// parse(emit(c)) == c exactly.
//
// Sections and keys:
//   [system]     p | p_dbm (list), alpha, sigma2 | sigma2_dbm, K, M, J,
//                J_list (list), beta_hd | beta_hd_db, beta_h | beta_h_db,
//                beta_g | beta_g_db, bd_symbols = cscg | unit_modulus
//   [experiment] sweep = power | bd_count | rs_vs_rbd | single (required),
//                methods = mrc,corr_eig,sdr (default depends on the sweep),
//                realizations, mc_trials, seed, output,
//                threads (0 = hardware concurrency)
//   [fig2]       gamma_db (list), rbd (list)
//   [sdr]        randomizations, xi_points, xi_span_decades, xi_zoom_points,
//                seed
//
// Sweep-specific required keys:
//   power, single  p or p_dbm, J
//   bd_count       p or p_dbm, J_list
//   rs_vs_rbd      gamma_db, rbd

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "symrad/beamforming.hpp"
#include "symrad/channel.hpp"
#include "symrad/errors.hpp"

namespace symrad::cli {

enum class Sweep { PowerSweep, BdCountSweep, RsVsRbdCurve, SingleRun };

inline std::string to_string(Sweep s) {
  switch (s) {
    case Sweep::PowerSweep: return "power";
    case Sweep::BdCountSweep: return "bd_count";
    case Sweep::RsVsRbdCurve: return "rs_vs_rbd";
    case Sweep::SingleRun: return "single";
  }
  return "?";
}

struct ExperimentConfig {
  SystemParams system;             // system.p mirrors p_list.front()
  std::vector<double> p_list;      // transmit powers [W]
  std::vector<std::size_t> j_list;
  Sweep sweep = Sweep::SingleRun;
  std::vector<BeamformingMethod> methods;
  std::size_t n_realizations = 1;
  std::size_t mc_trials = 2000;
  std::uint64_t seed = 1;
  std::string output_path;
  std::size_t threads = 0;
  std::vector<double> gamma_db;
  std::vector<double> rbd_grid;
  SdrOptions sdr;

  bool operator==(const ExperimentConfig& o) const {
    return system == o.system && p_list == o.p_list && j_list == o.j_list &&
           sweep == o.sweep && methods == o.methods &&
           n_realizations == o.n_realizations && mc_trials == o.mc_trials &&
           seed == o.seed && output_path == o.output_path &&
           threads == o.threads && gamma_db == o.gamma_db &&
           rbd_grid == o.rbd_grid &&
           sdr.n_randomizations == o.sdr.n_randomizations &&
           sdr.seed == o.sdr.seed && sdr.grid.points == o.sdr.grid.points &&
           sdr.grid.span_decades == o.sdr.grid.span_decades &&
           sdr.grid.zoom_points == o.sdr.grid.zoom_points;
  }

  /// Cross-field checks; throws ConfigError naming the field.
  void validate() const {
    try {
      system.validate();
    } catch (const ValidationError& e) {
      throw ConfigError(e.what(), 0, "system");
    }
    if (n_realizations < 1) throw ConfigError("must be >= 1", 0, "realizations");
    if (mc_trials < 1) throw ConfigError("must be >= 1", 0, "mc_trials");
    auto need = [](bool ok, const char* field) {
      if (!ok) throw ConfigError("required for this sweep", 0, field);
    };
    switch (sweep) {
      case Sweep::PowerSweep:
      case Sweep::SingleRun:
        need(!p_list.empty(), "p");
        need(!methods.empty(), "methods");
        break;
      case Sweep::BdCountSweep:
        need(!p_list.empty(), "p");
        need(!j_list.empty(), "J_list");
        need(!methods.empty(), "methods");
        break;
      case Sweep::RsVsRbdCurve:
        need(!gamma_db.empty(), "gamma_db");
        need(!rbd_grid.empty(), "rbd");
        for (double r : rbd_grid) {
          if (!(r >= 0.0)) throw ConfigError("values must be >= 0", 0, "rbd");
        }
        break;
    }
    for (double p : p_list) {
      if (!(p > 0.0) || !std::isfinite(p)) {
        throw ConfigError("values must be finite and > 0", 0, "p");
      }
    }
    if (sdr.grid.points < 2) throw ConfigError("must be >= 2", 0, "xi_points");
    if (sdr.n_randomizations < 1) {
      throw ConfigError("must be >= 1", 0, "randomizations");
    }
  }
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

/// §V defaults for the given sweep; every required key is filled in.
inline ExperimentConfig default_config(Sweep sweep) {
  ExperimentConfig c;
  c.sweep = sweep;
  c.system.beta_hd = db_to_linear(-120.0);
  c.system.beta_h = db_to_linear(-110.0);
  c.system.beta_g = db_to_linear(-20.0);
  c.system.sigma2 = dbm_to_watts(-110.0);
  c.system.M = 4;
  c.system.K = 128;
  c.system.alpha = 1.0;
  switch (sweep) {
    case Sweep::PowerSweep:
      for (int dbm = 0; dbm <= 30; dbm += 5) c.p_list.push_back(dbm_to_watts(dbm));
      c.system.J = 200;
      c.methods = {BeamformingMethod::MRC, BeamformingMethod::CorrelationEig,
                   BeamformingMethod::SDR};
      c.mc_trials = 20000;
      break;
    case Sweep::BdCountSweep:
      c.p_list = {dbm_to_watts(0.0)};
      c.j_list = {0, 1, 2, 5, 10, 20, 50, 100, 200, 500};
      c.methods = {BeamformingMethod::CorrelationEig};
      c.n_realizations = 1000;
      c.mc_trials = 2000;
      break;
    case Sweep::RsVsRbdCurve:
      c.gamma_db = {10.0, 15.0, 20.0, 25.0};
      for (int i = 0; i <= 80; ++i) c.rbd_grid.push_back(i * 0.1);
      break;
    case Sweep::SingleRun:
      c.p_list = {dbm_to_watts(0.0)};
      c.system.J = 20;
      c.methods = {BeamformingMethod::MRC, BeamformingMethod::CorrelationEig,
                   BeamformingMethod::SDR};
      c.n_realizations = 10;
      break;
  }
  if (!c.p_list.empty()) c.system.p = c.p_list.front();
  return c;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

struct Entry {
  std::string value;
  std::size_t line = 0;
};

class Reader {
 public:
  Reader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  const Entry& get(const std::string& key) {
    used_.insert(key);
    return entries_.at(key);
  }

  double real(const std::string& key) { return parse_real(get(key), key); }

  std::size_t count(const std::string& key) {
    const Entry& e = get(key);
    return to_count(parse_real(e, key), e, key);
  }

  std::uint64_t u64(const std::string& key) {
    const Entry& e = get(key);
    std::string_view v = e.value;
    int base = 10;
    if (v.starts_with("0x") || v.starts_with("0X")) {
      v.remove_prefix(2);
      base = 16;
    }
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out, base);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
      throw ConfigError("expected an unsigned 64-bit integer, got '" + e.value + "'",
                        e.line, leaf(key));
    }
    return out;
  }

  /// Comma-separated scalars and start:step:stop ranges.
  std::vector<double> list(const std::string& key) {
    const Entry& e = get(key);
    std::vector<double> out;
    for (std::string_view item : split(e.value, ',')) {
      const auto parts = split(item, ':');
      if (parts.size() == 1) {
        out.push_back(parse_real({std::string(item), e.line}, key));
      } else if (parts.size() == 3) {
        const double a = parse_real({std::string(parts[0]), e.line}, key);
        const double step = parse_real({std::string(parts[1]), e.line}, key);
        const double b = parse_real({std::string(parts[2]), e.line}, key);
        if (step == 0.0 || (b - a) / step < 0.0) {
          throw ConfigError("range '" + std::string(item) + "' is empty or unbounded",
                            e.line, leaf(key));
        }
        const double n = std::floor((b - a) / step + 1e-9);
        if (n > 1e6) throw ConfigError("range has too many points", e.line, leaf(key));
        for (double i = 0; i <= n; i += 1.0) out.push_back(a + i * step);
      } else {
        throw ConfigError("malformed list item '" + std::string(item) + "'", e.line, leaf(key));
      }
    }
    return out;
  }

  std::vector<std::size_t> count_list(const std::string& key) {
    const Entry& e = entries_.at(key);
    std::vector<std::size_t> out;
    for (double v : list(key)) out.push_back(to_count(v, e, key));
    return out;
  }

  /// Keys present in the file that nobody asked for.
  std::vector<std::pair<std::string, std::size_t>> unused() const {
    std::vector<std::pair<std::string, std::size_t>> out;
    for (const auto& [k, e] : entries_) {
      if (!used_.count(k)) out.emplace_back(k, e.line);
    }
    return out;
  }

 private:
  static std::string leaf(const std::string& key) {
    return key.substr(key.find('.') + 1);
  }

  static double parse_real(const Entry& e, const std::string& key) {
    const std::string_view v = trim(e.value);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() ||
        !std::isfinite(out)) {
      throw ConfigError("expected a finite number, got '" + e.value + "'", e.line, leaf(key));
    }
    return out;
  }

  static std::size_t to_count(double v, const Entry& e, const std::string& key) {
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) {
      throw ConfigError("expected a non-negative integer, got '" + e.value + "'",
                        e.line, leaf(key));
    }
    return static_cast<std::size_t>(v);
  }

  std::map<std::string, Entry> entries_;
  std::set<std::string> used_;
};

inline BeamformingMethod parse_method(std::string_view s, std::size_t line) {
  if (s == "mrc") return BeamformingMethod::MRC;
  if (s == "corr_eig") return BeamformingMethod::CorrelationEig;
  if (s == "sdr") return BeamformingMethod::SDR;
  throw ConfigError("unknown method '" + std::string(s) +
                        "' (expected mrc, corr_eig or sdr)",
                    line, "methods");
}

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt17(v[i]);
  return s;
}

}  // namespace detail

/// Comma-separated method names, e.g. "mrc,sdr".
inline std::vector<BeamformingMethod> parse_methods(std::string_view s,
                                                    std::size_t line = 0) {
  std::vector<BeamformingMethod> out;
  for (std::string_view m : detail::split(s, ',')) {
    const BeamformingMethod b = detail::parse_method(m, line);
    for (BeamformingMethod x : out) {
      if (x == b) throw ConfigError("duplicate method '" + std::string(m) + "'", line, "methods");
    }
    out.push_back(b);
  }
  return out;
}

inline Sweep parse_sweep(std::string_view s, std::size_t line = 0) {
  if (s == "power") return Sweep::PowerSweep;
  if (s == "bd_count") return Sweep::BdCountSweep;
  if (s == "rs_vs_rbd") return Sweep::RsVsRbdCurve;
  if (s == "single") return Sweep::SingleRun;
  throw ConfigError("unknown sweep '" + std::string(s) +
                        "' (expected power, bd_count, rs_vs_rbd or single)",
                    line, "sweep");
}

/// Strict parse: unknown sections or keys, duplicates, dB/linear conflicts
/// and missing sweep fields are all ConfigErrors.
inline ExperimentConfig parse_config(const std::string& text) {
  static const std::map<std::string, std::set<std::string>> kKeys = {
      {"system",
       {"p", "p_dbm", "alpha", "sigma2", "sigma2_dbm", "K", "M", "J", "J_list",
        "beta_hd", "beta_hd_db", "beta_h", "beta_h_db", "beta_g", "beta_g_db",
        "bd_symbols"}},
      {"experiment",
       {"sweep", "methods", "realizations", "mc_trials", "seed", "output", "threads"}},
      {"fig2", {"gamma_db", "rbd"}},
      {"sdr", {"randomizations", "xi_points", "xi_span_decades", "xi_zoom_points", "seed"}},
  };

  std::map<std::string, detail::Entry> entries;  // "section.key"
  std::string section;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = detail::trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header", line_no);
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (!kKeys.count(section)) {
        throw ConfigError("unknown section [" + section + "]", line_no);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("expected 'key = value'", line_no);
    }
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (section.empty()) throw ConfigError("key outside any section", line_no, key);
    if (!kKeys.at(section).count(key)) {
      throw ConfigError("unknown key in [" + section + "]", line_no, key);
    }
    if (value.empty()) throw ConfigError("empty value", line_no, key);
    const std::string full = section + "." + key;
    if (entries.count(full)) {
      throw ConfigError("duplicate key (first on line " +
                            std::to_string(entries.at(full).line) + ")",
                        line_no, key);
    }
    entries[full] = {value, line_no};
  }

  detail::Reader r(std::move(entries));
  ExperimentConfig c;  // SystemParams defaults are the §V values
  SystemParams& s = c.system;

  // Exactly one of the linear or dB spelling, never both.
  auto either = [&](const std::string& lin, const std::string& db, double& out,
                    double (*conv)(double)) {
    const std::string kl = "system." + lin, kd = "system." + db;
    if (r.has(kl) && r.has(kd)) {
      throw ConfigError("both '" + lin + "' and '" + db + "' given",
                        r.get(kd).line, db);
    }
    if (r.has(kl)) out = r.real(kl);
    if (r.has(kd)) out = conv(r.real(kd));
  };
  either("beta_hd", "beta_hd_db", s.beta_hd, db_to_linear);
  either("beta_h", "beta_h_db", s.beta_h, db_to_linear);
  either("beta_g", "beta_g_db", s.beta_g, db_to_linear);
  either("sigma2", "sigma2_dbm", s.sigma2, dbm_to_watts);

  if (r.has("system.p") && r.has("system.p_dbm")) {
    throw ConfigError("both 'p' and 'p_dbm' given", r.get("system.p_dbm").line, "p_dbm");
  }
  if (r.has("system.p")) c.p_list = r.list("system.p");
  if (r.has("system.p_dbm")) {
    for (double v : r.list("system.p_dbm")) c.p_list.push_back(dbm_to_watts(v));
  }
  if (!c.p_list.empty()) s.p = c.p_list.front();

  if (r.has("system.alpha")) s.alpha = r.real("system.alpha");
  if (r.has("system.K")) s.K = r.count("system.K");
  if (r.has("system.M")) s.M = r.count("system.M");
  const bool has_j = r.has("system.J");
  if (has_j) s.J = r.count("system.J");
  if (r.has("system.J_list")) c.j_list = r.count_list("system.J_list");
  if (r.has("system.bd_symbols")) {
    const detail::Entry& e = r.get("system.bd_symbols");
    if (e.value == "cscg") {
      s.bd_symbol_model = BdSymbolModel::CSCG;
    } else if (e.value == "unit_modulus") {
      s.bd_symbol_model = BdSymbolModel::UnitModulusUniformPhase;
    } else {
      throw ConfigError("expected cscg or unit_modulus", e.line, "bd_symbols");
    }
  }

  const bool has_sweep = r.has("experiment.sweep");
  if (has_sweep) {
    const detail::Entry& e = r.get("experiment.sweep");
    c.sweep = parse_sweep(e.value, e.line);
  }
  if (r.has("experiment.methods")) {
    const detail::Entry& e = r.get("experiment.methods");
    c.methods = parse_methods(e.value, e.line);
  } else {
    c.methods = default_config(c.sweep).methods;
  }
  if (r.has("experiment.realizations")) c.n_realizations = r.count("experiment.realizations");
  if (r.has("experiment.mc_trials")) c.mc_trials = r.count("experiment.mc_trials");
  if (r.has("experiment.seed")) c.seed = r.u64("experiment.seed");
  if (r.has("experiment.output")) c.output_path = r.get("experiment.output").value;
  if (r.has("experiment.threads")) c.threads = r.count("experiment.threads");

  if (r.has("fig2.gamma_db")) c.gamma_db = r.list("fig2.gamma_db");
  if (r.has("fig2.rbd")) c.rbd_grid = r.list("fig2.rbd");

  if (r.has("sdr.randomizations")) c.sdr.n_randomizations = r.count("sdr.randomizations");
  if (r.has("sdr.xi_points")) c.sdr.grid.points = r.count("sdr.xi_points");
  if (r.has("sdr.xi_span_decades")) c.sdr.grid.span_decades = r.real("sdr.xi_span_decades");
  if (r.has("sdr.xi_zoom_points")) c.sdr.grid.zoom_points = r.count("sdr.xi_zoom_points");
  if (r.has("sdr.seed")) c.sdr.seed = r.u64("sdr.seed");

  if (!has_sweep) throw ConfigError("missing required key", 0, "sweep");
  if ((c.sweep == Sweep::PowerSweep || c.sweep == Sweep::SingleRun) && !has_j) {
    throw ConfigError("required for this sweep", 0, "J");
  }
  if (const auto extra = r.unused(); !extra.empty()) {
    throw ConfigError("key not used", extra.front().second,
                      extra.front().first.substr(extra.front().first.find('.') + 1));
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

/// Canonical text with linear keys only; parse_config(emit_config(c)) == c.
inline std::string emit_config(const ExperimentConfig& c) {
  using detail::fmt17;
  const SystemParams& s = c.system;
  std::ostringstream o;
  o << "[system]\n";
  if (!c.p_list.empty()) o << "p = " << detail::join(c.p_list) << "\n";
  o << "alpha = " << fmt17(s.alpha) << "\n"
    << "sigma2 = " << fmt17(s.sigma2) << "\n"
    << "K = " << s.K << "\n"
    << "M = " << s.M << "\n";
  o << "J = " << s.J << "\n";
  if (!c.j_list.empty()) {
    o << "J_list = ";
    for (std::size_t i = 0; i < c.j_list.size(); ++i) o << (i ? "," : "") << c.j_list[i];
    o << "\n";
  }
  o << "beta_hd = " << fmt17(s.beta_hd) << "\n"
    << "beta_h = " << fmt17(s.beta_h) << "\n"
    << "beta_g = " << fmt17(s.beta_g) << "\n"
    << "bd_symbols = " << to_string(s.bd_symbol_model) << "\n\n";
  o << "[experiment]\n"
    << "sweep = " << to_string(c.sweep) << "\n";
  if (!c.methods.empty()) {
    o << "methods = ";
    for (std::size_t i = 0; i < c.methods.size(); ++i) {
      o << (i ? "," : "") << to_string(c.methods[i]);
    }
    o << "\n";
  }
  o << "realizations = " << c.n_realizations << "\n"
    << "mc_trials = " << c.mc_trials << "\n"
    << "seed = " << c.seed << "\n";
  if (!c.output_path.empty()) o << "output = " << c.output_path << "\n";
  o << "threads = " << c.threads << "\n\n";
  if (!c.gamma_db.empty() || !c.rbd_grid.empty()) {
    o << "[fig2]\n";
    if (!c.gamma_db.empty()) o << "gamma_db = " << detail::join(c.gamma_db) << "\n";
    if (!c.rbd_grid.empty()) o << "rbd = " << detail::join(c.rbd_grid) << "\n";
    o << "\n";
  }
  o << "[sdr]\n"
    << "randomizations = " << c.sdr.n_randomizations << "\n"
    << "xi_points = " << c.sdr.grid.points << "\n"
    << "xi_span_decades = " << fmt17(c.sdr.grid.span_decades) << "\n"
    << "xi_zoom_points = " << c.sdr.grid.zoom_points << "\n"
    << "seed = " << c.sdr.seed << "\n";
  return o.str();
}

}  // namespace symrad::cli
