#pragma once

// Experiment runners behind the CLI subcommands.
//
// Seed scheme (master seed s, realization r = 0, 1, ...):
//   channels of realization r   sample_channels(params, derive_seed(derive_seed(s, 0), r))
//   BD symbols for the MC rate  derive_seed(derive_seed(s, 1), r)
//   SDR randomization           derive_seed(sdr.seed, r)
// Realization r therefore does not change when n_realizations does. All
// methods, powers and BD counts of one realization share the same symbol
// stream (common random numbers), and a smaller J is a prefix of the J_max
// draw, so differences between curves are paired.

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "symrad/beamforming.hpp"
#include "symrad/channel.hpp"
#include "symrad/cli/config.hpp"
#include "symrad/cli/csv.hpp"
#include "symrad/parallel.hpp"
#include "symrad/rates.hpp"

namespace symrad::cli {

inline std::uint64_t channel_seed(std::uint64_t master, std::size_t r) {
  return derive_seed(derive_seed(master, 0), r);
}
inline std::uint64_t symbol_seed(std::uint64_t master, std::size_t r) {
  return derive_seed(derive_seed(master, 1), r);
}

/// First j BDs of a realization, with the SIC order recomputed.
inline ChannelRealization truncate_bds(const ChannelRealization& full, std::size_t j) {
  ChannelRealization r;
  r.hd = full.hd;
  r.h.assign(full.h.begin(), full.h.begin() + static_cast<std::ptrdiff_t>(j));
  r.g.assign(full.g.begin(), full.g.begin() + static_cast<std::ptrdiff_t>(j));
  finalize_realization(r);
  return r;
}

namespace detail {

inline std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string dbm_list(const std::vector<double>& watts) {
  std::string s;
  for (std::size_t i = 0; i < watts.size(); ++i) {
    s += (i ? " " : "") + fmt_short(watts_to_dbm(watts[i]));
  }
  return s;
}

inline void common_metadata(ResultTable& t, const ExperimentConfig& c,
                            const std::string& figure) {
  const SystemParams& s = c.system;
  auto add = [&](std::string k, std::string v) { t.metadata.emplace_back(std::move(k), std::move(v)); };
  add("figure", figure);
  add("sweep", to_string(c.sweep));
  add("units", "rates in bps/Hz; stderr is the standard error of the mean");
  add("M", std::to_string(s.M));
  add("K", std::to_string(s.K));
  add("alpha", num(s.alpha));
  add("sigma2_w", num(s.sigma2));
  add("beta_hd", num(s.beta_hd));
  add("beta_h", num(s.beta_h));
  add("beta_g", num(s.beta_g));
  add("bd_symbols", to_string(s.bd_symbol_model));
  add("seed", std::to_string(c.seed));
}

/// Mean and standard error of per-realization values, skipping NaNs.
struct Summary {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double se = 0.0;
  std::size_t n = 0;
};

inline Summary summarize(const std::vector<double>& v) {
  symrad::detail::RunningStats st;
  for (double x : v) {
    if (!std::isnan(x)) st.add(x);
  }
  Summary s;
  s.n = st.count();
  if (s.n > 0) s.mean = st.mean();
  if (s.n > 1) s.se = st.std_error();
  return s;
}

inline std::string failure_status(std::size_t failures) {
  return failures == 0 ? "ok" : "solver_failure:" + std::to_string(failures);
}

}  // namespace detail

/// Rs versus R_BD in the massive-BD regime, one curve per gamma.
inline ResultTable run_fig2(const std::vector<double>& gamma_list_db,
                            const std::vector<double>& rbd_grid, std::size_t K,
                            std::size_t M) {
  ResultTable t;
  std::string g;
  for (std::size_t i = 0; i < gamma_list_db.size(); ++i) {
    g += (i ? " " : "") + detail::fmt_short(gamma_list_db[i]);
  }
  t.metadata = {{"figure", "fig2"},
                {"sweep", "rs_vs_rbd"},
                {"units", "sweep_value = R_BD [bps/Hz]; primary rate [bps/Hz]"},
                {"M", std::to_string(M)},
                {"K", std::to_string(K)},
                {"gamma_db", g},
                {"gamma_note", "gamma values are a configurable choice, default 10 15 20 25 dB"}};
  for (double gdb : gamma_list_db) {
    const double gamma = db_to_linear(gdb);
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
      throw ConfigError("gamma must be finite", 0, "gamma_db");
    }
    for (double rbd : rbd_grid) {
      ResultRow row;
      row.sweep_value = rbd;
      row.curve = "gamma_db=" + detail::fmt_short(gdb);
      row.method = "massive_bd";
      row.secondary_rate = rbd;
      row.n_samples = 1;
      try {
        row.primary_rate = rs_given_rbd(gamma, rbd, K, M);
      } catch (const DomainError&) {
        row.primary_rate = std::numeric_limits<double>::quiet_NaN();
        row.status = "underflow";
      }
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

inline ResultTable run_fig2(const ExperimentConfig& c) {
  return run_fig2(c.gamma_db, c.rbd_grid, c.system.K, c.system.M);
}

namespace detail {

/// Shared by fig3 and `run`: fixed J, powers swept, n realizations. The
/// beamformers are computed once per realization; none of the three depends
/// on p (the SDR objective only shifts by log2 p).
inline ResultTable power_sweep(const ExperimentConfig& c, std::size_t n_real,
                               bool closed_form_rows, const std::string& figure) {
  const std::size_t np = c.p_list.size();
  const std::size_t nm = c.methods.size();
  const bool cscg = c.system.bd_symbol_model == BdSymbolModel::CSCG;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  struct Cell {
    double mc = 0.0, mc_se = 0.0, closed = 0.0, secondary = 0.0;
  };
  struct Outcome {
    std::vector<bool> failed;          // per method
    std::vector<Cell> cells;           // [method][p]
  };
  std::vector<Outcome> out(n_real);

  parallel_for(n_real, c.threads, [&](std::size_t r) {
    SystemParams params = c.system;
    params.p = c.p_list.front();
    const ChannelRealization real = sample_channels(params, channel_seed(c.seed, r));
    Outcome& o = out[r];
    o.failed.assign(nm, false);
    o.cells.assign(nm * np, {});
    std::vector<double> secondary(np);
    for (std::size_t k = 0; k < np; ++k) {
      params.p = c.p_list[k];
      secondary[k] = bd_sum_rate_logdet(real, params);
    }
    for (std::size_t m = 0; m < nm; ++m) {
      params.p = c.p_list.front();
      SdrOptions sdr = c.sdr;
      sdr.seed = derive_seed(c.sdr.seed, r);
      BeamformerResult bf;
      try {
        bf = make_beamformer(c.methods[m], real, params, sdr);
      } catch (const SolverError&) {
        o.failed[m] = true;
        continue;
      }
      for (std::size_t k = 0; k < np; ++k) {
        params.p = c.p_list[k];
        Cell& cell = o.cells[m * np + k];
        const MonteCarloEstimate est =
            primary_rate_mc(bf.wd, real, params, c.mc_trials, symbol_seed(c.seed, r));
        cell.mc = est.mean;
        cell.mc_se = est.std_error;
        cell.closed = cscg ? primary_rate_closed(bf.wd, real, params).primary_rate_bps_hz : nan;
        cell.secondary = secondary[k];
      }
    }
  });

  ResultTable t;
  common_metadata(t, c, figure);
  t.metadata.emplace_back("J", std::to_string(c.system.J));
  t.metadata.emplace_back("p_dbm", dbm_list(c.p_list));
  t.metadata.emplace_back("realizations", std::to_string(n_real));
  t.metadata.emplace_back("mc_trials", std::to_string(c.mc_trials));
  t.metadata.emplace_back(
      "n_samples_note", n_real == 1 ? "MC trials of the single realization"
                                    : "realizations averaged (stderr across realizations)");
  const std::string curve = "J=" + std::to_string(c.system.J);

  for (std::size_t k = 0; k < np; ++k) {
    for (std::size_t m = 0; m < nm; ++m) {
      std::vector<double> mc, closed, sec;
      std::size_t failures = 0;
      for (std::size_t r = 0; r < n_real; ++r) {
        if (out[r].failed[m]) {
          ++failures;
          continue;
        }
        const Cell& cell = out[r].cells[m * np + k];
        mc.push_back(cell.mc);
        closed.push_back(cell.closed);
        sec.push_back(cell.secondary);
      }
      const Summary smc = summarize(mc), scl = summarize(closed), ssec = summarize(sec);
      ResultRow row;
      row.sweep_value = watts_to_dbm(c.p_list[k]);
      row.curve = curve;
      row.method = to_string(c.methods[m]);
      row.primary_rate = smc.mean;
      row.secondary_rate = ssec.mean;
      row.secondary_std_error = ssec.se;
      row.status = failure_status(failures);
      if (n_real == 1) {
        row.std_error = failures ? 0.0 : out[0].cells[m * np + k].mc_se;
        row.n_samples = failures ? 0 : c.mc_trials;
      } else {
        row.std_error = smc.se;
        row.n_samples = smc.n;
      }
      t.rows.push_back(row);
      if (closed_form_rows && cscg) {
        row.method += "_closed_form";
        row.primary_rate = scl.mean;
        row.std_error = scl.se;
        row.n_samples = scl.n;
        t.rows.push_back(row);
      }
    }
  }
  return t;
}

}  // namespace detail

/// Primary rate versus p for each beamformer on one realization.
inline ResultTable run_fig3(const ExperimentConfig& c) {
  c.validate();
  return detail::power_sweep(c, 1, false, "fig3");
}

/// Ad hoc scenario: fixed J, each p in the list, averaged over
/// n_realizations, with closed-form rows next to the MC rows.
inline ResultTable run_single(const ExperimentConfig& c) {
  c.validate();
  return detail::power_sweep(c, c.n_realizations, true, "run");
}

/// Mean primary (MC) and secondary (log-det) rates versus J, plus the
/// primary gain over J = 0 computed on paired realizations.
inline ResultTable run_fig4_fig5(const ExperimentConfig& c,
                                 const std::string& figure = "fig4") {
  c.validate();
  const std::size_t n_real = c.n_realizations;
  const std::size_t np = c.p_list.size();
  const std::size_t nj = c.j_list.size();
  const std::size_t nm = c.methods.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::size_t j_max = 0;
  for (std::size_t j : c.j_list) j_max = std::max(j_max, j);

  // [r][(p, J, method)] primary rate, gain over J = 0, and [r][(p, J)] secondary.
  auto idx = [&](std::size_t k, std::size_t ji, std::size_t m) {
    return (k * nj + ji) * nm + m;
  };
  std::vector<std::vector<double>> primary(n_real), gain(n_real), secondary(n_real);

  parallel_for(n_real, c.threads, [&](std::size_t r) {
    SystemParams params = c.system;
    params.J = j_max;
    params.p = c.p_list.front();
    const ChannelRealization full = sample_channels(params, channel_seed(c.seed, r));
    primary[r].assign(np * nj * nm, nan);
    gain[r].assign(np * nj * nm, nan);
    secondary[r].assign(np * nj, nan);
    for (std::size_t ji = 0; ji < nj; ++ji) {
      const ChannelRealization real = truncate_bds(full, c.j_list[ji]);
      params.J = c.j_list[ji];
      for (std::size_t k = 0; k < np; ++k) {
        params.p = c.p_list[k];
        secondary[r][k * nj + ji] = bd_sum_rate_logdet(real, params);
      }
      for (std::size_t m = 0; m < nm; ++m) {
        params.p = c.p_list.front();
        SdrOptions sdr = c.sdr;
        sdr.seed = derive_seed(c.sdr.seed, r);
        BeamformerResult bf;
        try {
          bf = make_beamformer(c.methods[m], real, params, sdr);
        } catch (const SolverError&) {
          continue;  // left as NaN, counted below
        }
        for (std::size_t k = 0; k < np; ++k) {
          params.p = c.p_list[k];
          const double rate =
              primary_rate_mc(bf.wd, real, params, c.mc_trials, symbol_seed(c.seed, r)).mean;
          // At J = 0 every beamformer is MRC and the rate is deterministic.
          const double base =
              std::log2(1.0 + params.p * full.hd.squaredNorm() / params.sigma2);
          primary[r][idx(k, ji, m)] = rate;
          gain[r][idx(k, ji, m)] = rate - base;
        }
      }
    }
  });

  ResultTable t;
  detail::common_metadata(t, c, figure);
  t.metadata.emplace_back("J_list", [&] {
    std::string s;
    for (std::size_t i = 0; i < nj; ++i) s += (i ? " " : "") + std::to_string(c.j_list[i]);
    return s;
  }());
  t.metadata.emplace_back("p_dbm", detail::dbm_list(c.p_list));
  t.metadata.emplace_back("p_note", "power grid is a configurable choice, default 0 dBm");
  t.metadata.emplace_back("realizations", std::to_string(n_real));
  t.metadata.emplace_back("mc_trials", std::to_string(c.mc_trials));
  t.metadata.emplace_back("gain_rows", "<method>_gain = primary rate minus the J = 0 rate of the same realization");

  for (std::size_t k = 0; k < np; ++k) {
    const std::string curve = "p_dbm=" + detail::fmt_short(watts_to_dbm(c.p_list[k]));
    for (std::size_t ji = 0; ji < nj; ++ji) {
      std::vector<double> sec(n_real);
      for (std::size_t r = 0; r < n_real; ++r) sec[r] = secondary[r][k * nj + ji];
      const detail::Summary ssec = detail::summarize(sec);
      for (std::size_t m = 0; m < nm; ++m) {
        std::vector<double> pr(n_real), gn(n_real);
        for (std::size_t r = 0; r < n_real; ++r) {
          pr[r] = primary[r][idx(k, ji, m)];
          gn[r] = gain[r][idx(k, ji, m)];
        }
        const detail::Summary sp = detail::summarize(pr), sg = detail::summarize(gn);
        ResultRow row;
        row.sweep_value = static_cast<double>(c.j_list[ji]);
        row.curve = curve;
        row.method = to_string(c.methods[m]);
        row.primary_rate = sp.mean;
        row.std_error = sp.se;
        row.secondary_rate = ssec.mean;
        row.secondary_std_error = ssec.se;
        row.n_samples = sp.n;
        row.status = detail::failure_status(n_real - sp.n);
        t.rows.push_back(row);
        row.method += "_gain";
        row.primary_rate = sg.mean;
        row.std_error = sg.se;
        t.rows.push_back(row);
      }
    }
  }
  return t;
}

inline bool has_solver_failures(const ResultTable& t) {
  for (const ResultRow& r : t.rows) {
    if (r.status.starts_with("solver_failure")) return true;
  }
  return false;
}

}  // namespace symrad::cli
