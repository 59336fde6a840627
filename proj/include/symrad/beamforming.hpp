#pragma once

// Receive beamformers for the primary link.
//
//  - MRC: match the direct link only, wd = hd / ||hd||.
//  - CorrelationEig: dominant eigenvector of E[h_eq h_eq^H]
//      = hd hd^H + alpha sum_j |h_j|^2 g_j g_j^H,
//    which maximizes the Jensen upper bound of the primary rate.
//  - SDR: maximizes the semi-closed-form rate
//      log2(w^H Hd w / sigma2) - Ei(-w^H Hd w / w^H Hs w) log2(e)
//    (Hd = p hd hd^H, Hs = p alpha sum_j |h_j|^2 g_j g_j^H). For fixed
//    xi = w^H Hd w / w^H Hs w the lifted problem over W = w w^H is an SDP:
//      max Tr(W Hd)  s.t.  Tr(W) = 1, Tr(W (Hd - xi Hs)) = 0, W >= 0.
//    xi is found by a log-spaced grid, a zoom and a golden-section polish;
//    the beam is recovered from W* by Gaussian randomization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "symrad/channel.hpp"
#include "symrad/errors.hpp"
#include "symrad/numerics.hpp"
#include "symrad/rates.hpp"
#include "symrad/sdp.hpp"

namespace symrad {

enum class BeamformingMethod { MRC, CorrelationEig, SDR };

inline std::string to_string(BeamformingMethod m) {
  switch (m) {
    case BeamformingMethod::MRC: return "mrc";
    case BeamformingMethod::CorrelationEig: return "corr_eig";
    case BeamformingMethod::SDR: return "sdr";
  }
  return "?";
}

struct BeamformerResult {
  ComplexVector wd;
  BeamformingMethod method = BeamformingMethod::MRC;
  double objective = 0.0;
  std::map<std::string, double> diagnostics;
  std::string note;
};

inline BeamformerResult mrc_beamformer(const ComplexVector& hd) {
  const double n = hd.norm();
  if (!(n > 0.0)) throw DegenerateError("mrc_beamformer: zero direct link");
  BeamformerResult r;
  r.wd = hd / n;
  r.method = BeamformingMethod::MRC;
  r.objective = n * n;  // |wd^H hd|^2
  return r;
}

/// hd hd^H + alpha sum_j |h_j|^2 g_j g_j^H
inline HermitianMatrix correlation_matrix(const ChannelRealization& real,
                                          const SystemParams& params) {
  numerics::ComplexMatrix m = real.hd * real.hd.adjoint();
  for (std::size_t j = 0; j < real.num_bds(); ++j) {
    m.noalias() += (params.alpha * std::norm(real.h[j])) * (real.g[j] * real.g[j].adjoint());
  }
  return HermitianMatrix(m);
}

inline BeamformerResult corr_eig_beamformer(const ChannelRealization& real,
                                            const SystemParams& params) {
  if (real.num_bds() == 0) {
    BeamformerResult r = mrc_beamformer(real.hd);
    r.note = "J = 0: correlation matrix is rank one, returning MRC";
    r.diagnostics["degenerate_j0"] = 1.0;
    return r;
  }
  const HermitianMatrix corr = correlation_matrix(real, params);
  // Normalize for the eigensolver; physical entries are ~1e-12.
  const double scale = corr.matrix().cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) {
    throw DegenerateError("corr_eig_beamformer: zero correlation matrix");
  }
  const numerics::HermitianEigen e = numerics::herm_eig(corr * (1.0 / scale));
  const Index m = corr.dim();
  BeamformerResult r;
  r.method = BeamformingMethod::CorrelationEig;
  r.wd = e.vectors.col(m - 1);
  r.objective = corr.quadratic_form(r.wd);
  if (m > 1) {
    r.diagnostics["eigen_ratio"] =
        e.values(m - 2) > 0.0 ? e.values(m - 1) / e.values(m - 2)
                              : std::numeric_limits<double>::infinity();
  }
  return r;
}

/// log2(1 + p wd^H corr wd / sigma2)
inline double jensen_upper_bound(const ComplexVector& wd,
                                 const HermitianMatrix& corr,
                                 const SystemParams& params) {
  detail::require_unit(wd, "jensen_upper_bound");
  detail::require_length(wd, corr.dim(), "jensen_upper_bound");
  return std::log1p(params.p * corr.quadratic_form(wd) / params.sigma2) /
         std::numbers::ln2;
}

/// The semi-closed-form rate as a function of the beam direction, with the
/// matrices Hd and Hs precomputed. Global phase and norm of w do not matter.
class ClosedFormObjective {
 public:
  ClosedFormObjective(const ChannelRealization& real, const SystemParams& params)
      : sigma2_(params.sigma2) {
    hd_ = HermitianMatrix::outer(real.hd) * params.p;
    numerics::ComplexMatrix hs =
        numerics::ComplexMatrix::Zero(real.antennas(), real.antennas());
    for (std::size_t j = 0; j < real.num_bds(); ++j) {
      hs.noalias() += (params.p * params.alpha * std::norm(real.h[j])) *
                      (real.g[j] * real.g[j].adjoint());
    }
    hs_ = HermitianMatrix(hs);
  }

  const HermitianMatrix& direct() const noexcept { return hd_; }
  const HermitianMatrix& scattered() const noexcept { return hs_; }

  /// xi(w) = w^H Hd w / w^H Hs w
  double xi(const ComplexVector& w) const {
    return hd_.quadratic_form(w) / hs_.quadratic_form(w);
  }

  /// log2(t / sigma2) - Ei(-xi) log2(e) for signal power t and ratio xi.
  double value(double t, double xi) const {
    if (!(t > 0.0)) return -std::numeric_limits<double>::infinity();
    double delta = 0.0;
    if (std::isfinite(xi)) delta = -numerics::expint_Ei(-xi) * kLog2E;
    return std::log2(t / sigma2_) + delta;
  }

  double operator()(const ComplexVector& w) const {
    const double nn = w.squaredNorm();
    const double t = hd_.quadratic_form(w) / nn;
    const double u = hs_.quadratic_form(w) / nn;
    return value(t, u > 0.0 ? t / u : std::numeric_limits<double>::infinity());
  }

 private:
  double sigma2_;
  HermitianMatrix hd_;
  HermitianMatrix hs_;
};

/// The xi grid is log-spaced over [xi_lo, xi_hi] (see detail::xi_search_range).
struct XiGridSpec {
  std::size_t points = 64;
  double span_decades = 2.0;        // xi_hi = xi_mrc 10^span when Hs is singular
  double max_decades_below = 12.0;  // xi_lo >= xi_hi 10^-max_decades_below
  std::size_t zoom_points = 16;
  bool golden_refine = true;
  double refine_tolerance = 1e-9;  // relative width in log(xi)
};

struct SdrOptions {
  XiGridSpec grid;
  std::size_t n_randomizations = 200;
  std::uint64_t seed = 0x5D12ULL;
  sdp::SolverOptions solver;
};

namespace detail {

struct XiEvaluation {
  double xi = 0.0;
  double value = -std::numeric_limits<double>::infinity();  // bps/Hz bound
  bool feasible = false;
  sdp::SdpSolution solution;
};

/// log(xi) interval that must contain the optimal ratio.
///  - Upper end: xi cannot exceed max_w xi(w) = p hd^H Hs^{-1} hd. With a
///    singular Hs the ratio is unbounded and span_decades above xi_mrc is used.
///  - Lower end: with ratio xi the signal power is at most xi lambda_max(Hs),
///    so the objective is at most U(xi) = value(xi lambda_max(Hs), xi), which
///    increases in xi. Ratios with U(xi) below the value of the MRC or
///    correlation beam cannot be optimal.
inline std::pair<double, double> xi_search_range(const ClosedFormObjective& objective,
                                                 const ComplexVector& w_mrc,
                                                 double xi_mrc,
                                                 const ChannelRealization& real,
                                                 const SystemParams& params,
                                                 const XiGridSpec& g) {
  const double ln10 = std::log(10.0);
  const double hs_scale = objective.scattered().matrix().trace().real();
  const numerics::HermitianEigen e =
      numerics::herm_eig(objective.scattered() * (1.0 / hs_scale));
  const Index m = e.values.size();
  const double top = e.values(m - 1) * hs_scale;
  double hi = std::log(xi_mrc) + g.span_decades * ln10;
  if (e.values(0) > 1e-10 * e.values(m - 1)) {
    // hd^H Hs^{-1} hd from the eigendecomposition.
    double acc = 0.0;
    for (Index k = 0; k < m; ++k) {
      acc += std::norm(e.vectors.col(k).dot(real.hd)) / (e.values(k) * hs_scale);
    }
    hi = std::log(params.p * acc) - 1e-6;  // the endpoint itself is a single point
  }
  const double reference =
      std::max(objective(w_mrc), objective(corr_eig_beamformer(real, params).wd));
  auto bound = [&](double z) {
    const double xi = std::exp(z);
    return objective.value(xi * top, xi);
  };
  double lo = hi - g.max_decades_below * ln10;
  if (bound(lo) < reference) {
    double a = lo, b = hi;
    for (int it = 0; it < 100 && b - a > 1e-6; ++it) {
      const double mid = 0.5 * (a + b);
      (bound(mid) < reference ? a : b) = mid;
    }
    lo = a;
  }
  return {lo, hi};
}

}  // namespace detail

inline BeamformerResult sdr_beamformer(const ChannelRealization& real,
                                       const SystemParams& params,
                                       const SdrOptions& opts = {}) {
  if (params.bd_symbol_model != BdSymbolModel::CSCG) {
    throw ValidationError("sdr_beamformer: requires CSCG BD symbols");
  }
  BeamformerResult mrc = mrc_beamformer(real.hd);
  const ClosedFormObjective objective(real, params);
  const double hs_trace = objective.scattered().matrix().trace().real();
  if (real.num_bds() == 0 || !(hs_trace > 0.0)) {
    mrc.note = "no backscatter contribution: returning MRC";
    mrc.diagnostics["degenerate_j0"] = 1.0;
    mrc.objective = objective(mrc.wd);
    return mrc;
  }

  // Unit-trace data for the solver.
  const double hd_trace = objective.direct().matrix().trace().real();
  const HermitianMatrix hd_n = objective.direct() * (1.0 / hd_trace);
  const HermitianMatrix hs_n = objective.scattered() * (1.0 / hs_trace);
  const double ratio = hs_trace / hd_trace;

  std::size_t solves = 0;
  std::size_t skipped = 0;
  std::size_t iterations = 0;
  auto evaluate = [&](double xi) {
    detail::XiEvaluation ev;
    ev.xi = xi;
    sdp::SdpProblem prob;
    prob.objective = hd_n;
    prob.equalities.push_back({HermitianMatrix::identity(hd_n.dim()), 1.0});
    prob.equalities.push_back({hd_n - hs_n * (xi * ratio), 0.0});
    ev.solution = sdp::solve(prob, opts.solver);
    ++solves;
    iterations += static_cast<std::size_t>(ev.solution.iterations);
    if (ev.solution.status == sdp::SdpStatus::Optimal) {
      ev.feasible = true;
      ev.value = objective.value(ev.solution.objective_value * hd_trace, xi);
    } else {
      ++skipped;
    }
    return ev;
  };
  auto better = [](const detail::XiEvaluation& a, const detail::XiEvaluation& b) {
    return a.feasible && (!b.feasible || a.value > b.value);
  };

  const double xi_mrc = objective.xi(mrc.wd);
  const auto& g = opts.grid;
  if (g.points < 2) throw ValidationError("sdr_beamformer: need >= 2 grid points");
  const auto [lo, hi] = detail::xi_search_range(objective, mrc.wd, xi_mrc, real, params, g);
  std::vector<detail::XiEvaluation> grid;
  grid.reserve(g.points);
  for (std::size_t k = 0; k < g.points; ++k) {
    const double t = lo + (hi - lo) * static_cast<double>(k) /
                              static_cast<double>(g.points - 1);
    grid.push_back(evaluate(std::exp(t)));
  }
  std::size_t best_k = 0;
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (better(grid[k], grid[best_k])) best_k = k;
  if (!grid[best_k].feasible) {
    throw SolverError("sdr_beamformer: every xi grid point failed");
  }
  detail::XiEvaluation best = grid[best_k];

  // Zoom between the neighbours of the best grid point.
  const double step = (hi - lo) / static_cast<double>(g.points - 1);
  double zlo = std::log(best.xi) - step;
  double zhi = std::log(best.xi) + step;
  if (g.zoom_points >= 2) {
    std::vector<detail::XiEvaluation> zoom;
    for (std::size_t k = 0; k < g.zoom_points; ++k) {
      const double t = zlo + (zhi - zlo) * static_cast<double>(k) /
                                 static_cast<double>(g.zoom_points - 1);
      zoom.push_back(evaluate(std::exp(t)));
    }
    std::size_t zk = 0;
    for (std::size_t k = 1; k < zoom.size(); ++k)
      if (better(zoom[k], zoom[zk])) zk = k;
    if (better(zoom[zk], best)) best = zoom[zk];
    const double zstep = (zhi - zlo) / static_cast<double>(g.zoom_points - 1);
    zlo = std::log(best.xi) - zstep;
    zhi = std::log(best.xi) + zstep;
  }

  // Golden-section polish of the unimodal neighbourhood in log(xi).
  if (g.golden_refine) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = zlo, b = zhi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    detail::XiEvaluation fc = evaluate(std::exp(c));
    detail::XiEvaluation fd = evaluate(std::exp(d));
    for (int it = 0; it < 200 && (b - a) > g.refine_tolerance; ++it) {
      if (better(fd, fc)) {
        a = c;
        c = d;
        fc = std::move(fd);
        d = a + inv_phi * (b - a);
        fd = evaluate(std::exp(d));
      } else {
        b = d;
        d = c;
        fd = std::move(fc);
        c = b - inv_phi * (b - a);
        fc = evaluate(std::exp(c));
      }
    }
    if (better(fc, best)) best = fc;
    if (better(fd, best)) best = fd;
  }

  const HermitianMatrix& w_star = best.solution.W;
  BeamformerResult r;
  r.method = BeamformingMethod::SDR;
  r.wd = sdp::extract_rank1(w_star, opts.n_randomizations, objective, opts.seed);
  r.objective = objective(r.wd);

  const numerics::HermitianEigen e = numerics::herm_eig(w_star);
  const Index m = w_star.dim();
  const double top = e.values(m - 1);
  const double second = m > 1 ? std::max(e.values(m - 2), 0.0) : 0.0;
  r.diagnostics["xi_star"] = best.xi;
  r.diagnostics["xi_mrc"] = xi_mrc;
  r.diagnostics["sdp_bound"] = best.value;
  r.diagnostics["sdp_trace_objective"] = best.solution.objective_value;
  r.diagnostics["recovered_trace_objective"] = hd_n.quadratic_form(r.wd);
  r.diagnostics["eigen_ratio"] =
      second > 0.0 ? top / second : std::numeric_limits<double>::infinity();
  r.diagnostics["sdp_solves"] = static_cast<double>(solves);
  r.diagnostics["skipped_points"] = static_cast<double>(skipped);
  r.diagnostics["iterations"] = static_cast<double>(iterations);
  return r;
}

/// Dispatches on the method tag.
inline BeamformerResult make_beamformer(BeamformingMethod method,
                                        const ChannelRealization& real,
                                        const SystemParams& params,
                                        const SdrOptions& sdr = {}) {
  switch (method) {
    case BeamformingMethod::MRC: return mrc_beamformer(real.hd);
    case BeamformingMethod::CorrelationEig: return corr_eig_beamformer(real, params);
    case BeamformingMethod::SDR: return sdr_beamformer(real, params, sdr);
  }
  throw ValidationError("make_beamformer: unknown method");
}

}  // namespace symrad
