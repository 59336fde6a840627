#pragma once

// Achievable rates of the primary (PT -> AP) link and of the backscatter
// multiple-access channel (BDs -> AP, MMSE-SIC receiver).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "symrad/channel.hpp"
#include "symrad/errors.hpp"
#include "symrad/numerics.hpp"
#include "symrad/rng.hpp"

namespace symrad {

inline constexpr double kLog2E = std::numbers::log2e;
inline constexpr double kUnitNormTolerance = 1e-9;

enum class RateMethod { MonteCarlo, ClosedForm, Asymptotic };

struct RateReport {
  double primary_rate_bps_hz = 0.0;
  double secondary_sum_rate_bps_hz = 0.0;
  double lambda = 0.0;       // direct-link SNR p |wd^H hd|^2 / sigma2
  double sigma_param = 0.0;  // sum_j p alpha |h_j|^2 |wd^H g_j|^2 / (2 sigma2)
  double delta_rs = 0.0;     // -Ei(-lambda / 2 Sigma) log2(e)
  bool zero_variance_limit = false;  // Sigma == 0, delta_rs taken as 0
  RateMethod method = RateMethod::ClosedForm;
};

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

namespace detail {

inline void require_unit(const ComplexVector& wd, const char* who) {
  const double n = wd.norm();
  if (!(std::abs(n - 1.0) <= kUnitNormTolerance)) {
    std::ostringstream os;
    os << who << ": beamformer must have unit norm (got " << n << ")";
    throw ValidationError(os.str());
  }
}

inline void require_length(const ComplexVector& v, Index m, const char* who) {
  if (v.size() != m) {
    throw ValidationError(std::string(who) + ": vector length mismatch");
  }
}

/// Running mean / variance (Welford).
class RunningStats {
 public:
  void add(double x) noexcept {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }
  double std_error() const noexcept {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace detail

/// Draws one BD symbol vector c(n) of length J.
inline std::vector<Complex> draw_bd_symbols(BdSymbolModel model,
                                            std::size_t j, Rng& rng) {
  std::vector<Complex> c(j);
  for (auto& cj : c) {
    cj = model == BdSymbolModel::CSCG ? rng.cscg(1.0) : rng.unit_phase();
  }
  return c;
}

/// h_eq(c) = h_d + sum_j sqrt(alpha) h_j g_j c_j
inline ComplexVector equivalent_channel(const ChannelRealization& real,
                                        const std::vector<Complex>& c,
                                        double alpha) {
  if (c.size() != real.num_bds()) {
    throw ValidationError("equivalent_channel: expected " +
                          std::to_string(real.num_bds()) +
                          " BD symbols, got " + std::to_string(c.size()));
  }
  ComplexVector heq = real.hd;
  const double sa = std::sqrt(alpha);
  for (std::size_t j = 0; j < c.size(); ++j) {
    heq += (sa * real.h[j] * c[j]) * real.g[j];
  }
  return heq;
}

/// r_s = p |wd^H heq|^2 / sigma2
inline double primary_snr(const ComplexVector& wd, const ComplexVector& heq,
                          const SystemParams& params) {
  detail::require_unit(wd, "primary_snr");
  detail::require_length(heq, wd.size(), "primary_snr");
  return params.p * std::norm(wd.dot(heq)) / params.sigma2;
}

/// Monte Carlo estimate of E_c[log2(1 + r_s(c))]. Trial t draws its BD
/// symbols from stream derive_seed(seed, t), so any partition of the trials
/// across workers reproduces the serial result.
inline MonteCarloEstimate primary_rate_mc(const ComplexVector& wd,
                                          const ChannelRealization& real,
                                          const SystemParams& params,
                                          std::size_t n_trials,
                                          std::uint64_t seed) {
  if (n_trials < 1) throw ValidationError("primary_rate_mc: n_trials < 1");
  detail::require_unit(wd, "primary_rate_mc");
  detail::require_length(real.hd, wd.size(), "primary_rate_mc");
  const std::size_t nbd = real.num_bds();
  const double sa = std::sqrt(params.alpha);
  // wd^H h_eq(c) = a0 + sum_j a_j c_j
  const Complex a0 = wd.dot(real.hd);
  std::vector<Complex> a(nbd);
  for (std::size_t j = 0; j < nbd; ++j) a[j] = sa * real.h[j] * wd.dot(real.g[j]);
  const double snr_scale = params.p / params.sigma2;
  const bool cscg = params.bd_symbol_model == BdSymbolModel::CSCG;

  detail::RunningStats stats;
  for (std::size_t t = 0; t < n_trials; ++t) {
    Rng rng(derive_seed(seed, t));
    Complex s = a0;
    for (std::size_t j = 0; j < nbd; ++j) {
      s += a[j] * (cscg ? rng.cscg(1.0) : rng.unit_phase());
    }
    stats.add(std::log2(1.0 + snr_scale * std::norm(s)));
  }
  return {stats.mean(), stats.std_error(), stats.count()};
}

/// Noncentrality lambda and variance parameter Sigma of the primary SNR.
inline std::pair<double, double> primary_snr_parameters(
    const ComplexVector& wd, const ChannelRealization& real,
    const SystemParams& params) {
  const double lambda = params.p * std::norm(wd.dot(real.hd)) / params.sigma2;
  double acc = 0.0;
  for (std::size_t j = 0; j < real.num_bds(); ++j) {
    acc += std::norm(real.h[j]) * std::norm(wd.dot(real.g[j]));
  }
  const double sigma = params.p * params.alpha * acc / (2.0 * params.sigma2);
  return {lambda, sigma};
}

/// log2 det(I_M + (K p alpha / sigma2) sum_j |h_j|^2 g_j g_j^H) / K
inline double bd_sum_rate_logdet(const ChannelRealization& real,
                                 const SystemParams& params) {
  if (real.num_bds() == 0) return 0.0;
  const Index m = real.antennas();
  const double c = static_cast<double>(params.K) * params.p * params.alpha /
                   params.sigma2;
  numerics::ComplexMatrix b = numerics::ComplexMatrix::Zero(m, m);
  for (std::size_t j = 0; j < real.num_bds(); ++j) {
    b.noalias() += (c * std::norm(real.h[j])) * (real.g[j] * real.g[j].adjoint());
  }
  return numerics::log2det_identity_plus(HermitianMatrix(b)) /
         static_cast<double>(params.K);
}

/// Semi-closed-form primary rate log2(lambda) - Ei(-lambda / 2 Sigma) log2(e),
/// valid for CSCG BD symbols in the high-SNR regime.
inline RateReport primary_rate_closed(const ComplexVector& wd,
                                      const ChannelRealization& real,
                                      const SystemParams& params) {
  if (params.bd_symbol_model != BdSymbolModel::CSCG) {
    throw ValidationError("primary_rate_closed: requires CSCG BD symbols");
  }
  detail::require_unit(wd, "primary_rate_closed");
  detail::require_length(real.hd, wd.size(), "primary_rate_closed");
  const auto [lambda, sigma] = primary_snr_parameters(wd, real, params);
  if (!(lambda > 0.0)) {
    throw DegenerateError(
        "primary_rate_closed: beamformer is orthogonal to the direct link");
  }
  RateReport r;
  r.method = RateMethod::ClosedForm;
  r.lambda = lambda;
  r.sigma_param = sigma;
  if (sigma > 0.0) {
    r.delta_rs = -numerics::expint_Ei(-lambda / (2.0 * sigma)) * kLog2E;
  } else {
    r.zero_variance_limit = true;
  }
  r.primary_rate_bps_hz = std::log2(lambda) + r.delta_rs;
  r.secondary_sum_rate_bps_hz = bd_sum_rate_logdet(real, params);
  return r;
}

/// PDF of the primary SNR under CSCG symbols (noncentral chi-square, two
/// degrees of freedom):
///   f(x) = e^{-(x + lambda) / 2 Sigma} I0(sqrt(x lambda) / Sigma) / (2 Sigma)
inline double chi2_pdf(double x, double lambda, double sigma_param) {
  if (!(sigma_param > 0.0)) {
    throw DomainError("chi2_pdf: sigma_param must be > 0");
  }
  if (!(x >= 0.0)) throw DomainError("chi2_pdf: x must be >= 0");
  if (!(lambda >= 0.0)) throw DomainError("chi2_pdf: lambda must be >= 0");
  const double z = std::sqrt(x * lambda) / sigma_param;
  // I0(z) = e^z * I0_scaled(z); fold e^z into the exponent.
  const double expo = -(x + lambda) / (2.0 * sigma_param) + z;
  return std::exp(expo) * numerics::bessel_I0_scaled(z) / (2.0 * sigma_param);
}

namespace detail {

/// I + (K p alpha / sigma2) sum_{rank > r} |h_i|^2 g_i g_i^H over the SIC order,
/// i.e. the interference-plus-noise covariance of stage r divided by sigma2.
inline HermitianMatrix sic_covariance(const ChannelRealization& real,
                                      const SystemParams& params,
                                      std::size_t rank) {
  const Index m = real.antennas();
  const double c = static_cast<double>(params.K) * params.p * params.alpha /
                   params.sigma2;
  numerics::ComplexMatrix q = numerics::ComplexMatrix::Identity(m, m);
  for (std::size_t r = rank + 1; r < real.sic_order.size(); ++r) {
    const std::size_t i = real.sic_order[r];
    q.noalias() += (c * std::norm(real.h[i])) * (real.g[i] * real.g[i].adjoint());
  }
  return HermitianMatrix(q);
}

inline void require_rank(const ChannelRealization& real, std::size_t rank,
                         const char* who) {
  if (real.sic_order.size() != real.num_bds()) {
    throw ValidationError(std::string(who) + ": realization has no SIC order");
  }
  if (rank >= real.sic_order.size()) {
    throw ValidationError(std::string(who) + ": SIC rank " +
                          std::to_string(rank) + " out of range");
  }
}

}  // namespace detail

/// Unnormalized MMSE receive vector of the BD decoded at position `rank`
/// (0-based) of the SIC order:
///   w = (K p alpha sum_{later i} |h_i|^2 g_i g_i^H + sigma2 I)^{-1}
///       sqrt(K p alpha) h_j g_j
inline ComplexVector mmse_sic_beamformer(const ChannelRealization& real,
                                         const SystemParams& params,
                                         std::size_t rank) {
  detail::require_rank(real, rank, "mmse_sic_beamformer");
  const std::size_t j = real.sic_order[rank];
  const HermitianMatrix q = detail::sic_covariance(real, params, rank);
  const double kpa = static_cast<double>(params.K) * params.p * params.alpha;
  // (sigma2 Q)^{-1} x = Q^{-1} x / sigma2
  return numerics::solve_hermitian_pd(q, (std::sqrt(kpa) * real.h[j]) * real.g[j]) /
         params.sigma2;
}

/// SINR of the BD decoded at SIC position `rank` under its MMSE receiver:
///   K p alpha |h_j|^2 g_j^H (K p alpha sum_{later} ... + sigma2 I)^{-1} g_j
inline double sic_sinr(const ChannelRealization& real,
                       const SystemParams& params, std::size_t rank) {
  detail::require_rank(real, rank, "sic_sinr");
  const std::size_t j = real.sic_order[rank];
  if (std::norm(real.h[j]) == 0.0) return 0.0;
  const HermitianMatrix q = detail::sic_covariance(real, params, rank);
  const double kpa = static_cast<double>(params.K) * params.p * params.alpha;
  const ComplexVector x = numerics::solve_hermitian_pd(q, real.g[j]);
  const double quad = real.g[j].dot(x).real();
  return std::max(0.0, kpa * std::norm(real.h[j]) * quad / params.sigma2);
}

/// Achieved SINR of an arbitrary receive vector w for the BD at SIC position
/// `rank`, with later BDs treated as interference.
inline double sinr_with_receiver(const ChannelRealization& real,
                                 const SystemParams& params, std::size_t rank,
                                 const ComplexVector& w) {
  detail::require_rank(real, rank, "sinr_with_receiver");
  const std::size_t j = real.sic_order[rank];
  const double kpa = static_cast<double>(params.K) * params.p * params.alpha;
  const double signal = kpa * std::norm(real.h[j] * w.dot(real.g[j]));
  double interference = 0.0;
  for (std::size_t r = rank + 1; r < real.sic_order.size(); ++r) {
    const std::size_t i = real.sic_order[r];
    interference += kpa * std::norm(real.h[i] * w.dot(real.g[i]));
  }
  return signal / (interference + params.sigma2 * w.squaredNorm());
}

/// (1/K) sum_j log2(1 + SINR_j) along the SIC order.
inline double bd_sum_rate_sinr(const ChannelRealization& real,
                               const SystemParams& params) {
  double s = 0.0;
  for (std::size_t r = 0; r < real.sic_order.size(); ++r) {
    s += std::log1p(sic_sinr(real, params, r));
  }
  return s / std::numbers::ln2 / static_cast<double>(params.K);
}

/// Massive-BD limit of the sum rate: (M/K) log2(1 + J K p alpha beta_h beta_g / sigma2).
inline double bd_sum_rate_asymptotic(const SystemParams& params) {
  if (params.J < 1) {
    throw ValidationError("bd_sum_rate_asymptotic: requires J >= 1");
  }
  const double snr = static_cast<double>(params.J) *
                     static_cast<double>(params.K) * params.p * params.alpha *
                     params.beta_h * params.beta_g / params.sigma2;
  return static_cast<double>(params.M) / static_cast<double>(params.K) *
         std::log1p(snr) / std::numbers::ln2;
}

/// Massive-BD limit of the primary rate for a fixed beamformer:
///   log2(p |wd^H hd|^2 / sigma2) - Ei(-|wd^H hd|^2 / (J alpha beta_h beta_g)) log2(e)
inline double primary_rate_asymptotic(const ComplexVector& wd,
                                      const ComplexVector& hd,
                                      const SystemParams& params) {
  if (params.J < 1) {
    throw ValidationError("primary_rate_asymptotic: requires J >= 1");
  }
  detail::require_unit(wd, "primary_rate_asymptotic");
  detail::require_length(hd, wd.size(), "primary_rate_asymptotic");
  const double gain = std::norm(wd.dot(hd));
  if (!(gain > 0.0)) {
    throw DegenerateError(
        "primary_rate_asymptotic: beamformer is orthogonal to the direct link");
  }
  const double spread = static_cast<double>(params.J) * params.alpha *
                        params.beta_h * params.beta_g;
  double delta = 0.0;
  if (spread > 0.0) delta = -numerics::expint_Ei(-gain / spread) * kLog2E;
  return std::log2(params.p * gain / params.sigma2) + delta;
}

/// Primary rate as a function of the BD sum rate in the massive-BD regime:
///   log2(gamma) - Ei(-K gamma / (2^{(K/M) rbd} - 1)) log2(e)
inline double rs_given_rbd(double gamma, double rbd, std::size_t K,
                           std::size_t M) {
  if (!(gamma > 0.0)) throw DomainError("rs_given_rbd: gamma must be > 0");
  if (!(rbd >= 0.0)) throw DomainError("rs_given_rbd: rbd must be >= 0");
  if (K < 1 || M < 1) throw ValidationError("rs_given_rbd: K, M must be >= 1");
  const double base = std::log2(gamma);
  if (rbd == 0.0) return base;
  const double kk = static_cast<double>(K);
  const double denom =
      std::expm1(std::numbers::ln2 * kk / static_cast<double>(M) * rbd);
  const double arg = -kk * gamma / denom;
  if (arg == 0.0) {
    throw DomainError("rs_given_rbd: rbd too large, Ei argument underflows");
  }
  return base - numerics::expint_Ei(arg) * kLog2E;
}

// ---------------------------------------------------------------------------
// Waveform-level check of the temporal matched filter.

struct ObservationOptions {
  bool noise = true;
  /// PT symbols s(1..K) to use instead of random CN(0, 1) draws.
  std::optional<std::vector<Complex>> primary_symbols;
};

struct BdObservation {
  ComplexVector simulated;       // Yhat(n) v(n), v = s^* / ||s||
  ComplexVector model;           // sqrt(K p alpha) sum_j h_j g_j c_j + zhat
  ComplexVector filtered_noise;  // zhat = Z(n) v(n), shared by both
  double primary_energy = 0.0;   // ||s(n)||^2
};

/// Simulates one BD symbol period of K PT symbols: builds Y(n), removes the
/// primary component (perfect cancellation), applies the temporal matched
/// filter, and returns it next to the large-K model built from the same noise.
inline BdObservation simulate_bd_observation(const ChannelRealization& real,
                                             const SystemParams& params,
                                             const std::vector<Complex>& c,
                                             std::uint64_t seed,
                                             const ObservationOptions& opts = {}) {
  params.validate();
  if (c.size() != real.num_bds()) {
    throw ValidationError("simulate_bd_observation: symbol count mismatch");
  }
  const std::size_t k_len = params.K;
  const Index m = real.antennas();
  Rng rng(seed);

  std::vector<Complex> s;
  if (opts.primary_symbols) {
    s = *opts.primary_symbols;
    if (s.size() != k_len) {
      throw ValidationError("simulate_bd_observation: need K primary symbols");
    }
  } else {
    s.resize(k_len);
    for (auto& sk : s) sk = rng.cscg(1.0);
  }
  double energy = 0.0;
  for (const auto& sk : s) energy += std::norm(sk);
  if (!(energy > 0.0)) {
    throw DegenerateError("simulate_bd_observation: zero primary block");
  }
  const double s_norm = std::sqrt(energy);

  const double sp = std::sqrt(params.p);
  const double sa = std::sqrt(params.alpha);
  ComplexVector backscatter = ComplexVector::Zero(m);
  for (std::size_t j = 0; j < c.size(); ++j) {
    backscatter += (real.h[j] * c[j]) * real.g[j];
  }

  numerics::ComplexMatrix y(m, static_cast<Index>(k_len));
  numerics::ComplexMatrix z = numerics::ComplexMatrix::Zero(m, static_cast<Index>(k_len));
  for (std::size_t k = 0; k < k_len; ++k) {
    const auto col = static_cast<Index>(k);
    if (opts.noise) {
      for (Index i = 0; i < m; ++i) z(i, col) = rng.cscg(params.sigma2);
    }
    y.col(col) = sp * real.hd * s[k] + (sp * sa * s[k]) * backscatter + z.col(col);
  }
  // Perfect primary cancellation.
  numerics::ComplexMatrix y_hat = y;
  for (std::size_t k = 0; k < k_len; ++k) {
    y_hat.col(static_cast<Index>(k)) -= sp * real.hd * s[k];
  }
  ComplexVector v(static_cast<Index>(k_len));
  for (std::size_t k = 0; k < k_len; ++k) {
    v(static_cast<Index>(k)) = std::conj(s[k]) / s_norm;
  }

  BdObservation out;
  out.primary_energy = energy;
  out.filtered_noise = z * v;
  out.simulated = y_hat * v;
  out.model = std::sqrt(static_cast<double>(k_len) * params.p * params.alpha) *
                  backscatter +
              out.filtered_noise;
  return out;
}

}  // namespace symrad
