#pragma once

// System parameters and random channel realizations for a symbiotic radio
// link: one single-antenna primary transmitter (PT), an M-antenna access
// point (AP) and J single-antenna backscatter devices (BDs).
//
// All quantities are linear scale. dB values are converted at the config
// boundary only (see symrad/cli/config.hpp).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "symrad/errors.hpp"
#include "symrad/numerics.hpp"
#include "symrad/rng.hpp"

namespace symrad {

using numerics::Complex;
using numerics::ComplexVector;
using numerics::HermitianMatrix;
using numerics::Index;

enum class BdSymbolModel {
  CSCG,                     // c_j ~ CN(0, 1)
  UnitModulusUniformPhase,  // c_j = exp(i phi), phi ~ U[0, 2 pi)
};

inline std::string to_string(BdSymbolModel m) {
  return m == BdSymbolModel::CSCG ? "cscg" : "unit_modulus";
}

struct SystemParams {
  double p = 1e-3;          // PT transmit power [W]
  double alpha = 1.0;       // backscattered power fraction
  double sigma2 = 1e-14;    // noise power [W]
  std::size_t K = 128;      // PT symbols per BD symbol
  std::size_t M = 4;        // AP antennas
  std::size_t J = 0;        // number of BDs
  double beta_hd = 1e-12;   // PT->AP average power gain
  double beta_h = 1e-11;    // PT->BD average power gain
  double beta_g = 1e-2;     // BD->AP average power gain
  BdSymbolModel bd_symbol_model = BdSymbolModel::CSCG;

  void validate() const {
    auto fail = [](const std::string& what) {
      throw ValidationError("SystemParams: " + what);
    };
    if (!(p > 0.0) || !std::isfinite(p)) fail("p must be > 0");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) fail("sigma2 must be > 0");
    if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must lie in [0, 1]");
    if (K < 1) fail("K must be >= 1");
    if (M < 1) fail("M must be >= 1");
    if (!(beta_hd > 0.0) || !(beta_h > 0.0) || !(beta_g > 0.0))
      fail("channel gains must be > 0");
  }

  bool operator==(const SystemParams&) const = default;
};

/// One draw of the direct link h_d, the PT->BD coefficients h_j and the
/// BD->AP vectors g_j. BD indices are 0-based.
struct ChannelRealization {
  ComplexVector hd;
  std::vector<Complex> h;
  std::vector<ComplexVector> g;
  std::vector<std::size_t> sic_order;  // strongest cascaded link first

  std::size_t num_bds() const noexcept { return h.size(); }
  Index antennas() const noexcept { return hd.size(); }
};

/// |h_j|^2 ||g_j||^2
inline double cascaded_strength(const ChannelRealization& real,
                                std::size_t j) {
  if (j >= real.num_bds() || j >= real.g.size()) {
    throw ValidationError("cascaded_strength: BD index " + std::to_string(j) +
                          " out of range");
  }
  return std::norm(real.h[j]) * real.g[j].squaredNorm();
}

/// BD indices sorted by non-increasing cascaded strength; ties keep the
/// lower original index first.
inline std::vector<std::size_t> sic_order(const ChannelRealization& real) {
  const std::size_t n = real.num_bds();
  std::vector<double> strength(n);
  for (std::size_t j = 0; j < n; ++j) strength[j] = cascaded_strength(real, j);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return strength[a] > strength[b];
  });
  return order;
}

/// Draws h_d ~ CN(0, beta_hd I_M), h_j ~ CN(0, beta_h), g_j ~ CN(0, beta_g I_M)
/// from a single stream seeded with `seed`, in the order h_d, then (h_j, g_j)
/// for j = 0..J-1. Consequently the first J' BDs of a J-BD draw equal a
/// J'-BD draw with the same seed.
inline ChannelRealization sample_channels(const SystemParams& params,
                                          std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  const auto m = static_cast<Index>(params.M);
  ChannelRealization real;
  real.hd.resize(m);
  for (Index i = 0; i < m; ++i) real.hd(i) = rng.cscg(params.beta_hd);
  real.h.reserve(params.J);
  real.g.reserve(params.J);
  for (std::size_t j = 0; j < params.J; ++j) {
    real.h.push_back(rng.cscg(params.beta_h));
    ComplexVector gj(m);
    for (Index i = 0; i < m; ++i) gj(i) = rng.cscg(params.beta_g);
    real.g.push_back(std::move(gj));
  }
  real.sic_order = sic_order(real);
  return real;
}

/// Checks shape consistency of a hand-built realization and fills sic_order
/// if it is empty.
inline void finalize_realization(ChannelRealization& real) {
  if (real.hd.size() < 1) {
    throw ValidationError("ChannelRealization: hd must have length >= 1");
  }
  if (real.h.size() != real.g.size()) {
    throw ValidationError("ChannelRealization: |h| != |g|");
  }
  for (const auto& gj : real.g) {
    if (gj.size() != real.hd.size()) {
      throw ValidationError("ChannelRealization: g_j length != M");
    }
  }
  if (real.sic_order.empty()) real.sic_order = sic_order(real);
  if (real.sic_order.size() != real.h.size()) {
    throw ValidationError("ChannelRealization: sic_order size mismatch");
  }
}

}  // namespace symrad
