#pragma once

// Small dense SDP solver:
//
//   maximize   Tr(W C)
//   subject to Tr(W A_i) = b_i,  i = 1..m
//              W Hermitian positive semidefinite.
//
// The complex problem is mapped to a real one through the embedding
// E(H) = [[Re H, -Im H], [Im H, Re H]], for which <E(X), E(Y)> = 2 Re Tr(XY)
// and E(W) is PSD iff W is. The real problem is solved by a primal-dual
// interior-point method on the homogeneous self-dual embedding
//
//   A(X) - b tau = 0,   A*(y) + S - c tau = 0,   b'y - <c, X> - kappa = 0,
//
// with Nesterov-Todd scaling and Mehrotra predictor-corrector steps
// (c = -E(C), data pre-scaled to unit Frobenius norm). tau -> 0 with
// b'y > 0 certifies primal infeasibility.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "symrad/errors.hpp"
#include "symrad/numerics.hpp"
#include "symrad/rng.hpp"

namespace symrad::sdp {

using numerics::Complex;
using numerics::ComplexMatrix;
using numerics::ComplexVector;
using numerics::HermitianMatrix;
using numerics::Index;
using numerics::RealMatrix;
using numerics::RealVector;

struct Equality {
  HermitianMatrix a;
  double b = 0.0;
};

struct SdpProblem {
  HermitianMatrix objective;  // C
  std::vector<Equality> equalities;

  Index dim() const noexcept { return objective.dim(); }

  void validate() const {
    if (objective.dim() < 1) throw ValidationError("SdpProblem: empty objective");
    if (equalities.empty()) {
      throw ValidationError("SdpProblem: at least one equality is required");
    }
    for (const auto& e : equalities) {
      if (e.a.dim() != objective.dim()) {
        throw ValidationError("SdpProblem: constraint dimension mismatch");
      }
      if (!std::isfinite(e.b)) throw ValidationError("SdpProblem: non-finite b");
    }
  }
};

enum class SdpStatus { Optimal, Infeasible, MaxIter };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "optimal";
    case SdpStatus::Infeasible: return "infeasible";
    case SdpStatus::MaxIter: return "max_iter";
  }
  return "?";
}

struct KktResiduals {
  double primal = std::numeric_limits<double>::infinity();
  double dual = std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
};

struct SdpSolution {
  HermitianMatrix W;
  double objective_value = 0.0;  // Tr(W C)
  double dual_value = 0.0;       // sum_i b_i u_i, an upper bound on the optimum
  std::vector<double> duals;     // u_i with sum_i u_i A_i - C = S >= 0
  HermitianMatrix dual_slack;    // S
  KktResiduals kkt;
  SdpStatus status = SdpStatus::MaxIter;
  int iterations = 0;
  std::string message;
};

struct SolverOptions {
  int max_iterations = 200;
  double step_fraction = 0.98;
  double tolerance = 1e-10;
  double infeasibility_tolerance = 1e-9;
  /// Once the tolerances are met, up to this many fixed-mu centering steps
  /// are taken until ||eig(X S) - mu|| <= centrality_tolerance * mu. Off the
  /// central path ||X S|| decays only like sqrt(mu).
  int max_centering_steps = 8;
  double centrality_tolerance = 1e-3;
};

/// [[Re H, -Im H], [Im H, Re H]]
inline RealMatrix complex_to_real_embedding(const HermitianMatrix& h) {
  return numerics::real_embedding(h.matrix());
}

/// Inverse of the embedding on its range; projects an arbitrary symmetric
/// 2n x 2n matrix onto the embedded structure first.
inline HermitianMatrix real_to_complex(const RealMatrix& x) {
  const Index n = x.rows() / 2;
  const RealMatrix re =
      0.5 * (x.topLeftCorner(n, n) + x.bottomRightCorner(n, n));
  const RealMatrix im =
      0.5 * (x.bottomLeftCorner(n, n) - x.topRightCorner(n, n));
  ComplexMatrix w(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) w(i, j) = Complex(re(i, j), im(i, j));
  return HermitianMatrix((w + w.adjoint()) * 0.5, 1e-6);
}

namespace detail {

inline double inner(const RealMatrix& a, const RealMatrix& b) {
  return a.cwiseProduct(b).sum();
}

inline RealMatrix sym(const RealMatrix& a) { return 0.5 * (a + a.transpose()); }

/// Largest alpha with M + alpha dM PSD, given the Cholesky factor L of M.
inline double max_step(const RealMatrix& l, const RealMatrix& dm) {
  const RealMatrix li = l.triangularView<Eigen::Lower>().solve(
      RealMatrix::Identity(l.rows(), l.cols()));
  const RealMatrix t = sym(li * dm * li.transpose());
  const double e = numerics::jacobi_eigen(t).values(0);
  return e < 0.0 ? -1.0 / e : std::numeric_limits<double>::infinity();
}

struct RealProblem {
  RealMatrix c;                  // minimize <c, X>
  std::vector<RealMatrix> a;     // <a_i, X> = b_i
  RealVector b;
  double c_scale = 1.0;          // original C embedding = -c_scale * c
  std::vector<double> row_scale; // original A_i embedding = row_scale_i * a_i
};

inline RealProblem to_real(const SdpProblem& p) {
  RealProblem rp;
  const RealMatrix c_emb = complex_to_real_embedding(p.objective);
  rp.c_scale = c_emb.norm();
  if (rp.c_scale == 0.0) rp.c_scale = 1.0;
  rp.c = -c_emb / rp.c_scale;
  const auto m = static_cast<Index>(p.equalities.size());
  rp.b.resize(m);
  for (Index i = 0; i < m; ++i) {
    const auto& eq = p.equalities[static_cast<std::size_t>(i)];
    RealMatrix ai = complex_to_real_embedding(eq.a);
    // A zero row with b != 0 is left unscaled; the embedding then reports it
    // as infeasible.
    double s = ai.norm();
    if (s == 0.0) s = 1.0;
    rp.a.push_back(ai / s);
    rp.b(i) = 2.0 * eq.b / s;
    rp.row_scale.push_back(s);
  }
  return rp;
}

}  // namespace detail

/// Solves the problem; never throws for infeasible or stalled instances,
/// which are reported through SdpSolution::status.
inline SdpSolution solve(const SdpProblem& problem,
                         const SolverOptions& opts = {}) {
  problem.validate();
  using detail::inner;
  using detail::sym;

  const detail::RealProblem rp = detail::to_real(problem);
  const Index n = 2 * problem.dim();
  const auto m = static_cast<Index>(rp.a.size());
  const RealMatrix eye = RealMatrix::Identity(n, n);

  auto apply_a = [&](const RealMatrix& x) {
    RealVector r(m);
    for (Index i = 0; i < m; ++i) r(i) = inner(rp.a[static_cast<std::size_t>(i)], x);
    return r;
  };
  auto apply_at = [&](const RealVector& y) {
    RealMatrix r = RealMatrix::Zero(n, n);
    for (Index i = 0; i < m; ++i) r += y(i) * rp.a[static_cast<std::size_t>(i)];
    return r;
  };

  RealMatrix x = eye;
  RealMatrix s = eye;
  RealVector y = RealVector::Zero(m);
  double tau = 1.0;
  double kappa = 1.0;
  const double nb = rp.b.norm();
  const double nc = rp.c.norm();

  SdpSolution sol;
  auto finish = [&](SdpStatus status, std::string msg) {
    const double t = status == SdpStatus::Infeasible ? 1.0 : tau;
    const RealMatrix xn = x / t;
    const RealMatrix sn = s / t;
    const RealVector yn = y / t;
    sol.status = status;
    sol.message = std::move(msg);
    sol.W = real_to_complex(xn);
    sol.objective_value = sol.W.trace_product(problem.objective);
    sol.dual_value = -rp.c_scale * rp.b.dot(yn) / 2.0;
    sol.duals.resize(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) {
      sol.duals[static_cast<std::size_t>(i)] =
          -rp.c_scale * yn(i) / rp.row_scale[static_cast<std::size_t>(i)];
    }
    sol.dual_slack = real_to_complex(rp.c_scale * sn);
    return sol;
  };

  int centering_steps = 0;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    sol.iterations = iter;
    bool converged = false;
    // Residuals of the homogeneous system.
    const RealVector fp = apply_a(x) - rp.b * tau;
    const RealMatrix fd = apply_at(y) + s - rp.c * tau;
    const double fg = rp.b.dot(y) - inner(rp.c, x) - kappa;

    // Convergence in the original (de-homogenized) variables.
    {
      const RealMatrix xn = x / tau;
      const RealVector yn = y / tau;
      const double pobj = inner(rp.c, xn);
      const double dobj = rp.b.dot(yn);
      sol.kkt.primal = (fp / tau).norm() / (1.0 + nb);
      sol.kkt.dual = (fd / tau).norm() / (1.0 + nc);
      sol.kkt.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
      converged = sol.kkt.primal <= opts.tolerance && sol.kkt.dual <= opts.tolerance &&
                  sol.kkt.gap <= opts.tolerance;
      // Primal infeasibility certificate: A*(y) + S ~ 0 with b'y > 0.
      const double by = rp.b.dot(y);
      if (by > 0.0) {
        const double cert = (apply_at(y) + s).norm() / by;
        if (cert <= opts.infeasibility_tolerance) {
          return finish(SdpStatus::Infeasible, "primal infeasible");
        }
      }
      // Dual infeasibility certificate: A(X) ~ 0 with <c, X> < 0.
      const double cx = inner(rp.c, x);
      if (cx < 0.0) {
        const double cert = apply_a(x).norm() / -cx;
        if (cert <= opts.infeasibility_tolerance) {
          return finish(SdpStatus::Infeasible, "dual infeasible (unbounded)");
        }
      }
    }

    const double mu = (inner(x, s) + tau * kappa) / static_cast<double>(n + 1);

    // Nesterov-Todd scaling: G with G^{-1} X G^{-T} = G^T S G = D.
    Eigen::LLT<RealMatrix> llt_x(x);
    Eigen::LLT<RealMatrix> llt_s(s);
    if (llt_x.info() != Eigen::Success || llt_s.info() != Eigen::Success) {
      return finish(SdpStatus::MaxIter, "iterate lost positive definiteness");
    }
    const RealMatrix lx = llt_x.matrixL();
    const RealMatrix ls = llt_s.matrixL();
    Eigen::JacobiSVD<RealMatrix> svd(ls.transpose() * lx,
                                     Eigen::ComputeFullU | Eigen::ComputeFullV);
    const RealVector d = svd.singularValues();
    if (!(d.minCoeff() > 0.0)) {
      return finish(SdpStatus::MaxIter, "degenerate scaling");
    }
    const RealMatrix g = lx * svd.matrixV() * d.cwiseSqrt().cwiseInverse().asDiagonal();
    const RealMatrix g_inv = d.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() *
                             lx.triangularView<Eigen::Lower>().solve(eye);
    const RealMatrix w = g * g.transpose();

    bool centering = false;
    if (converged) {
      double dev = std::pow(tau * kappa - mu, 2);
      for (Index i = 0; i < n; ++i) dev += std::pow(d(i) * d(i) - mu, 2);
      if (std::sqrt(dev) <= opts.centrality_tolerance * mu ||
          centering_steps >= opts.max_centering_steps) {
        return finish(SdpStatus::Optimal, "");
      }
      ++centering_steps;
      centering = true;
    }

    // Reduced (m+1) x (m+1) system in (dy, dtau).
    std::vector<RealMatrix> waw(static_cast<std::size_t>(m));
    for (Index j = 0; j < m; ++j) {
      waw[static_cast<std::size_t>(j)] = w * rp.a[static_cast<std::size_t>(j)] * w;
    }
    const RealMatrix wcw = w * rp.c * w;
    RealMatrix gram(m, m);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j)
        gram(i, j) = inner(rp.a[static_cast<std::size_t>(i)], waw[static_cast<std::size_t>(j)]);
    const RealVector gc = apply_a(wcw);
    const double cwc = inner(rp.c, wcw);

    RealMatrix kkt(m + 1, m + 1);
    kkt.topLeftCorner(m, m) = gram;
    kkt.topRightCorner(m, 1) = -(gc + rp.b);
    kkt.bottomLeftCorner(1, m) = (rp.b - gc).transpose();
    kkt(m, m) = cwc + kappa / tau;
    const Eigen::FullPivLU<RealMatrix> lu(kkt);

    struct Direction {
      RealMatrix dx, ds;
      RealVector dy;
      double dtau = 0.0, dkappa = 0.0;
    };
    // eta scales the residual reduction; rx is the right-hand side of
    // dX + W dS W = rx; rtau that of kappa dtau + tau dkappa = rtau.
    auto solve_direction = [&](double eta, const RealMatrix& rx, double rtau) {
      const RealMatrix wfw = w * fd * w;
      const RealMatrix base = rx + eta * wfw;
      RealVector rhs(m + 1);
      rhs.head(m) = -eta * fp - apply_a(base);
      rhs(m) = -eta * fg + inner(rp.c, base) + rtau / tau;
      const RealVector sol_v = lu.solve(rhs);
      if (!sol_v.allFinite()) throw NumericError("sdp: singular Newton system");
      Direction dir;
      dir.dy = sol_v.head(m);
      dir.dtau = sol_v(m);
      dir.ds = sym(-eta * fd - apply_at(dir.dy) + rp.c * dir.dtau);
      dir.dx = sym(rx - w * dir.ds * w);
      dir.dkappa = (rtau - kappa * dir.dtau) / tau;
      return dir;
    };
    auto step_length = [&](const Direction& dir) {
      double a = std::min(detail::max_step(lx, dir.dx), detail::max_step(ls, dir.ds));
      if (dir.dtau < 0.0) a = std::min(a, -tau / dir.dtau);
      if (dir.dkappa < 0.0) a = std::min(a, -kappa / dir.dkappa);
      return a;
    };
    // dX + W dS W = G U G^T where D o U = R (o: Jordan product).
    auto centering_rhs = [&](const RealMatrix& r) {
      RealMatrix u(n, n);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) u(i, j) = 2.0 * r(i, j) / (d(i) + d(j));
      return RealMatrix(g * u * g.transpose());
    };

    try {
    const RealMatrix dsq = d.cwiseAbs2().asDiagonal();
    Direction dir;
    if (centering) {
      // Newton step toward the central point at the current mu; residuals
      // are left as they are.
      dir = solve_direction(0.0, centering_rhs(mu * RealMatrix::Identity(n, n) - dsq),
                            mu - tau * kappa);
    } else {
      // Predictor.
      const Direction aff = solve_direction(1.0, centering_rhs(-dsq), -tau * kappa);
      const double a_aff = std::min(1.0, step_length(aff));
      const double mu_aff =
          (inner(x + a_aff * aff.dx, s + a_aff * aff.ds) +
           (tau + a_aff * aff.dtau) * (kappa + a_aff * aff.dkappa)) /
          static_cast<double>(n + 1);
      const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

      // Corrector with the second-order term in the scaled space.
      const RealMatrix dx_s = g_inv * aff.dx * g_inv.transpose();
      const RealMatrix ds_s = g.transpose() * aff.ds * g;
      const RealMatrix second = 0.5 * (dx_s * ds_s + ds_s * dx_s);
      const RealMatrix r_corr = sigma * mu * RealMatrix::Identity(n, n) - dsq - second;
      dir = solve_direction(1.0 - sigma, centering_rhs(r_corr),
                            sigma * mu - tau * kappa - aff.dtau * aff.dkappa);
    }
    const double alpha = std::min(1.0, opts.step_fraction * step_length(dir));
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      return finish(SdpStatus::MaxIter, "zero step length");
    }

    x = sym(x + alpha * dir.dx);
    s = sym(s + alpha * dir.ds);
    y += alpha * dir.dy;
    tau += alpha * dir.dtau;
    kappa += alpha * dir.dkappa;
    } catch (const NumericError& e) {
      return finish(SdpStatus::MaxIter, e.what());
    }

    // Keep the homogeneous iterate bounded.
    const double scale = std::max({x.norm(), s.norm(), tau, kappa});
    if (scale > 1e8) {
      x /= scale;
      s /= scale;
      y /= scale;
      tau /= scale;
      kappa /= scale;
    }
  }
  sol.iterations = opts.max_iterations;
  return finish(SdpStatus::MaxIter, "iteration cap reached");
}

/// Gaussian randomization: scores the top eigenvector of W and `n_draws`
/// normalized samples from CN(0, W) and returns the best one. Ties keep the
/// earlier candidate, so the eigenvector wins ties.
inline ComplexVector extract_rank1(
    const HermitianMatrix& w, std::size_t n_draws,
    const std::function<double(const ComplexVector&)>& scorer,
    std::uint64_t seed) {
  const numerics::HermitianEigen e = numerics::herm_eig(w);
  const Index n = w.dim();
  if (!(e.values(n - 1) > 0.0)) {
    throw DegenerateError("extract_rank1: W has no positive eigenvalue");
  }
  ComplexVector best = e.vectors.col(n - 1);
  double best_score = scorer(best);

  // Square-root factor V diag(sqrt(max(lambda, 0))).
  ComplexMatrix root = e.vectors;
  for (Index k = 0; k < n; ++k) root.col(k) *= std::sqrt(std::max(e.values(k), 0.0));

  Rng rng(seed);
  ComplexVector xi(n);
  for (std::size_t t = 0; t < n_draws; ++t) {
    for (Index k = 0; k < n; ++k) xi(k) = rng.cscg(1.0);
    ComplexVector cand = root * xi;
    const double nrm = cand.norm();
    if (!(nrm > 0.0)) continue;
    cand /= nrm;
    const double sc = scorer(cand);
    if (sc > best_score) {
      best_score = sc;
      best = std::move(cand);
    }
  }
  return best;
}

}  // namespace symrad::sdp
