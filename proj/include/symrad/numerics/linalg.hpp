#pragma once

// Dense complex linear algebra for small (dim <= ~64) Hermitian problems.
//
// The Hermitian eigensolver works on the real-symmetric embedding
//   [[Re A, -Im A], [Im A, Re A]]
// and runs a cyclic Jacobi iteration on it. Every eigenvalue of A shows up
// twice in the embedding, so the complex spectrum is recovered by taking
// every second ascending value; eigenvectors are folded back to C^n and
// re-orthonormalized inside each cluster of (near-)equal eigenvalues.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "symrad/errors.hpp"

namespace symrad::numerics {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Default absolute Hermitian-symmetry tolerance. Scaled by max(1, max|a_ij|).
inline constexpr double kHermitianTolerance = 1e-12;

/// Square complex matrix that equals its conjugate transpose.
///
/// Construction validates symmetry and then stores the exactly symmetrized
/// matrix (A + A^H) / 2, so downstream code may rely on exact symmetry.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;

  explicit HermitianMatrix(const ComplexMatrix& m,
                           double tolerance = kHermitianTolerance) {
    if (m.rows() != m.cols()) {
      throw ValidationError("HermitianMatrix: matrix is not square");
    }
    if (m.rows() < 1) {
      throw ValidationError("HermitianMatrix: dimension must be >= 1");
    }
    if (!m.allFinite()) {
      throw ValidationError("HermitianMatrix: non-finite entry");
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (asym > tolerance * scale) {
      std::ostringstream os;
      os << "HermitianMatrix: asymmetry " << asym << " exceeds tolerance "
         << tolerance * scale;
      throw ValidationError(os.str());
    }
    m_ = (m + m.adjoint()) * 0.5;
  }

  static HermitianMatrix identity(Index n) {
    return HermitianMatrix(ComplexMatrix::Identity(n, n));
  }

  /// x x^H, exactly Hermitian.
  static HermitianMatrix outer(const ComplexVector& x) {
    return HermitianMatrix(x * x.adjoint());
  }

  const ComplexMatrix& matrix() const noexcept { return m_; }
  Index dim() const noexcept { return m_.rows(); }

  /// Real part of Tr(this * other); exact trace of a product of Hermitians.
  double trace_product(const HermitianMatrix& other) const {
    return (m_.cwiseProduct(other.m_.conjugate())).sum().real();
  }

  /// x^H A x (real for Hermitian A).
  double quadratic_form(const ComplexVector& x) const {
    return x.dot(m_ * x).real();
  }

  HermitianMatrix operator+(const HermitianMatrix& o) const {
    return HermitianMatrix(m_ + o.m_);
  }
  HermitianMatrix operator-(const HermitianMatrix& o) const {
    return HermitianMatrix(m_ - o.m_);
  }
  HermitianMatrix operator*(double s) const { return HermitianMatrix(m_ * s); }

 private:
  ComplexMatrix m_;
};

struct SymmetricEigen {
  RealVector values;   // ascending
  RealMatrix vectors;  // columns, orthonormal
  int sweeps = 0;
};

struct HermitianEigen {
  RealVector values;      // ascending
  ComplexMatrix vectors;  // columns, unitary
};

/// Cyclic Jacobi eigensolver for a real symmetric matrix.
inline SymmetricEigen jacobi_eigen(const RealMatrix& input,
                                   int max_sweeps = 64) {
  if (input.rows() != input.cols()) {
    throw ValidationError("jacobi_eigen: matrix is not square");
  }
  const Index n = input.rows();
  RealMatrix a = (input + input.transpose()) * 0.5;
  RealMatrix v = RealMatrix::Identity(n, n);

  const double frob2 = a.squaredNorm();
  auto off2 = [&] {
    double s = 0.0;
    for (Index q = 1; q < n; ++q)
      for (Index p = 0; p < q; ++p) s += 2.0 * a(p, q) * a(p, q);
    return s;
  };
  const double eps = std::numeric_limits<double>::epsilon();
  const double target = eps * eps * frob2;

  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    if (off2() <= target || frob2 == 0.0) break;
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        // Skip rotations that can no longer change the diagonal.
        const double g = 100.0 * std::abs(apq);
        if (sweep > 3 && std::abs(app) + g == std::abs(app) &&
            std::abs(aqq) + g == std::abs(aqq)) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (off2() > target && frob2 != 0.0) {
    throw NumericError("jacobi_eigen: no convergence after " +
                       std::to_string(max_sweeps) + " sweeps");
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return a(i, i) < a(j, j); });
  SymmetricEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  out.sweeps = sweep;
  return out;
}

/// [[Re H, -Im H], [Im H, Re H]]
inline RealMatrix real_embedding(const ComplexMatrix& h) {
  const Index n = h.rows();
  RealMatrix e(2 * n, 2 * n);
  e.topLeftCorner(n, n) = h.real();
  e.topRightCorner(n, n) = -h.imag();
  e.bottomLeftCorner(n, n) = h.imag();
  e.bottomRightCorner(n, n) = h.real();
  return e;
}

/// Eigen-decomposition of a Hermitian matrix: A = V diag(values) V^H.
inline HermitianEigen herm_eig(const HermitianMatrix& a) {
  const Index n = a.dim();
  const SymmetricEigen re = jacobi_eigen(real_embedding(a.matrix()));

  HermitianEigen out;
  out.values.resize(n);
  for (Index k = 0; k < n; ++k) out.values(k) = re.values(2 * k + 1);

  // Fold real eigenvectors [u; v] -> u + i v. Within each cluster of
  // near-equal eigenvalues pick an orthonormal complex basis by pivoted
  // Gram-Schmidt over the 2k real vectors of that cluster.
  const double scale = std::max(1.0, re.values.cwiseAbs().maxCoeff());
  const double cluster_tol = 1e-9 * scale;
  out.vectors.resize(n, n);
  Index filled = 0;
  Index start = 0;
  while (start < 2 * n) {
    Index stop = start + 1;
    while (stop < 2 * n &&
           re.values(stop) - re.values(stop - 1) <= cluster_tol)
      ++stop;
    const Index want = (stop - start) / 2;
    std::vector<ComplexVector> cand;
    for (Index k = start; k < stop; ++k) {
      ComplexVector z(n);
      for (Index i = 0; i < n; ++i)
        z(i) = Complex(re.vectors(i, k), re.vectors(i + n, k));
      cand.push_back(std::move(z));
    }
    for (Index picked = 0; picked < want; ++picked) {
      std::size_t best = 0;
      double best_norm = -1.0;
      for (std::size_t c = 0; c < cand.size(); ++c) {
        ComplexVector r = cand[c];
        for (Index j = 0; j < filled; ++j)
          r -= out.vectors.col(j).dot(r) * out.vectors.col(j);
        const double nr = r.norm();
        if (nr > best_norm) {
          best_norm = nr;
          best = c;
        }
      }
      ComplexVector r = cand[best];
      for (int pass = 0; pass < 2; ++pass)
        for (Index j = 0; j < filled; ++j)
          r -= out.vectors.col(j).dot(r) * out.vectors.col(j);
      if (!(best_norm > 0.1)) {
        throw NumericError("herm_eig: failed to fold eigenvector basis");
      }
      out.vectors.col(filled++) = r / r.norm();
    }
    start = stop;
  }
  if (filled != n) {
    throw NumericError("herm_eig: odd eigenvalue multiplicity in embedding");
  }
  return out;
}

/// Solves A x = b for Hermitian positive-definite A.
inline ComplexVector solve_hermitian_pd(const HermitianMatrix& a,
                                        const ComplexVector& b) {
  if (b.size() != a.dim()) {
    throw ValidationError("solve_hermitian_pd: dimension mismatch");
  }
  Eigen::LLT<ComplexMatrix> llt(a.matrix());
  if (llt.info() != Eigen::Success) {
    const double smallest = herm_eig(a).values(0);
    std::ostringstream os;
    os << "solve_hermitian_pd: matrix is not positive definite (smallest "
          "eigenvalue "
       << smallest << ")";
    throw NumericError(os.str());
  }
  return llt.solve(b);
}

/// log2 det(A) for Hermitian positive-definite A.
inline double logdet_pd(const HermitianMatrix& a) {
  Eigen::LLT<ComplexMatrix> llt(a.matrix());
  if (llt.info() != Eigen::Success) {
    throw NumericError("logdet_pd: matrix is not positive definite");
  }
  const ComplexMatrix& l = llt.matrixLLT();
  double s = 0.0;
  for (Index i = 0; i < a.dim(); ++i) {
    const double d = l(i, i).real();
    if (!(d > 0.0)) throw NumericError("logdet_pd: zero pivot");
    s += std::log2(d);
  }
  return 2.0 * s;
}

/// log2 det(I + B) for Hermitian positive-semidefinite B, accurate when B is
/// small (uses log1p on the eigenvalues of B).
inline double log2det_identity_plus(const HermitianMatrix& b) {
  const HermitianEigen e = herm_eig(b);
  double s = 0.0;
  for (Index i = 0; i < e.values.size(); ++i) {
    const double lam = std::max(e.values(i), 0.0);
    s += std::log1p(lam);
  }
  return s / std::log(2.0);
}

}  // namespace symrad::numerics
