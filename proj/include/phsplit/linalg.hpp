#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "phsplit/opcount.hpp"
#include "phsplit/types.hpp"

namespace phsplit {

// ============================================================================
// Counted dense kernels
// ============================================================================
//
// The kernels below are hand-rolled so that the operation counts they report
// are exactly the operations they execute. Eigen supplies the storage and the
// expression-friendly call sites; the inner loops are ours. A null counter
// disables counting (the arithmetic is unchanged).
//
// Accumulations run in fixed index order (k ascending), so block-structured
// products assembled per block agree bit-for-bit with the same product over
// the full matrix when the off-block entries are zero.

/// y = a*x for a of shape r x m. Counts r*m multiplies and r*(m-1) adds.
template <class S>
void counted_matvec(const MatrixT<S>& a, const VectorT<S>& x, VectorT<S>& y, OpCounter* c) {
  const Index r = a.rows(), m = a.cols();
  if (x.size() != m) {
    throw DimensionMismatch("matvec: a is " + std::to_string(r) + "x" + std::to_string(m) +
                            " but x has size " + std::to_string(x.size()));
  }
  y.resize(r);
  if (m == 0) {
    y.setZero();
    return;
  }
  for (Index i = 0; i < r; ++i) {
    S acc = a(i, 0) * x(0);
    for (Index k = 1; k < m; ++k) {
      acc += a(i, k) * x(k);
    }
    y(i) = acc;
  }
  if (c != nullptr) {
    c->add_muls(static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(m));
    c->add_adds(static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(m - 1));
  }
}

template <class S>
[[nodiscard]] VectorT<S> counted_matvec(const MatrixT<S>& a, const VectorT<S>& x, OpCounter* c) {
  VectorT<S> y;
  counted_matvec(a, x, y, c);
  return y;
}

/// a*b with fixed k-ascending accumulation. Counts r*cc*m muls, r*cc*(m-1) adds.
template <class S>
[[nodiscard]] MatrixT<S> counted_matmul(const MatrixT<S>& a, const MatrixT<S>& b, OpCounter* c) {
  const Index r = a.rows(), m = a.cols(), cc = b.cols();
  if (b.rows() != m) {
    throw DimensionMismatch("matmul: inner dimensions " + std::to_string(m) + " and " +
                            std::to_string(b.rows()) + " differ");
  }
  MatrixT<S> out(r, cc);
  if (m == 0) {
    out.setZero();
    return out;
  }
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < cc; ++j) {
      S acc = a(i, 0) * b(0, j);
      for (Index k = 1; k < m; ++k) {
        acc += a(i, k) * b(k, j);
      }
      out(i, j) = acc;
    }
  }
  if (c != nullptr) {
    const auto ur = static_cast<std::uint64_t>(r), um = static_cast<std::uint64_t>(m),
               uc = static_cast<std::uint64_t>(cc);
    c->add_muls(ur * uc * um);
    c->add_adds(ur * uc * (um - 1));
  }
  return out;
}

/// y += alpha*x. Counts n muls and n adds.
template <class S>
void counted_axpy(S alpha, const VectorT<S>& x, VectorT<S>& y, OpCounter* c) {
  if (x.size() != y.size()) {
    throw DimensionMismatch("axpy: sizes " + std::to_string(x.size()) + " and " +
                            std::to_string(y.size()) + " differ");
  }
  for (Index i = 0; i < x.size(); ++i) {
    y(i) += alpha * x(i);
  }
  if (c != nullptr) {
    c->add_muls(static_cast<std::uint64_t>(x.size()));
    c->add_adds(static_cast<std::uint64_t>(x.size()));
  }
}

// ============================================================================
// LU factorization with partial pivoting
// ============================================================================

/// Packed LU factors of a square matrix: unit-lower L and U share `lu`,
/// `perm[k]` is the row swapped into position k at elimination step k
/// (LAPACK-style pivot vector; applying the swaps in order gives P).
template <class S>
struct LuFactorsT {
  Index n = 0;
  MatrixT<S> lu;
  std::vector<Index> perm;
  /// Operation tally consumed by the factorization itself.
  OpTally opcount_at_factor;
};

using LuFactors = LuFactorsT<Real>;

/// Row-pivoted in-place Doolittle factorization.
///
/// Throws SingularMatrix when the best available pivot has magnitude
/// <= 1e-14 * max|a| (so a zero matrix is rejected too). Rows whose
/// multiplier is exactly zero are skipped without executing (or counting)
/// any arithmetic: factoring a permutation of the identity costs only the
/// pivot-search comparisons.
template <class S>
[[nodiscard]] LuFactorsT<S> lu_factor(MatrixT<S> a, OpCounter* c) {
  ensure_square(a, "lu_factor input");
  const Index n = a.rows();
  const S scale = a.cwiseAbs().maxCoeff();
  const S threshold = S(1e-14) * scale;

  LuFactorsT<S> f;
  f.n = n;
  f.perm.resize(static_cast<std::size_t>(n));
  std::uint64_t muls = 0, adds = 0, divs = 0, cmps = 0;

  for (Index k = 0; k < n; ++k) {
    Index p = k;
    S best = std::abs(a(k, k));
    for (Index i = k + 1; i < n; ++i) {
      const S m = std::abs(a(i, k));
      ++cmps;
      if (m > best) {
        best = m;
        p = i;
      }
    }
    if (best <= threshold) {
      throw SingularMatrix("lu_factor: pivot " + std::to_string(static_cast<double>(best)) +
                           " at column " + std::to_string(k) + " is below threshold " +
                           std::to_string(static_cast<double>(threshold)));
    }
    f.perm[static_cast<std::size_t>(k)] = p;
    if (p != k) {
      a.row(k).swap(a.row(p));
    }
    const S pivot = a(k, k);
    for (Index i = k + 1; i < n; ++i) {
      if (a(i, k) == S(0)) {
        continue;  // nothing to eliminate; no divide executed
      }
      const S mult = a(i, k) / pivot;
      ++divs;
      a(i, k) = mult;
      for (Index j = k + 1; j < n; ++j) {
        a(i, j) -= mult * a(k, j);
      }
      muls += static_cast<std::uint64_t>(n - k - 1);
      adds += static_cast<std::uint64_t>(n - k - 1);
    }
  }
  f.lu = std::move(a);
  f.opcount_at_factor = OpTally{muls, adds, divs, cmps};
  if (c != nullptr) {
    c->add_muls(muls);
    c->add_adds(adds);
    c->add_divs(divs);
    c->add_comparisons(cmps);
  }
  return f;
}

/// Solves L U x = P b in place. Counts n(n-1) muls, n(n-1) adds, n divs
/// regardless of sparsity (triangular loops never skip), so per-step costs
/// are structure-independent.
template <class S>
void lu_solve_inplace(const LuFactorsT<S>& f, VectorT<S>& b, OpCounter* c) {
  const Index n = f.n;
  if (b.size() != n) {
    throw DimensionMismatch("lu_solve: factor dimension " + std::to_string(n) +
                            " but rhs has size " + std::to_string(b.size()));
  }
  for (Index k = 0; k < n; ++k) {
    const Index p = f.perm[static_cast<std::size_t>(k)];
    if (p != k) {
      std::swap(b(k), b(p));
    }
  }
  for (Index i = 1; i < n; ++i) {
    S acc = b(i);
    for (Index j = 0; j < i; ++j) {
      acc -= f.lu(i, j) * b(j);
    }
    b(i) = acc;
  }
  for (Index i = n - 1; i >= 0; --i) {
    S acc = b(i);
    for (Index j = i + 1; j < n; ++j) {
      acc -= f.lu(i, j) * b(j);
    }
    b(i) = acc / f.lu(i, i);
  }
  if (c != nullptr) {
    const auto un = static_cast<std::uint64_t>(n);
    c->add_muls(un * (un - 1));
    c->add_adds(un * (un - 1));
    c->add_divs(un);
  }
}

template <class S>
[[nodiscard]] VectorT<S> lu_solve(const LuFactorsT<S>& f, VectorT<S> b, OpCounter* c) {
  lu_solve_inplace(f, b, c);
  return b;
}

// ============================================================================
// Matrix exponential reference (uncounted oracle path)
// ============================================================================

/// exp(a) by Pade approximation with scaling and squaring. Accuracy target
/// ~1e-13 relative for ||a||_1 up to ~1e3. Uses Eigen throughout, so the
/// oracle path shares no code with the counted integration kernels.
[[nodiscard]] Matrix matexp(const Matrix& a);

/// exp(t*a) * x0 without forming exp for each caller separately.
[[nodiscard]] Vector matexp_apply(const Matrix& a, Real t, const Vector& x0);

// ============================================================================
// Structure checks
// ============================================================================

/// max|a + a^T| <= tol.
[[nodiscard]] bool is_skew_symmetric(const Matrix& a, Real tol);

/// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi iteration,
/// converged to off-diagonal Frobenius norm <= 1e-12 * ||a||_F.
[[nodiscard]] Real symmetric_min_eigenvalue(Matrix a);

/// True iff the symmetric matrix `a` has min eigenvalue >= -tol.
/// Throws NotSymmetric when max|a - a^T| > tol * max(1, max|a|).
[[nodiscard]] bool is_positive_semidefinite(const Matrix& a, Real tol);

}  // namespace phsplit
