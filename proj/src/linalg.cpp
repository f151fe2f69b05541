#include "phsplit/linalg.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>

namespace phsplit {

// ============================================================================
// Matrix exponential: Pade + scaling/squaring (Higham 2005)
// ============================================================================

namespace {

// Pade numerator coefficients for degrees 3/5/7/9/13.
constexpr std::array<double, 4> kB3 = {120., 60., 12., 1.};
constexpr std::array<double, 6> kB5 = {30240., 15120., 3360., 420., 30., 1.};
constexpr std::array<double, 8> kB7 = {17297280., 8648640., 1995840., 277200.,
                                       25200.,    1512.,    56.,      1.};
constexpr std::array<double, 10> kB9 = {17643225600., 8821612800., 2075673600., 302702400.,
                                        30270240.,    2162160.,    110880.,     3960.,
                                        90.,          1.};
constexpr std::array<double, 14> kB13 = {64764752532480000., 32382376266240000., 7771770303897600.,
                                         1187353796428800.,  129060195264000.,   10559470521600.,
                                         670442572800.,      33522128640.,       1323241920.,
                                         40840800.,          960960.,            16380.,
                                         182.,               1.};

// 1-norm thresholds below which the corresponding Pade degree meets double
// precision without scaling.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068;
constexpr double kTheta13 = 5.371920351148152;

// Forms U, V for an odd/even split numerator of low degree:
//   U = A * (b3 A2 + b1 I),  V = b2 A2 + b0 I   (degree 3, analogous higher).
template <std::size_t N>
void pade_low(const Matrix& a, const Matrix& a2, const std::array<double, N>& b, Matrix& u,
              Matrix& v) {
  const Index n = a.rows();
  Matrix usum = Matrix::Zero(n, n);
  Matrix vsum = Matrix::Zero(n, n);
  Matrix pow = Matrix::Identity(n, n);  // A^(2j)
  for (std::size_t j = 0; 2 * j + 1 < N; ++j) {
    usum += b[2 * j + 1] * pow;
    vsum += b[2 * j] * pow;
    if (2 * j + 3 < N || 2 * j + 2 < N) {
      pow = pow * a2;
    }
  }
  u = a * usum;
  v = std::move(vsum);
}

}  // namespace

Matrix matexp(const Matrix& a) {
  ensure_square(a, "matexp input");
  ensure_finite(a, "matexp input");
  const Index n = a.rows();
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();

  Matrix u(n, n), v(n, n);
  int squarings = 0;

  if (norm1 <= kTheta9) {
    const Matrix a2 = a * a;
    if (norm1 <= kTheta3) {
      pade_low(a, a2, kB3, u, v);
    } else if (norm1 <= kTheta5) {
      pade_low(a, a2, kB5, u, v);
    } else if (norm1 <= kTheta7) {
      pade_low(a, a2, kB7, u, v);
    } else {
      pade_low(a, a2, kB9, u, v);
    }
  } else {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / kTheta13))));
    const Matrix as = a / std::ldexp(1.0, squarings);
    const Matrix a2 = as * as;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a2 * a4;
    const auto& b = kB13;
    u = as * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 +
              b[1] * Matrix::Identity(n, n));
    v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 +
        b[0] * Matrix::Identity(n, n);
  }

  Matrix f = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) {
    f = f * f;
  }
  return f;
}

Vector matexp_apply(const Matrix& a, Real t, const Vector& x0) {
  ensure_square(a, "matexp_apply input");
  if (x0.size() != a.rows()) {
    throw DimensionMismatch("matexp_apply: matrix is " + std::to_string(a.rows()) +
                            "-dimensional but state has size " + std::to_string(x0.size()));
  }
  return matexp(t * a) * x0;
}

// ============================================================================
// Structure checks
// ============================================================================

bool is_skew_symmetric(const Matrix& a, Real tol) {
  if (a.rows() != a.cols()) {
    return false;
  }
  return (a + a.transpose()).cwiseAbs().maxCoeff() <= tol;
}

Real symmetric_min_eigenvalue(Matrix a) {
  ensure_square(a, "symmetric_min_eigenvalue input");
  const Index n = a.rows();
  if (n == 1) {
    return a(0, 0);
  }
  const Real frob = a.norm();
  const Real target = 1e-12 * std::max(frob, std::numeric_limits<Real>::min());
  constexpr int kMaxSweeps = 50;

  auto off_norm = [&]() {
    Real s = 0;
    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        s += 2 * a(p, q) * a(p, q);
      }
    }
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < kMaxSweeps && off_norm() > target; ++sweep) {
    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) {
          continue;
        }
        // Classic symmetric Jacobi rotation annihilating a(p,q).
        const Real tau = (a(q, q) - a(p, p)) / (2 * a(p, q));
        const Real t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1 + tau * tau));
        const Real c = 1 / std::sqrt(1 + t * t);
        const Real s = t * c;
        for (Index i = 0; i < n; ++i) {
          const Real aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (Index i = 0; i < n; ++i) {
          const Real api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
      }
    }
  }
  return a.diagonal().minCoeff();
}

bool is_positive_semidefinite(const Matrix& a, Real tol) {
  ensure_square(a, "is_positive_semidefinite input");
  const Real scale = std::max(Real(1), a.cwiseAbs().maxCoeff());
  const Real asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol * scale) {
    throw NotSymmetric("is_positive_semidefinite: asymmetry " +
                       std::to_string(static_cast<double>(asym)) + " exceeds tolerance");
  }
  return symmetric_min_eigenvalue(a) >= -tol;
}

}  // namespace phsplit
