#include "phsplit/phs.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace phsplit {

// ============================================================================
// InputSignal
// ============================================================================

InputSignal InputSignal::zero(Index d) {
  if (d < 0) {
    throw DimensionMismatch("input dimension must be nonnegative");
  }
  return InputSignal(Kind::kZero, d);
}

InputSignal InputSignal::constant(Vector value) {
  ensure_finite(value, "constant input value");
  InputSignal s(Kind::kConstant, value.size());
  s.value_ = std::move(value);
  return s;
}

InputSignal InputSignal::callback(Index d, std::function<Vector(Real)> f) {
  if (d < 0) {
    throw DimensionMismatch("input dimension must be nonnegative");
  }
  if (!f) {
    throw ConfigError("input callback must be callable");
  }
  InputSignal s(Kind::kCallback, d);
  s.f_ = std::move(f);
  return s;
}

Vector InputSignal::operator()(Real t) const {
  switch (kind_) {
    case Kind::kZero:
      return Vector::Zero(dim_);
    case Kind::kConstant:
      return value_;
    case Kind::kCallback: {
      Vector v = f_(t);
      if (v.size() != dim_) {
        throw DimensionMismatch("input callback returned size " + std::to_string(v.size()) +
                                ", expected " + std::to_string(dim_));
      }
      ensure_finite(v, "input callback value");
      return v;
    }
  }
  return Vector::Zero(dim_);  // unreachable
}

// ============================================================================
// LinearPhs
// ============================================================================

namespace {

void validate_phs_blocks(const Matrix& j, const Matrix& r, const Matrix& q,
                         const std::string& tag, Real tol, bool* q_psd) {
  ensure_square(j, tag + "J");
  ensure_square(r, tag + "R");
  ensure_square(q, tag + "Q");
  ensure_finite(j, tag + "J");
  ensure_finite(r, tag + "R");
  ensure_finite(q, tag + "Q");
  const Index n = j.rows();
  if (r.rows() != n || q.rows() != n) {
    throw DimensionMismatch(tag + "J/R/Q dimensions disagree");
  }
  const Real jscale = std::max(Real(1), j.cwiseAbs().maxCoeff());
  if (!is_skew_symmetric(j, tol * jscale)) {
    throw NotSymmetric(tag + "J is not skew-symmetric within tolerance");
  }
  const Real rscale = std::max(Real(1), r.cwiseAbs().maxCoeff());
  if (!is_positive_semidefinite(r, tol * rscale)) {
    throw ConfigError(tag + "R is not positive semidefinite within tolerance");
  }
  const Real qscale = std::max(Real(1), q.cwiseAbs().maxCoeff());
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > tol * qscale) {
    throw NotSymmetric(tag + "Q is not symmetric within tolerance");
  }
  if (q_psd != nullptr) {
    *q_psd = symmetric_min_eigenvalue(q) >= -tol * qscale;
  }
}

}  // namespace

ValidationReport validate_linear_phs(const LinearPhs& sys, Real tol) {
  ValidationReport report;
  validate_phs_blocks(sys.J, sys.R, sys.Q, "", tol, &report.q_positive_semidefinite);
  ensure_finite(sys.B, "B");
  if (sys.B.rows() != sys.n()) {
    throw DimensionMismatch("B must have n rows, got " + std::to_string(sys.B.rows()));
  }
  if (sys.u.dim() != sys.B.cols()) {
    throw DimensionMismatch("input dimension " + std::to_string(sys.u.dim()) +
                            " does not match B columns " + std::to_string(sys.B.cols()));
  }
  return report;
}

LinearPhs make_linear_phs(Matrix j, Matrix r, Matrix q, Matrix b, InputSignal u, Real tol) {
  LinearPhs sys{std::move(j), std::move(r), std::move(q), std::move(b), std::move(u)};
  (void)validate_linear_phs(sys, tol);
  return sys;
}

Matrix drift(const LinearPhs& sys) {
  const Matrix jmr = sys.J - sys.R;
  return counted_matmul(jmr, sys.Q, nullptr);
}

Real hamiltonian(const Matrix& q, const Vector& x) {
  return 0.5 * x.dot(q * x);
}

Vector hamiltonian_gradient(const Matrix& q, const Vector& x) {
  return q * x;
}

Real energy_balance_residual(const LinearPhs& sys, const Vector& x0, const Vector& x1,
                             const Vector& y1, const Vector& u1, Real h) {
  if (x0.size() != sys.n() || x1.size() != sys.n()) {
    throw DimensionMismatch("energy_balance_residual: state size mismatch");
  }
  if (y1.size() != u1.size()) {
    throw DimensionMismatch("energy_balance_residual: output/input size mismatch");
  }
  if (h == 0) {
    throw GridMismatch("energy_balance_residual: step must be nonzero");
  }
  const Vector mid = 0.5 * (x0 + x1);
  const Vector g = hamiltonian_gradient(sys.Q, mid);
  const Real rate = (hamiltonian(sys.Q, x1) - hamiltonian(sys.Q, x0)) / h;
  const Real supplied = u1.size() > 0 ? u1.dot(y1) : Real(0);
  const Real dissipated = g.dot(sys.R * g);
  return rate - supplied + dissipated;
}

// ============================================================================
// CoupledLinearPhs
// ============================================================================

CoupledLinearPhs make_coupled_phs(Matrix j1, Matrix j2, Matrix jt, Matrix r1, Matrix r2,
                                  Matrix q1, Matrix q2, Matrix b, InputSignal u, Real tol) {
  validate_phs_blocks(j1, r1, q1, "block 1: ", tol, nullptr);
  validate_phs_blocks(j2, r2, q2, "block 2: ", tol, nullptr);
  ensure_finite(jt, "Jt");
  const Index n1 = j1.rows(), n2 = j2.rows();
  if (jt.rows() != n2 || jt.cols() != n1) {
    throw BlockDimensionMismatch("Jt must be n2 x n1 = " + std::to_string(n2) + "x" +
                                 std::to_string(n1) + ", got " + std::to_string(jt.rows()) +
                                 "x" + std::to_string(jt.cols()));
  }
  ensure_finite(b, "B");
  if (b.rows() != n1 + n2) {
    throw BlockDimensionMismatch("B must have n1+n2 rows, got " + std::to_string(b.rows()));
  }
  if (u.dim() != b.cols()) {
    throw DimensionMismatch("input dimension does not match B columns");
  }
  return CoupledLinearPhs{std::move(j1), std::move(j2), std::move(jt), std::move(r1),
                          std::move(r2), std::move(q1), std::move(q2), std::move(b),
                          std::move(u)};
}

LinearPhs assemble(const CoupledLinearPhs& c) {
  const Index n1 = c.n1(), n2 = c.n2(), n = n1 + n2;
  LinearPhs sys;
  sys.J = Matrix::Zero(n, n);
  sys.J.topLeftCorner(n1, n1) = c.J1;
  sys.J.bottomRightCorner(n2, n2) = c.J2;
  sys.J.topRightCorner(n1, n2) = -c.Jt.transpose();
  sys.J.bottomLeftCorner(n2, n1) = c.Jt;
  sys.R = Matrix::Zero(n, n);
  sys.R.topLeftCorner(n1, n1) = c.R1;
  sys.R.bottomRightCorner(n2, n2) = c.R2;
  sys.Q = Matrix::Zero(n, n);
  sys.Q.topLeftCorner(n1, n1) = c.Q1;
  sys.Q.bottomRightCorner(n2, n2) = c.Q2;
  sys.B = c.B;
  sys.u = c.u;
  return sys;
}

// ============================================================================
// Splittings
// ============================================================================

std::pair<SubsystemSpec, SubsystemSpec> split_coupling(const CoupledLinearPhs& c) {
  const Index n1 = c.n1(), n2 = c.n2(), n = n1 + n2;

  SubsystemSpec f1;
  f1.A = Matrix::Zero(n, n);
  const Matrix neg_jt_t = (-c.Jt.transpose()).eval();
  f1.A.topRightCorner(n1, n2) = counted_matmul(neg_jt_t, c.Q2, nullptr);
  f1.A.bottomLeftCorner(n2, n1) = counted_matmul(c.Jt, c.Q1, nullptr);
  f1.B = c.B;
  f1.u = c.u;
  f1.carries_input = c.input_dim() > 0;
  f1.carries_time = true;

  SubsystemSpec f2;
  f2.A = Matrix::Zero(n, n);
  const Matrix jmr1 = c.J1 - c.R1;
  const Matrix jmr2 = c.J2 - c.R2;
  f2.A.topLeftCorner(n1, n1) = counted_matmul(jmr1, c.Q1, nullptr);
  f2.A.bottomRightCorner(n2, n2) = counted_matmul(jmr2, c.Q2, nullptr);
  f2.B = Matrix(n, 0);
  f2.u = InputSignal::zero(0);
  return {std::move(f1), std::move(f2)};
}

std::pair<SubsystemSpec, SubsystemSpec> split_multirate(const CoupledLinearPhs& c) {
  const Index n1 = c.n1(), n2 = c.n2(), n = n1 + n2;

  SubsystemSpec fast;
  fast.A = Matrix::Zero(n, n);
  const Matrix jmr1 = c.J1 - c.R1;
  fast.A.topLeftCorner(n1, n1) = counted_matmul(jmr1, c.Q1, nullptr);
  fast.B = Matrix(n, 0);
  fast.u = InputSignal::zero(0);

  SubsystemSpec slow;
  slow.A = Matrix::Zero(n, n);
  const Matrix neg_jt_t = (-c.Jt.transpose()).eval();
  slow.A.topRightCorner(n1, n2) = counted_matmul(neg_jt_t, c.Q2, nullptr);
  slow.A.bottomLeftCorner(n2, n1) = counted_matmul(c.Jt, c.Q1, nullptr);
  const Matrix jmr2 = c.J2 - c.R2;
  slow.A.bottomRightCorner(n2, n2) = counted_matmul(jmr2, c.Q2, nullptr);
  slow.B = c.B;
  slow.u = c.u;
  slow.carries_input = c.input_dim() > 0;
  slow.carries_time = true;
  return {std::move(fast), std::move(slow)};
}

std::optional<ScalarCouplingInfo> detect_scalar_coupling(const SubsystemSpec& f1) {
  const Matrix& a = f1.A;
  if (a.rows() != a.cols()) {
    return std::nullopt;
  }
  const Index n = a.rows();
  Index upper_count = 0, lower_count = 0;
  Index uk = -1, ul = -1, lk = -1, ll = -1;
  for (Index i = 0; i < n; ++i) {
    if (a(i, i) != 0.0) {
      return std::nullopt;
    }
    for (Index j = i + 1; j < n; ++j) {
      if (a(i, j) != 0.0) {
        if (++upper_count > 1) {
          return std::nullopt;
        }
        uk = i;
        ul = j;
      }
      if (a(j, i) != 0.0) {
        if (++lower_count > 1) {
          return std::nullopt;
        }
        lk = i;
        ll = j;
      }
    }
  }
  if (upper_count != 1 || lower_count != 1 || uk != lk || ul != ll) {
    return std::nullopt;
  }
  return ScalarCouplingInfo{uk, ul, a(ul, uk), a(uk, ul)};
}

}  // namespace phsplit
