#pragma once

#include <functional>
#include <optional>
#include <utility>

#include "phsplit/linalg.hpp"
#include "phsplit/opcount.hpp"
#include "phsplit/types.hpp"

namespace phsplit {

// ============================================================================
// Input signals
// ============================================================================

/// Time-dependent input u(t) of fixed dimension. Zero and constant signals
/// are first-class so steppers can skip provably zero work; arbitrary
/// callbacks cover forced systems.
class InputSignal {
 public:
  enum class Kind { kZero, kConstant, kCallback };

  /// u(t) = 0 with dimension d (d = 0 means "no ports").
  [[nodiscard]] static InputSignal zero(Index d);
  [[nodiscard]] static InputSignal constant(Vector value);
  [[nodiscard]] static InputSignal callback(Index d, std::function<Vector(Real)> f);

  /// Evaluates u(t); callback results are checked for size and finiteness.
  [[nodiscard]] Vector operator()(Real t) const;

  [[nodiscard]] Index dim() const { return dim_; }
  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] bool is_zero() const { return kind_ == Kind::kZero; }

 private:
  InputSignal(Kind k, Index d) : kind_(k), dim_(d) {}

  Kind kind_ = Kind::kZero;
  Index dim_ = 0;
  Vector value_;
  std::function<Vector(Real)> f_;
};

// ============================================================================
// Linear port-Hamiltonian systems
// ============================================================================
//
//   x' = (J - R) Q x + B u,   y = B^T Q x,   H(x) = x^T Q x / 2
//
// with J skew-symmetric (energy routing), R symmetric positive semidefinite
// (dissipation), Q symmetric (energy weights). Plain aggregate structs with
// free functions: systems are immutable value types, validation happens at
// the construction boundary (`make_*`), and tests may build raw aggregates
// to probe broken structure.

struct LinearPhs {
  Matrix J;
  Matrix R;
  Matrix Q;
  Matrix B;        ///< n x d port matrix; d = 0 means no input term
  InputSignal u = InputSignal::zero(0);

  [[nodiscard]] Index n() const { return J.rows(); }
  [[nodiscard]] Index input_dim() const { return B.cols(); }
};

struct ValidationReport {
  bool q_positive_semidefinite = true;  ///< advisory only; indefinite Q is legal
};

/// Validates shape, finiteness, J skewness, R PSD-ness, and Q symmetry, all
/// with tolerance tol * max(1, entry scale). Indefinite Q is reported, not
/// rejected (the Hamiltonian is then not an energy). Throws on violations.
ValidationReport validate_linear_phs(const LinearPhs& sys, Real tol = 1e-12);

[[nodiscard]] LinearPhs make_linear_phs(Matrix j, Matrix r, Matrix q, Matrix b, InputSignal u,
                                        Real tol = 1e-12);

/// Drift matrix (J - R) Q, formed with the fixed-order kernel so block
/// assemblies of the same product agree bitwise.
[[nodiscard]] Matrix drift(const LinearPhs& sys);

/// H(x) = x^T Q x / 2. Diagnostic path; not operation-counted.
[[nodiscard]] Real hamiltonian(const Matrix& q, const Vector& x);

/// grad H(x) = Q x.
[[nodiscard]] Vector hamiltonian_gradient(const Matrix& q, const Vector& x);

/// Residual of the discrete energy balance over one step of size h:
///   (H(x1) - H(x0))/h  -  u1^T y1  +  g^T R g,   g = Q (x0+x1)/2,
/// where u1 is the midpoint input sample and y1 the step-consistent output
/// B^T Q (x0+x1)/2. Zero (to roundoff) for an exact implicit-midpoint step;
/// pass empty u1/y1 for portless systems.
[[nodiscard]] Real energy_balance_residual(const LinearPhs& sys, const Vector& x0,
                                           const Vector& x1, const Vector& y1,
                                           const Vector& u1, Real h);

// ============================================================================
// Coupled systems
// ============================================================================
//
// Two PHS blocks coupled skew-symmetrically through Jt:
//
//   J = [ J1   -Jt^T ]    R = blkdiag(R1, R2),   Q = blkdiag(Q1, Q2)
//       [ Jt    J2   ]
//
// Jt has shape n2 x n1 (block-2 rows, block-1 columns).

struct CoupledLinearPhs {
  Matrix J1, J2;
  Matrix Jt;
  Matrix R1, R2;
  Matrix Q1, Q2;
  Matrix B;        ///< (n1+n2) x d
  InputSignal u = InputSignal::zero(0);

  [[nodiscard]] Index n1() const { return J1.rows(); }
  [[nodiscard]] Index n2() const { return J2.rows(); }
  [[nodiscard]] Index n() const { return n1() + n2(); }
  [[nodiscard]] Index input_dim() const { return B.cols(); }
};

/// Validates per-block structure and cross-block dimensions.
/// Throws BlockDimensionMismatch / NotSymmetric / ConfigError.
[[nodiscard]] CoupledLinearPhs make_coupled_phs(Matrix j1, Matrix j2, Matrix jt, Matrix r1,
                                                Matrix r2, Matrix q1, Matrix q2, Matrix b,
                                                InputSignal u, Real tol = 1e-12);

/// Assembles the monolithic system (same dynamics, one block).
[[nodiscard]] LinearPhs assemble(const CoupledLinearPhs& c);

// ============================================================================
// Additive splittings
// ============================================================================

/// One additive part of a split right-hand side: x' = A x (+ B u when this
/// part carries the input). A is full-dimensional; parts sum to the drift.
struct SubsystemSpec {
  Matrix A;
  Matrix B;        ///< n x 0 when this part has no input
  InputSignal u = InputSignal::zero(0);
  bool carries_input = false;
  bool carries_time = false;  ///< this part advances the clock inside compositions
};

/// Coupling/internal splitting:
///   f1: pure skew coupling  [ 0, -Jt^T Q2 ; Jt Q1, 0 ]  + input + time
///   f2: internal block dynamics  blkdiag((J1-R1) Q1, (J2-R2) Q2)
/// f1.A + f2.A equals drift(assemble(c)) entry for entry (bitwise, given the
/// fixed-order product kernel).
[[nodiscard]] std::pair<SubsystemSpec, SubsystemSpec> split_coupling(const CoupledLinearPhs& c);

/// Fast/slow multirate splitting:
///   fast: block-1 internal dynamics  blkdiag((J1-R1) Q1, 0)
///   slow: coupling + block-2 internal + input + time
/// Both parts are PHS-form, so midpoint sub-flows of each are dissipative.
[[nodiscard]] std::pair<SubsystemSpec, SubsystemSpec> split_multirate(const CoupledLinearPhs& c);

/// Scalar coupling: the coupling drift has exactly one nonzero strictly above
/// the diagonal, at (k, l), one strictly below at the transposed position
/// (l, k), and a zero diagonal. Indices are 0-based with k < l.
struct ScalarCouplingInfo {
  Index k = 0;
  Index l = 0;
  Real j1 = 0;  ///< entry below the diagonal, A(l, k)
  Real j2 = 0;  ///< entry above the diagonal, A(k, l)
};

/// Returns the coupling data, or nullopt when the part is not scalar-coupled
/// (zero tested exactly: split products place exact zeros off the pattern).
[[nodiscard]] std::optional<ScalarCouplingInfo> detect_scalar_coupling(const SubsystemSpec& f1);

}  // namespace phsplit
