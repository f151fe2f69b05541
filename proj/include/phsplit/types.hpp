#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace phsplit {

// ============================================================================
// Scalar and dense types
// ============================================================================

using Real = double;
using Index = Eigen::Index;

/// Dense dynamic matrix/vector of the library's working scalar. All public
/// entry points validate user-supplied data (finite entries, consistent
/// dimensions) at the boundary; internal kernels assume validated input.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

template <class Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// ============================================================================
// Error taxonomy
// ============================================================================

/// Root of the library's exception hierarchy.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A pivot fell below the singularity threshold during factorization.
struct SingularMatrix : Error {
  using Error::Error;
};

/// Operands have incompatible shapes.
struct DimensionMismatch : Error {
  using Error::Error;
};

/// A matrix required to be symmetric is not (beyond tolerance).
struct NotSymmetric : Error {
  using Error::Error;
};

/// Coupled-system blocks have inconsistent dimensions.
struct BlockDimensionMismatch : Error {
  using Error::Error;
};

/// The closed-form coupling update is undefined: |1 - nu1*nu2| < 1e-14.
struct DegenerateCoupling : Error {
  using Error::Error;
};

/// Multirate factor m < 1.
struct InvalidMultirateFactor : Error {
  using Error::Error;
};

/// (t_end - t0) is not an integer multiple of the step within 1e-12 relative,
/// or an otherwise inconsistent time grid was requested.
struct GridMismatch : Error {
  using Error::Error;
};

/// A state or override index lies outside the valid range.
struct IndexOutOfRange : Error {
  using Error::Error;
};

/// The operation requires a zero input signal (or none), but one is present.
struct UnsupportedInput : Error {
  using Error::Error;
};

/// The operation is only defined for scalar-coupled systems.
struct ScalarCouplingRequired : Error {
  using Error::Error;
};

/// Measured-cost extraction was requested from a run without counting.
struct CountingDisabled : Error {
  using Error::Error;
};

/// Prepared sub-flow step sizes disagree with the requested macro step.
struct StepMismatch : Error {
  using Error::Error;
};

/// Convergence-order estimation requires successively halved step sizes.
struct NonHalvingGrid : Error {
  using Error::Error;
};

/// Malformed or inconsistent configuration input.
struct ConfigError : Error {
  using Error::Error;
};

// ============================================================================
// Boundary validation helpers
// ============================================================================

/// Throws ConfigError if any entry of `m` is NaN or infinite.
inline void ensure_finite(const Matrix& m, const std::string& name) {
  if (!m.allFinite()) {
    throw ConfigError(name + " contains a non-finite entry");
  }
}

inline void ensure_finite(const Vector& v, const std::string& name) {
  if (!v.allFinite()) {
    throw ConfigError(name + " contains a non-finite entry");
  }
}

/// Throws DimensionMismatch unless `m` is square with positive dimension.
inline void ensure_square(const Matrix& m, const std::string& name) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw DimensionMismatch(name + " must be square with positive dimension, got " +
                            std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

}  // namespace phsplit
