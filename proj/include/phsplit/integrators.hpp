#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "phsplit/linalg.hpp"
#include "phsplit/opcount.hpp"
#include "phsplit/phs.hpp"
#include "phsplit/types.hpp"

namespace phsplit {

// ============================================================================
// One-step flows
// ============================================================================

/// A one-step flow map with a fixed step size. A stepper owns mutable
/// workspace and must be driven by one thread at a time; distinct steppers
/// over the same (immutable) system may run concurrently. Changing the step
/// size means constructing a new stepper (factorizations are per (A, h)).
class Flow {
 public:
  virtual ~Flow() = default;

  /// Advances x in place by one step starting at time t. When y is non-null
  /// and the flow has an output, stores the step-consistent output there.
  virtual void step(Vector& x, Real t, Vector* y = nullptr) = 0;

  [[nodiscard]] virtual Real step_size() const = 0;
  [[nodiscard]] virtual Index dim() const = 0;

  /// True when this flow consumes wall-clock time inside a composition: its
  /// sub-interval advances the composite's local clock (and hence the input
  /// sampling times of later stages).
  [[nodiscard]] virtual bool carries_time() const = 0;

  [[nodiscard]] virtual bool has_output() const { return false; }
};

/// A diagonal window [offset, offset+size) of the state. A midpoint stepper
/// factors and solves each window independently, so a block-diagonal part
/// costs per-block rather than full-dimension work.
struct WindowSpec {
  Index offset = 0;
  Index size = 0;
};

// ============================================================================
// Implicit midpoint
// ============================================================================

/// Implicit midpoint rule on x' = A x + B u(t):
///
///   (I - (h/2)A) x1 = (I + (h/2)A) x0 + h B u(t0 + h/2)
///
/// i.e. the Cayley transform of (h/2)A plus a midpoint-sampled input term.
/// I - (h/2)A is factored once at construction (setup phase); every step
/// costs one mat-vec and one LU solve per window (step phase). Coordinates
/// outside every window must have zero dynamics and evolve by the input term
/// alone. The map preserves quadratic invariants of the drift and satisfies
/// the discrete-gradient identity
///   (x1 - x0)^T Q (x0 + x1)/2 = H(x1) - H(x0)
/// to roundoff for any quadratic H compatible with A = (J - R)Q.
class MidpointStepper : public Flow {
 public:
  /// Flow of a full system; steps report the output y1 = B^T Q (x0+x1)/2
  /// when ports are present.
  MidpointStepper(const LinearPhs& sys, Real h, OpCounter* counter);

  /// Flow of one additive part. The support of part.A must lie inside the
  /// given diagonal windows (an empty list means one window covering the
  /// whole state).
  MidpointStepper(const SubsystemSpec& part, Real h, OpCounter* counter,
                  std::vector<WindowSpec> windows = {});

  void step(Vector& x, Real t, Vector* y = nullptr) override;
  [[nodiscard]] Real step_size() const override { return h_; }
  [[nodiscard]] Index dim() const override { return n_; }
  [[nodiscard]] bool carries_time() const override { return carries_time_; }
  [[nodiscard]] bool has_output() const override { return has_output_; }

 private:
  struct Window {
    Index offset = 0;
    Matrix mplus;       ///< I + (h/2) A restricted to the window
    LuFactors factors;  ///< LU of I - (h/2) A restricted to the window
  };

  void init(const Matrix& a, std::vector<WindowSpec> windows, OpCounter* counter);

  Index n_ = 0;
  Real h_ = 0;
  Matrix b_;
  InputSignal u_ = InputSignal::zero(0);
  bool carries_input_ = false;
  bool carries_time_ = false;
  bool has_output_ = false;
  Matrix btq_;                  ///< output map B^T Q (full-system form only)
  Vector bu_const_;             ///< precomputed B u for constant inputs
  std::vector<Window> windows_;
  std::vector<Index> outside_;  ///< coordinates not covered by any window
  OpCounter* counter_ = nullptr;
};

// ============================================================================
// Closed-form scalar-coupling step
// ============================================================================

/// Implicit midpoint on a scalar-coupled part, in closed form. For a part
/// whose drift has the single skew pair A(l,k) = j1, A(k,l) = j2, the Cayley
/// transform acts as the identity outside indices (k,l) and as the 2x2 block
///
///   [ (1+v1 v2)/(1-v1 v2)   2 v2/(1-v1 v2) ]
///   [ 2 v1/(1-v1 v2)        (1+v1 v2)/(1-v1 v2) ],   v_i = (h/2) j_i,
///
/// on them — no factorization, O(1) work per step. An input term, when the
/// part carries one, adds h (I-N)^{-1} B u(t0+h/2) with (I-N)^{-1} equal to
/// the identity except the 2x2 block [[1, v2],[v1, 1]]/(1-v1 v2).
class ScalarCouplingStepper : public Flow {
 public:
  ScalarCouplingStepper(const SubsystemSpec& coupling, Real h, OpCounter* counter);

  void step(Vector& x, Real t, Vector* y = nullptr) override;
  [[nodiscard]] Real step_size() const override { return h_; }
  [[nodiscard]] Index dim() const override { return n_; }
  [[nodiscard]] bool carries_time() const override { return carries_time_; }

  [[nodiscard]] const ScalarCouplingInfo& info() const { return info_; }

 private:
  Index n_ = 0;
  Real h_ = 0;
  ScalarCouplingInfo info_;
  Real nu1_ = 0, nu2_ = 0, denom_ = 1;
  Real c11_ = 1, c12_ = 0, c21_ = 0;
  Matrix b_;
  Vector bu_const_;  ///< precomputed B u for constant inputs
  InputSignal u_ = InputSignal::zero(0);
  bool carries_input_ = false;
  bool carries_time_ = false;
  OpCounter* counter_ = nullptr;
};

// ============================================================================
// Compositions
// ============================================================================

/// Sequential composition of sub-flows making up one macro step. Stages may
/// repeat the same flow object (its step sizes then accumulate); every
/// distinct flow's step sizes must sum to the macro step, so the composition
/// advances each additive part across the whole interval. The local clock
/// advances only on stages that carry time, which fixes the input sampling
/// instants of later stages.
class CompositeStepper : public Flow {
 public:
  CompositeStepper(std::vector<std::shared_ptr<Flow>> stages, Real macro_h);

  void step(Vector& x, Real t, Vector* y = nullptr) override;
  [[nodiscard]] Real step_size() const override { return h_; }
  [[nodiscard]] Index dim() const override { return n_; }
  [[nodiscard]] bool carries_time() const override { return any_time_; }

  [[nodiscard]] const std::vector<std::shared_ptr<Flow>>& stages() const { return stages_; }

 private:
  std::vector<std::shared_ptr<Flow>> stages_;
  Real h_ = 0;
  Index n_ = 0;
  bool any_time_ = false;
};

/// Strang composition  Psi_h = Phi1_{h/2} . Phi2_h . Phi1_{h/2}  (f1 applied
/// first and last). f1 must be prepared at h/2 and f2 at h.
[[nodiscard]] std::shared_ptr<CompositeStepper> strang_compose(std::shared_ptr<Flow> f1,
                                                               std::shared_ptr<Flow> f2,
                                                               Real h);

/// Impulse / kick-oscillate-kick multirate composition
///   Psi_H = Phi_slow_{H/2} . (Phi_fast_{H/m})^m . Phi_slow_{H/2}.
/// slow must be prepared at H/2 and fast at H/m; m >= 1.
[[nodiscard]] std::shared_ptr<CompositeStepper> impulse_compose(std::shared_ptr<Flow> fast,
                                                                std::shared_ptr<Flow> slow,
                                                                Real big_h, Index m);

// ============================================================================
// Trajectory driver
// ============================================================================

/// Called after every macro step with the step index (1-based), the time
/// reached, and the states before/after the step. Lets callers stream
/// per-step diagnostics (energy monotonicity, discrete-gradient residuals)
/// without recording every state.
using StepObserver = std::function<void(Index step, Real t_new, const Vector& x_before,
                                        const Vector& x_after)>;

struct IntegrateOptions {
  Index record_every = 1;              ///< record every k-th step (final always kept)
  const Matrix* hamiltonian_q = nullptr;  ///< record H = x^T Q x / 2 when set
  OpCounter* counter = nullptr;        ///< snapshotted into the trajectory at the end
  StepObserver observer;
};

struct Trajectory {
  std::vector<Real> times;    ///< strictly increasing; times[0] = t0
  std::vector<Vector> states; ///< states[0] = x0
  std::vector<Vector> outputs;      ///< step outputs when the flow has one; entry 0 empty
  std::vector<Real> hamiltonians;   ///< filled when hamiltonian_q was given
  Index steps = 0;
  Real macro_h = 0;
  OpCounter ops;              ///< snapshot of the run's counter (when provided)
  bool has_ops = false;
};

/// Drives a flow from t0 to t_end, which must be an integer number of macro
/// steps away (relative tolerance 1e-12).
[[nodiscard]] Trajectory integrate(Flow& stepper, const Vector& x0, Real t0, Real t_end,
                                   const IntegrateOptions& opts = {});

}  // namespace phsplit
