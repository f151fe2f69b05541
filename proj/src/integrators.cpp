#include "phsplit/integrators.hpp"

#include <cmath>
#include <map>
#include <string>
#include <utility>

namespace phsplit {

namespace {

constexpr Real kGridRelTol = 1e-12;

bool close_rel(Real a, Real b, Real scale) {
  return std::abs(a - b) <= kGridRelTol * std::max(Real(1), std::abs(scale));
}

}  // namespace

// ============================================================================
// MidpointStepper
// ============================================================================

MidpointStepper::MidpointStepper(const LinearPhs& sys, Real h, OpCounter* counter)
    : n_(sys.n()),
      h_(h),
      b_(sys.B),
      u_(sys.u),
      carries_input_(sys.input_dim() > 0),
      carries_time_(true),
      counter_(counter) {
  // Diagnostic output map; assembled outside the counted path like the drift.
  if (sys.input_dim() > 0) {
    btq_ = (sys.B.transpose() * sys.Q).eval();
    has_output_ = true;
  }
  init(drift(sys), {}, counter);
}

MidpointStepper::MidpointStepper(const SubsystemSpec& part, Real h, OpCounter* counter,
                                 std::vector<WindowSpec> windows)
    : n_(part.A.rows()),
      h_(h),
      b_(part.B),
      u_(part.u),
      carries_input_(part.carries_input),
      carries_time_(part.carries_time),
      counter_(counter) {
  init(part.A, std::move(windows), counter);
}

void MidpointStepper::init(const Matrix& a, std::vector<WindowSpec> windows,
                           OpCounter* counter) {
  ensure_square(a, "midpoint drift");
  ensure_finite(a, "midpoint drift");
  if (h_ == 0) {
    throw ConfigError("midpoint step size must be nonzero");
  }
  if (windows.empty()) {
    windows.push_back(WindowSpec{0, n_});
  }

  // Windows must be disjoint, in order, and inside the state; the dynamics
  // must vanish outside them (exact zeros — split parts are built that way).
  std::vector<Index> window_of(static_cast<std::size_t>(n_), -1);
  Index prev_end = 0;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto& win = windows[w];
    if (win.size < 1 || win.offset < prev_end || win.offset + win.size > n_) {
      throw ConfigError("midpoint windows must be disjoint, ordered, and inside the state");
    }
    prev_end = win.offset + win.size;
    for (Index i = win.offset; i < prev_end; ++i) {
      window_of[static_cast<std::size_t>(i)] = static_cast<Index>(w);
    }
  }
  for (Index i = 0; i < n_; ++i) {
    for (Index j = 0; j < n_; ++j) {
      const Index wi = window_of[static_cast<std::size_t>(i)];
      if ((wi < 0 || wi != window_of[static_cast<std::size_t>(j)]) && a(i, j) != 0.0) {
        throw ConfigError("part has dynamics outside the declared diagonal windows at (" +
                          std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
  for (Index i = 0; i < n_; ++i) {
    if (window_of[static_cast<std::size_t>(i)] < 0) {
      outside_.push_back(i);
    }
  }

  const bool has_ports = carries_input_ && b_.cols() > 0 && !u_.is_zero();
  if (carries_input_ && b_.cols() > 0 && b_.rows() != n_) {
    throw DimensionMismatch("input matrix must have one row per state");
  }

  PhaseGuard guard(counter, Phase::kSetup);
  windows_.reserve(windows.size());
  for (const auto& win : windows) {
    const Index m = win.size;
    Matrix scaled = a.block(win.offset, win.offset, m, m) * (h_ / 2);
    if (counter != nullptr) {
      counter->add_muls(static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(m));
    }
    Matrix mplus = scaled;
    mplus.diagonal().array() += 1.0;
    Matrix mminus = -scaled;
    mminus.diagonal().array() += 1.0;
    if (counter != nullptr) {
      counter->add_adds(2 * static_cast<std::uint64_t>(m));
    }
    LuFactors factors = lu_factor(std::move(mminus), counter);
    windows_.push_back(Window{win.offset, std::move(mplus), std::move(factors)});
  }
  if (has_ports && u_.kind() == InputSignal::Kind::kConstant) {
    bu_const_ = counted_matvec(b_, u_(0), counter);
  }
}

void MidpointStepper::step(Vector& x, Real t, Vector* y) {
  if (x.size() != n_) {
    throw DimensionMismatch("midpoint step: state size " + std::to_string(x.size()) +
                            ", expected " + std::to_string(n_));
  }
  PhaseGuard guard(counter_, Phase::kStep);
  const bool want_y = y != nullptr && has_output_;
  Vector x0;
  if (want_y) {
    x0 = x;
  }

  // Input increment w = B u(t + h/2); the step adds h*w through the solve.
  Vector w;
  if (carries_input_ && b_.cols() > 0 && !u_.is_zero()) {
    if (u_.kind() == InputSignal::Kind::kConstant) {
      w = bu_const_;
    } else {
      w = counted_matvec(b_, u_(t + h_ / 2), counter_);
    }
  }

  for (const auto& win : windows_) {
    const Index m = win.factors.n;
    const Vector xw = x.segment(win.offset, m);
    Vector rhs = counted_matvec(win.mplus, xw, counter_);
    if (w.size() > 0) {
      const Vector ww = w.segment(win.offset, m);
      counted_axpy(h_, ww, rhs, counter_);
    }
    lu_solve_inplace(win.factors, rhs, counter_);
    x.segment(win.offset, m) = rhs;
  }
  if (w.size() > 0 && !outside_.empty()) {
    // No dynamics here: midpoint reduces to x += h * w on these coordinates.
    for (const Index i : outside_) {
      x(i) += h_ * w(i);
    }
    if (counter_ != nullptr) {
      counter_->add_muls(outside_.size());
      counter_->add_adds(outside_.size());
    }
  }

  if (want_y) {
    *y = btq_ * (0.5 * (x0 + x));  // diagnostic output, uncounted
  }
}

// ============================================================================
// ScalarCouplingStepper
// ============================================================================

ScalarCouplingStepper::ScalarCouplingStepper(const SubsystemSpec& coupling, Real h,
                                             OpCounter* counter)
    : n_(coupling.A.rows()),
      h_(h),
      b_(coupling.B),
      u_(coupling.u),
      carries_input_(coupling.carries_input),
      carries_time_(coupling.carries_time),
      counter_(counter) {
  const auto info = detect_scalar_coupling(coupling);
  if (!info.has_value()) {
    throw ScalarCouplingRequired(
        "coupling part is not scalar (needs exactly one off-diagonal pair at transposed "
        "positions and a zero diagonal)");
  }
  info_ = *info;
  if (h_ == 0) {
    throw ConfigError("scalar-coupling step size must be nonzero");
  }
  if (carries_input_ && b_.cols() > 0 && b_.rows() != n_) {
    throw DimensionMismatch("input matrix must have one row per state");
  }

  PhaseGuard guard(counter, Phase::kSetup);
  nu1_ = 0.5 * h_ * info_.j1;
  nu2_ = 0.5 * h_ * info_.j2;
  const Real p = nu1_ * nu2_;
  denom_ = 1.0 - p;
  if (counter != nullptr) {
    counter->add_muls(5);
    counter->add_adds(1);
  }
  if (std::abs(denom_) < 1e-14) {
    throw DegenerateCoupling("scalar-coupling Cayley transform is singular: (h/2)^2 j1 j2 = " +
                             std::to_string(p));
  }
  c11_ = (1.0 + p) / denom_;
  c12_ = (2.0 * nu2_) / denom_;
  c21_ = (2.0 * nu1_) / denom_;
  if (counter != nullptr) {
    counter->add_muls(2);
    counter->add_adds(1);
    counter->add_divs(3);
  }
  if (carries_input_ && b_.cols() > 0 && u_.kind() == InputSignal::Kind::kConstant) {
    bu_const_ = counted_matvec(b_, u_(0), counter);
  }
}

void ScalarCouplingStepper::step(Vector& x, Real t, Vector* /*y*/) {
  if (x.size() != n_) {
    throw DimensionMismatch("scalar-coupling step: state size " + std::to_string(x.size()) +
                            ", expected " + std::to_string(n_));
  }
  PhaseGuard guard(counter_, Phase::kStep);
  const Real xk = x(info_.k), xl = x(info_.l);
  x(info_.k) = c11_ * xk + c12_ * xl;
  x(info_.l) = c21_ * xk + c11_ * xl;
  if (counter_ != nullptr) {
    counter_->add_muls(4);
    counter_->add_adds(2);
  }

  if (carries_input_ && b_.cols() > 0 && !u_.is_zero()) {
    Vector w;
    if (u_.kind() == InputSignal::Kind::kConstant) {
      w = bu_const_;
    } else {
      w = counted_matvec(b_, u_(t + h_ / 2), counter_);
    }
    Vector hw = h_ * w;
    // The resolvent (I - N)^{-1} acts as the identity except on (k, l).
    const Real tk = (hw(info_.k) + nu2_ * hw(info_.l)) / denom_;
    const Real tl = (nu1_ * hw(info_.k) + hw(info_.l)) / denom_;
    hw(info_.k) = tk;
    hw(info_.l) = tl;
    x += hw;
    if (counter_ != nullptr) {
      counter_->add_muls(static_cast<std::uint64_t>(n_) + 2);
      counter_->add_adds(static_cast<std::uint64_t>(n_) + 2);
      counter_->add_divs(2);
    }
  }
}

// ============================================================================
// CompositeStepper
// ============================================================================

CompositeStepper::CompositeStepper(std::vector<std::shared_ptr<Flow>> stages, Real macro_h)
    : stages_(std::move(stages)), h_(macro_h) {
  if (stages_.empty()) {
    throw ConfigError("composite stepper needs at least one stage");
  }
  for (const auto& s : stages_) {
    if (s == nullptr) {
      throw ConfigError("composite stepper stage is null");
    }
  }
  if (h_ == 0) {
    throw ConfigError("composite macro step must be nonzero");
  }
  n_ = stages_.front()->dim();
  for (const auto& s : stages_) {
    if (s->dim() != n_) {
      throw DimensionMismatch("composite stages act on different state dimensions");
    }
  }

  // Each distinct sub-flow must cover the whole macro interval, and the
  // clock-advancing stages must tile it exactly once.
  std::map<const Flow*, Real> family_total;
  Real time_total = 0;
  for (const auto& s : stages_) {
    family_total[s.get()] += s->step_size();
    if (s->carries_time()) {
      time_total += s->step_size();
      any_time_ = true;
    }
  }
  for (const auto& [flow, total] : family_total) {
    (void)flow;
    if (!close_rel(total, h_, h_)) {
      throw StepMismatch("sub-flow step sizes sum to " + std::to_string(total) +
                         ", expected the macro step " + std::to_string(h_));
    }
  }
  if (any_time_ && !close_rel(time_total, h_, h_)) {
    throw StepMismatch("clock-advancing stages cover " + std::to_string(time_total) +
                       " of the macro step " + std::to_string(h_));
  }
}

void CompositeStepper::step(Vector& x, Real t, Vector* /*y*/) {
  Real local = t;
  for (const auto& s : stages_) {
    s->step(x, local, nullptr);
    if (s->carries_time()) {
      local += s->step_size();
    }
  }
}

std::shared_ptr<CompositeStepper> strang_compose(std::shared_ptr<Flow> f1,
                                                 std::shared_ptr<Flow> f2, Real h) {
  if (f1 == nullptr || f2 == nullptr) {
    throw ConfigError("strang_compose needs two flows");
  }
  if (!close_rel(f1->step_size(), h / 2, h)) {
    throw StepMismatch("outer flow is prepared at step " + std::to_string(f1->step_size()) +
                       ", expected h/2 = " + std::to_string(h / 2));
  }
  if (!close_rel(f2->step_size(), h, h)) {
    throw StepMismatch("inner flow is prepared at step " + std::to_string(f2->step_size()) +
                       ", expected h = " + std::to_string(h));
  }
  return std::make_shared<CompositeStepper>(std::vector<std::shared_ptr<Flow>>{f1, f2, f1},
                                            h);
}

std::shared_ptr<CompositeStepper> impulse_compose(std::shared_ptr<Flow> fast,
                                                  std::shared_ptr<Flow> slow, Real big_h,
                                                  Index m) {
  if (fast == nullptr || slow == nullptr) {
    throw ConfigError("impulse_compose needs two flows");
  }
  if (m < 1) {
    throw InvalidMultirateFactor("multirate factor must be a positive integer, got " +
                                 std::to_string(m));
  }
  if (!close_rel(slow->step_size(), big_h / 2, big_h)) {
    throw StepMismatch("slow flow is prepared at step " + std::to_string(slow->step_size()) +
                       ", expected H/2 = " + std::to_string(big_h / 2));
  }
  if (!close_rel(fast->step_size(), big_h / static_cast<Real>(m), big_h)) {
    throw StepMismatch("fast flow is prepared at step " + std::to_string(fast->step_size()) +
                       ", expected H/m = " + std::to_string(big_h / static_cast<Real>(m)));
  }
  std::vector<std::shared_ptr<Flow>> stages;
  stages.reserve(static_cast<std::size_t>(m) + 2);
  stages.push_back(slow);
  for (Index i = 0; i < m; ++i) {
    stages.push_back(fast);
  }
  stages.push_back(std::move(slow));
  return std::make_shared<CompositeStepper>(std::move(stages), big_h);
}

// ============================================================================
// integrate
// ============================================================================

Trajectory integrate(Flow& stepper, const Vector& x0, Real t0, Real t_end,
                     const IntegrateOptions& opts) {
  if (x0.size() != stepper.dim()) {
    throw DimensionMismatch("integrate: initial state size " + std::to_string(x0.size()) +
                            ", flow dimension " + std::to_string(stepper.dim()));
  }
  if (opts.record_every < 1) {
    throw ConfigError("record_every must be at least 1");
  }
  const Real h = stepper.step_size();
  if (h == 0) {
    throw ConfigError("integrate: flow has zero step size");
  }
  if (opts.hamiltonian_q != nullptr && (opts.hamiltonian_q->rows() != x0.size() ||
                                        opts.hamiltonian_q->cols() != x0.size())) {
    throw DimensionMismatch("integrate: energy weight dimension mismatch");
  }
  const Real span = t_end - t0;
  const long long steps = std::llround(span / h);
  if (steps < 0 || !close_rel(static_cast<Real>(steps) * h, span, span)) {
    throw GridMismatch("time span " + std::to_string(span) +
                       " is not an integer number of steps of " + std::to_string(h));
  }

  Trajectory traj;
  traj.steps = static_cast<Index>(steps);
  traj.macro_h = h;
  const bool want_y = stepper.has_output();

  const auto record = [&](Real t, const Vector& x, const Vector* y) {
    traj.times.push_back(t);
    traj.states.push_back(x);
    if (want_y) {
      traj.outputs.push_back(y != nullptr ? *y : Vector());
    }
    if (opts.hamiltonian_q != nullptr) {
      traj.hamiltonians.push_back(hamiltonian(*opts.hamiltonian_q, x));
    }
  };

  Vector x = x0;
  record(t0, x, nullptr);

  Vector y;
  Vector x_before;
  for (long long k = 1; k <= steps; ++k) {
    const Real t_prev = t0 + static_cast<Real>(k - 1) * h;
    const Real t_new = t0 + static_cast<Real>(k) * h;
    if (opts.observer) {
      x_before = x;
    }
    stepper.step(x, t_prev, want_y ? &y : nullptr);
    if (opts.observer) {
      opts.observer(static_cast<Index>(k), t_new, x_before, x);
    }
    if (k % opts.record_every == 0 || k == steps) {
      record(t_new, x, want_y ? &y : nullptr);
    }
  }

  if (opts.counter != nullptr) {
    traj.ops = *opts.counter;
    traj.has_ops = true;
  }
  return traj;
}

}  // namespace phsplit
