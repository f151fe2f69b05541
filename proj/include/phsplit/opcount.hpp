#pragma once

#include <cstdint>

namespace phsplit {

// ============================================================================
// Instrumented operation counting
// ============================================================================
//
// Every arithmetic kernel on the integration path takes an explicit counter
// handle and tallies the floating-point operations it actually executes.
// Multiplies, adds (including subtractions), divides, and comparisons are
// tallied separately; the headline "total operations" figure is
// muls + adds + divs, with comparisons reported alongside but excluded.
//
// Counters are phase-split: work done while preparing a stepper
// (factorizations, forming the shifted matrices) lands in the setup tally,
// work done inside step evaluations lands in the per-step tally. Steppers
// switch the phase themselves via PhaseGuard, so callers only decide which
// counter an experiment uses.
//
// A counter is plain mutable state: use one per experiment and do not share
// one across concurrently running steppers. Combining counters from parallel
// runs is an explicit `merge`.

enum class Phase { kSetup, kStep };

/// One phase's operation tally.
struct OpTally {
  std::uint64_t muls = 0;
  std::uint64_t adds = 0;
  std::uint64_t divs = 0;
  std::uint64_t comparisons = 0;

  /// Headline figure: muls + adds + divs (comparisons excluded).
  [[nodiscard]] std::uint64_t headline() const { return muls + adds + divs; }

  OpTally& operator+=(const OpTally& o) {
    muls += o.muls;
    adds += o.adds;
    divs += o.divs;
    comparisons += o.comparisons;
    return *this;
  }
  friend OpTally operator+(OpTally a, const OpTally& b) { return a += b; }

  /// Entrywise difference (this - earlier); valid when counts only grew.
  [[nodiscard]] OpTally since(const OpTally& earlier) const {
    return {muls - earlier.muls, adds - earlier.adds, divs - earlier.divs,
            comparisons - earlier.comparisons};
  }

  friend bool operator==(const OpTally&, const OpTally&) = default;
};

/// Phase-split operation counter. Tallies are monotonically non-decreasing;
/// the grand total is always the sum of the two phase tallies.
class OpCounter {
 public:
  void add_muls(std::uint64_t n) { active().muls += n; }
  void add_adds(std::uint64_t n) { active().adds += n; }
  void add_divs(std::uint64_t n) { active().divs += n; }
  void add_comparisons(std::uint64_t n) { active().comparisons += n; }

  [[nodiscard]] Phase phase() const { return phase_; }
  void set_phase(Phase p) { phase_ = p; }

  [[nodiscard]] const OpTally& setup() const { return setup_; }
  [[nodiscard]] const OpTally& step() const { return step_; }
  [[nodiscard]] OpTally grand() const { return setup_ + step_; }
  [[nodiscard]] std::uint64_t headline_total() const { return grand().headline(); }

  /// Explicit reduction of counters from independent (e.g. parallel) runs.
  void merge(const OpCounter& o) {
    setup_ += o.setup_;
    step_ += o.step_;
  }

  void reset() { *this = OpCounter{}; }

 private:
  OpTally& active() { return phase_ == Phase::kSetup ? setup_ : step_; }

  OpTally setup_;
  OpTally step_;
  Phase phase_ = Phase::kSetup;
};

/// RAII phase switch; restores the previous phase on scope exit.
/// Null counter is allowed (counting disabled) and makes this a no-op.
class PhaseGuard {
 public:
  PhaseGuard(OpCounter* c, Phase p) : c_(c) {
    if (c_ != nullptr) {
      saved_ = c_->phase();
      c_->set_phase(p);
    }
  }
  ~PhaseGuard() {
    if (c_ != nullptr) {
      c_->set_phase(saved_);
    }
  }
  PhaseGuard(const PhaseGuard&) = delete;
  PhaseGuard& operator=(const PhaseGuard&) = delete;

 private:
  OpCounter* c_;
  Phase saved_ = Phase::kSetup;
};

}  // namespace phsplit
