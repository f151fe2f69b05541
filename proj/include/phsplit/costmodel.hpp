#pragma once

#include <cstdint>
#include <string>

#include "phsplit/integrators.hpp"
#include "phsplit/types.hpp"

namespace phsplit {

/// Cost summary of one integration run, either predicted from the closed-form
/// complexity model or measured from live operation counters.
///
/// Conventions: `n = n1 + n2` is the full state dimension.  Monolithic
/// (unsplit) methods use `n1 = n`, `n2 = 0`.  All tallies are headline flops
/// (muls + adds + divs; comparisons excluded).
struct CostReport {
  std::string method;
  Index n = 0;
  Index n1 = 0;
  Index n2 = 0;
  Index d = 0;
  std::uint64_t steps = 0;
  std::uint64_t setup_ops = 0;
  std::uint64_t per_step_ops = 0;
  std::uint64_t total_ops = 0;  ///< setup_ops + steps * per_step_ops
};

/// CSV column header matching to_csv_row.
std::string cost_csv_header();

/// Serializes a report as "method,n1,n2,d,steps,setup_ops,per_step_ops,total_ops".
std::string to_csv_row(const CostReport& r);

/// Constant per-macro-step cost of the closed-form scalar-coupling update:
/// two half steps at 6 flops each (4 muls + 2 adds per half step).
inline constexpr std::uint64_t kScalarCouplingPerStep = 12;

/// Predicted cost of the monolithic implicit midpoint method on an
/// n-dimensional system with d ports:
///   setup    = floor(2n^3/3) + 2n^2   (dense LU factorization + I +- (h/2)A)
///   per step = 4n^2 + 2nd             (mat-vec + triangular solves + input)
/// Requires n >= 1, steps >= 1, d >= 0.
CostReport predicted_midpoint_cost(Index n, Index d, std::uint64_t steps);

/// Predicted cost of the coupling-split composition with block dimensions
/// n1, n2 and d ports, valid only when the coupling is scalar (otherwise the
/// coupling flow would need its own dense factorization and the split model
/// does not apply -- ScalarCouplingRequired is thrown):
///   setup    = floor(2 n1^3/3) + floor(2 n2^3/3) + 2(n1^2 + n2^2)
///   per step = 4(n1^2 + n2^2) + 2nd + kScalarCouplingPerStep
/// Requires n1, n2 >= 1, steps >= 1, d >= 0.
CostReport predicted_splitting_cost(Index n1, Index n2, Index d, std::uint64_t steps,
                                    bool scalar_coupling);

/// True iff the split scheme's predicted per-step cost beats the monolithic
/// midpoint's AND the block/port shape satisfies the structural conditions
/// under which that comparison is meaningful: n1, n2 >= 2 and d <= n1 + n2.
bool splitting_cheaper(Index n1, Index n2, Index d);

/// Cost report from a trajectory integrated with live counting.  The metadata
/// labels (method, block dims, ports) are caller-supplied; the tallies come
/// from the trajectory's counter snapshot.  per_step_ops is the exact average
/// step-phase headline (the steppers' per-step work is constant, so the
/// average is exact); total_ops is the true measured grand headline.
/// Throws CountingDisabled when the trajectory carries no counter snapshot.
CostReport measured_cost(const Trajectory& traj, const std::string& method = "measured",
                         Index n1 = 0, Index n2 = 0, Index d = 0);

}  // namespace phsplit
