#include "phsplit/costmodel.hpp"

#include <cstdio>

namespace phsplit {

namespace {

std::uint64_t u64(Index v) { return static_cast<std::uint64_t>(v); }

std::uint64_t lu_setup_model(std::uint64_t n) { return 2 * n * n * n / 3 + 2 * n * n; }

std::uint64_t midpoint_per_step_model(std::uint64_t n, std::uint64_t d) {
  return 4 * n * n + 2 * n * d;
}

void check_counts(Index n_min_one, Index d, std::uint64_t steps, const char* what) {
  if (n_min_one < 1 || d < 0 || steps < 1) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s: need dims >= 1, ports >= 0, steps >= 1", what);
    throw ConfigError(buf);
  }
}

}  // namespace

std::string cost_csv_header() {
  return "method,n1,n2,d,steps,setup_ops,per_step_ops,total_ops";
}

std::string to_csv_row(const CostReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%lld,%lld,%lld,%llu,%llu,%llu,%llu", r.method.c_str(),
                static_cast<long long>(r.n1), static_cast<long long>(r.n2),
                static_cast<long long>(r.d), static_cast<unsigned long long>(r.steps),
                static_cast<unsigned long long>(r.setup_ops),
                static_cast<unsigned long long>(r.per_step_ops),
                static_cast<unsigned long long>(r.total_ops));
  return buf;
}

CostReport predicted_midpoint_cost(Index n, Index d, std::uint64_t steps) {
  check_counts(n, d, steps, "predicted_midpoint_cost");
  CostReport r;
  r.method = "midpoint";
  r.n = n;
  r.n1 = n;
  r.n2 = 0;
  r.d = d;
  r.steps = steps;
  r.setup_ops = lu_setup_model(u64(n));
  r.per_step_ops = midpoint_per_step_model(u64(n), u64(d));
  r.total_ops = r.setup_ops + r.steps * r.per_step_ops;
  return r;
}

CostReport predicted_splitting_cost(Index n1, Index n2, Index d, std::uint64_t steps,
                                    bool scalar_coupling) {
  check_counts(std::min(n1, n2), d, steps, "predicted_splitting_cost");
  if (!scalar_coupling) {
    throw ScalarCouplingRequired(
        "predicted_splitting_cost: model assumes a closed-form scalar coupling flow; a "
        "general coupling flow needs its own factorization and is not covered");
  }
  CostReport r;
  r.method = "splitting";
  r.n = n1 + n2;
  r.n1 = n1;
  r.n2 = n2;
  r.d = d;
  r.steps = steps;
  r.setup_ops = lu_setup_model(u64(n1)) + lu_setup_model(u64(n2));
  r.per_step_ops = 4 * (u64(n1) * u64(n1) + u64(n2) * u64(n2)) +
                   2 * u64(n1 + n2) * u64(d) + kScalarCouplingPerStep;
  r.total_ops = r.setup_ops + r.steps * r.per_step_ops;
  return r;
}

bool splitting_cheaper(Index n1, Index n2, Index d) {
  if (n1 < 2 || n2 < 2 || d > n1 + n2) {
    return false;
  }
  const CostReport split = predicted_splitting_cost(n1, n2, d, 1, true);
  const CostReport mono = predicted_midpoint_cost(n1 + n2, d, 1);
  return split.per_step_ops < mono.per_step_ops;
}

CostReport measured_cost(const Trajectory& traj, const std::string& method, Index n1,
                         Index n2, Index d) {
  if (!traj.has_ops) {
    throw CountingDisabled("measured_cost: trajectory was integrated without a counter");
  }
  CostReport r;
  r.method = method;
  r.n1 = n1;
  r.n2 = n2;
  r.n = n1 + n2;
  r.d = d;
  r.steps = static_cast<std::uint64_t>(traj.steps);
  r.setup_ops = traj.ops.setup().headline();
  const std::uint64_t step_total = traj.ops.step().headline();
  r.per_step_ops = r.steps > 0 ? step_total / r.steps : 0;
  r.total_ops = r.setup_ops + step_total;
  return r;
}

}  // namespace phsplit
