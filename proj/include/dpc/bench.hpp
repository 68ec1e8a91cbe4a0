#pragma once

#include <limits>
#include <string>
#include <vector>

#include "dpc/mpc.hpp"
#include "dpc/plant.hpp"
#include "dpc/policy.hpp"

namespace dpc {

struct TimingRecord {
  std::string controller;
  int horizon = 0;
  Eigen::Index samples = 0;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double max_ms = 0.0;
  double qp_iterations = std::numeric_limits<double>::quiet_NaN();
  double qp_primal_residual = std::numeric_limits<double>::quiet_NaN();
  double qp_dual_residual = std::numeric_limits<double>::quiet_NaN();
};

struct BenchConfig {
  std::vector<int> horizons = {1, 2, 4, 6, 8};
  Eigen::Index evals = 2016;
  Eigen::Index hidden_per_step = 10;
  uint64_t seed = 1;
  MpcConfig mpc{};
};

// Per-step deployment cost of the explicit policy (feature assembly plus
// forward pass, hidden width 10N) against the receding-horizon QP at the
// same horizon, over dataset-driven instances. Wall time from a monotonic
// clock, batch-amortized when single calls sit near clock resolution; IO is
// asserted absent from measured sections.
std::vector<TimingRecord> run_bench(const Plant& plant, const Dataset& ds,
                                    const BenchConfig& cfg);

// Least-squares slope of log(mean time) against log(horizon).
double growth_exponent(const std::vector<TimingRecord>& records,
                       const std::string& controller);

}  // namespace dpc
