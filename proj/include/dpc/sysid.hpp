#pragma once

#include <vector>

#include "dpc/model.hpp"
#include "dpc/plant.hpp"

namespace dpc {

// N-step system identification: the dataset is cut into contiguous
// non-overlapping windows of N transitions, each window starts from the
// recorded state, and the loss averages squared prediction error over the
// observed component (or all components when observed = -1).
struct SysIdConfig {
  int horizon = 8;
  int epochs = 30000;
  int patience = 3000;  // epochs without validation improvement before stopping
  int observed = 3;    // state index; -1 trains on the full state
  uint64_t seed = 1;
  OptimConfig optim{OptAlgo::kAdamW, 1e-3, 0.9, 0.999, 1e-8, 1e-2};
};

struct TrainPoint {
  int epoch;
  double train_loss;
  double val_loss;
};

struct SysIdResult {
  Model model;  // best-validation snapshot
  std::vector<TrainPoint> curve;
  double best_val = 0.0;
  int best_epoch = -1;
  int stopped_epoch = -1;
};

double nstep_mse(const Model& m, const Dataset& ds, Dataset::Split split, int horizon,
                 int observed);

// Single rollout from the split's first recorded state under the recorded
// inputs and disturbances; mean squared error against the recorded states.
double open_loop_mse(const Model& m, const Dataset& ds, Dataset::Split split, int observed);

SysIdResult train_sysid(Model init, const Dataset& ds, const SysIdConfig& cfg);

}  // namespace dpc
