#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dpc/joint.hpp"
#include "dpc/mpc.hpp"
#include "dpc/plant.hpp"
#include "dpc/policy.hpp"
#include "dpc/riccati.hpp"

namespace dpc {

// Closed-loop evaluation over the test week. Every controller sees the same
// measured state, current disturbance, next-step reference, and bounds; the
// applied input is saturated to the actuator range before it reaches the
// plant.
struct StepCtx {
  Eigen::Index t = 0;  // dataset row of the current state
  Vector x;
  Vector d;
  double r = 0.0;               // reference for the successor state
  double xlo = 0.0, xhi = 0.0;  // observed-state bounds for the successor
  Vector ulo, uhi;
};

using ControlFn = std::function<Vector(const StepCtx&)>;

// Optional model prediction alongside the loop; `corrected` supplies the
// state the predictor starts from (identity when nothing adapts).
struct Predictor {
  const Model* model = nullptr;
  std::function<Vector(const Vector&)> corrected;
};

// A run's controller and predictor are built together so adaptive runs can
// share mutable state between them; the factory runs once per seeded run,
// keeping integrators and adaptation state from leaking across runs.
struct RunSetup {
  ControlFn control;
  Predictor predictor;
};

using RunFactory = std::function<RunSetup()>;

struct RunMetrics {
  double mse_ref = 0.0;
  double ma_ene = 0.0;
  double ma_con = 0.0;
  double mse_mod = 0.0;  // NaN when no model predicts alongside
  double ma_gap = 0.0;   // mean |predicted - measured| on the observed state
};

struct SimConfig {
  std::string uncertainty = "none";
  int runs = 20;
  uint64_t seed = 1;
};

struct SimResult {
  std::vector<RunMetrics> runs;
  RunMetrics mean;
};

SimResult simulate(const Plant& plant, const Dataset& ds, const RunFactory& make_run,
                   const SimConfig& cfg);

// Factories for the toolkit's controller kinds. Referenced plants, datasets,
// and models must outlive the returned factory; policies and gains are
// copied.
RunFactory policy_runner(const Policy& policy, Eigen::Index observed,
                         const Model* predict_with = nullptr);
RunFactory adaptive_policy_runner(const Policy& policy, const Model& model,
                                  const AdaptConfig& cfg);
RunFactory lqr_runner(const Plant& plant, const LqrGain& gain);
RunFactory lqi_runner(const Plant& plant, const LqiGain& gain);
RunFactory mpc_runner(const Plant& plant, const Dataset& ds, const MpcConfig& cfg);
RunFactory zero_runner(Eigen::Index nu);

}  // namespace dpc
