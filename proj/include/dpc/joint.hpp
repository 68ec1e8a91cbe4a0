#pragma once

#include <string>
#include <vector>

#include "dpc/policy.hpp"

namespace dpc {

struct JointWeights {
  LossWeights control{};
  double q_id = 1e2;  // observed-component deviation of the ID branch
  double q_dx = 1e0;  // full-state smoothing of the ID branch
};

// Simultaneous model and policy learning. Each epoch runs the control branch
// on a sampled batch and the ID branch on the recorded transitions at the
// same dataset rows, on one tape, so a single backward pass updates the
// shared model from both losses.
struct JointConfig {
  int epochs = 40000;
  Eigen::Index batch = 2016;
  int horizon = 1;
  int observed = 3;
  uint64_t seed = 1;
  int val_every = 10;
  JointWeights weights{};
  OptimConfig optim{OptAlgo::kAdam, 1e-3, 0.9, 0.999, 1e-8, 0.0};
  bool detach_id = false;    // drop the ID branch from the graph entirely
  bool freeze_model = false;  // keep model parameters out of the optimizer
};

struct JointPoint {
  int epoch;
  double loss;
  double val;  // NaN between validation epochs
};

struct JointResult {
  Model model;
  Policy policy;
  std::vector<JointPoint> curve;
  double best_val = 0.0;
  int best_epoch = -1;
};

// Tape-free value of the ID terms over given transition columns.
double id_objective(const Model& m, const Matrix& x, const Matrix& u, const Matrix& d,
                    const Matrix& x_next, Eigen::Index observed, const JointWeights& w);

JointResult train_joint(Model init_model, Policy init_policy, const Dataset& ds,
                        const JointConfig& cfg);

// Online adaptation: at each closed-loop step, a few gradient updates on the
// joint objective evaluated at the current measurement, touching only the
// policy's output layer and a learnable state-correction offset. Everything
// else stays frozen.
struct AdaptConfig {
  int steps = 10;
  int observed = 3;
  JointWeights weights{};
  OptimConfig optim{OptAlgo::kAdam, 1e-4, 0.9, 0.999, 1e-8, 0.0};
};

struct AdaptTuple {
  Vector x_prev, u_prev, d_prev;  // measured transition feeding the ID branch
  Vector x_meas;                  // current measured state
  Vector d;                       // current disturbance
  double r = 0.0;
  Vector xlo, xhi;  // per-state bounds (sentinel where unbounded)
  Vector ulo, uhi;  // per-input bounds
};

class OnlineAdaptState {
 public:
  OnlineAdaptState(Eigen::Index nx, const AdaptConfig& cfg);

  // Runs cfg.steps gradient updates on (policy.W2, policy.b2, xhat); asserts
  // the frozen/trainable partition and leaves frozen parameters untouched.
  void adapt(Policy& policy, const Model& model, const AdaptTuple& tuple);

  // Corrected state the control branch sees.
  Vector corrected(const Vector& x_meas) const;

  const Matrix& xhat() const { return xhat_; }
  void reset();

  void save(const std::string& path) const;
  static OnlineAdaptState load(const std::string& path, const AdaptConfig& cfg);

 private:
  AdaptConfig cfg_;
  Matrix xhat_;  // nx x 1
};

}  // namespace dpc
