#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dpc/model.hpp"
#include "dpc/plant.hpp"

namespace dpc {

// Feedback policy u = W2 relu(W1 f + b1) + b2 over the scaled feature stack
//   f = [x; d; r; xlo; xhi; ulo; uhi] ./ in_scale
// with per-state box bounds squashed to +-kBoundSentinel where no bound
// applies. Bound features are clamped before scaling so the sentinels do not
// dominate the input range.
struct Policy {
  Eigen::Index nx = 0, nd = 0, nu = 0;
  Matrix W1, b1, W2, b2;
  Vector in_scale;
};

inline constexpr double kBoundSentinel = 1e9;

Eigen::Index policy_in_dim(Eigen::Index nx, Eigen::Index nd, Eigen::Index nu);

// Magnitude scales observed on the training split: temperatures and their
// bounds by max |x|, disturbances by per-channel max |d|, the reference and
// reference bounds by max |x|, input bounds by max |u| bound.
Vector default_in_scale(const Dataset& ds, Eigen::Index nx, Eigen::Index nd, Eigen::Index nu);

Policy make_policy(Eigen::Index nx, Eigen::Index nd, Eigen::Index nu, Eigen::Index hidden,
                   Rng& rng, Vector in_scale);

std::vector<ParamRef> param_refs(Policy& p);

// Per-sample box bounds as column batches; rows without a bound carry the
// squashed sentinel. `rows` records which dataset row supplied each column's
// disturbance and bounds (joint training reads the matching transition).
struct ControlBatch {
  Matrix x;          // nx x B
  Matrix d;          // nd x B
  Matrix r;          // 1 x B
  Matrix xlo, xhi;   // nx x B
  Matrix ulo, uhi;   // nu x B
  std::vector<Eigen::Index> rows;

  Eigen::Index cols() const { return x.cols(); }
};

// relu(lo - x) + relu(x - hi): zero exactly when lo <= x <= hi elementwise.
Matrix slack(const Matrix& x, const Matrix& lo, const Matrix& hi);

struct LossWeights {
  double q_ref = 2e1;
  double q_input = 1e-6;
  double q_sx = 5e1;
  double q_su = 5e-7;
};

// Random control tuples for policy training: states uniform over the thermal
// envelope, references uniform over the tracking band, disturbances and
// bounds drawn from uniformly sampled rows of the split.
ControlBatch sample_control_batch(const Dataset& ds, Dataset::Split split, Eigen::Index count,
                                  Eigen::Index nx, Rng& rng);

// Plain feature assembly (clamp bounds, stack, scale). Deployment and
// training share this path.
Matrix assemble_features(const Policy& p, const ControlBatch& batch);

// Plain forward pass over a column batch.
Matrix policy_eval(const Policy& p, const ControlBatch& batch);

// Plain single control step over a column batch: action, successor under the
// model, and both slack stacks.
struct StepEval {
  Matrix u, x_next, sx, su;
};

StepEval eval_control_step(const Policy& p, const Model& m, const ControlBatch& batch);

// Tape-free value of the control stage objective; matches control_loss.
double control_objective(const Policy& p, const Model& m, const ControlBatch& batch,
                         Eigen::Index observed, const LossWeights& w, int horizon);

struct BoundPolicy {
  ad::Var W1, b1, W2, b2;
};

BoundPolicy bind_policy(ad::Tape& tape, const Policy& p);

// Forward pass on tape from an assembled feature node.
ad::Var policy_forward(ad::Tape& tape, const BoundPolicy& bp, ad::Var features);

// Feature node for a batch whose state lives on the tape (rollouts past the
// first step, online state correction); the remaining rows enter as one leaf.
ad::Var features_on_tape(ad::Tape& tape, const Policy& p, ad::Var x, const ControlBatch& batch);

// One recorded policy-in-the-loop step: action, successor state, slacks, and
// the weighted stage loss (averaged over the batch).
struct ControlGraph {
  ad::Var u;
  ad::Var x_next;
  ad::Var stage_loss;
};

// Builds the stage graph on the tape. When x_var is given it is used as the
// batch state (its values must match batch.x layout); otherwise batch.x
// enters as a leaf. Rolls `horizon` steps, repeating the batch's reference,
// disturbance, and bounds at every step, and sums stage losses.
ad::Var control_loss(ad::Tape& tape, const BoundPolicy& bp, const Policy& p,
                     const BoundModel& bm, const ControlBatch& batch, Eigen::Index observed,
                     const LossWeights& w, int horizon,
                     std::optional<ad::Var> x_var = std::nullopt,
                     ControlGraph* first_step = nullptr);

struct PolicyTrainConfig {
  int epochs = 30000;
  Eigen::Index batch = 2016;
  int horizon = 1;
  Eigen::Index hidden_per_step = 10;
  uint64_t seed = 1;
  LossWeights weights{};
  OptimConfig optim{OptAlgo::kAdam, 1e-3, 0.9, 0.999, 1e-8, 0.0};
};

struct TrainValue {
  int epoch;
  double loss;
};

struct PolicyTrainResult {
  Policy policy;
  std::vector<TrainValue> curve;
};

PolicyTrainResult train_policy(Policy init, const Model& model, const Dataset& ds,
                               const PolicyTrainConfig& cfg, Eigen::Index observed);

void save_policy(const Policy& p, const std::string& path);
Policy load_policy(const std::string& path);

}  // namespace dpc
