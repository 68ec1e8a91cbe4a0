#pragma once

#include <string>
#include <vector>

#include "dpc/matrix.hpp"

namespace dpc {

enum class OptAlgo { kAdam, kAdamW };

struct OptimConfig {
  OptAlgo algo = OptAlgo::kAdam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;  // decoupled; applied only by AdamW
};

// Named view of a parameter matrix owned elsewhere (a model or policy).
struct ParamRef {
  std::string name;
  Matrix* value;
};

// Adam / AdamW with bias-corrected moments. The parameter list must keep the
// same order and shapes across steps; moment buffers are keyed by position.
class Optimizer {
 public:
  explicit Optimizer(OptimConfig cfg) : cfg_(cfg) {}

  void step(const std::vector<ParamRef>& params, const std::vector<Matrix>& grads);

  int64_t steps() const { return t_; }
  const OptimConfig& config() const { return cfg_; }

 private:
  OptimConfig cfg_;
  int64_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace dpc
