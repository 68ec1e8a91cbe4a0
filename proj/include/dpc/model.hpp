#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dpc/matrix.hpp"
#include "dpc/optim.hpp"
#include "dpc/rng.hpp"
#include "dpc/tape.hpp"

namespace dpc {

// State-transition cells x+ = f(x, u, d). All cells consume and produce
// column batches: x is nx x B, u is nu x B, d is nd x B.
enum class ModelKind { kLin, kRnn, kGru, kSsm };

const char* kind_name(ModelKind kind);
ModelKind kind_from_name(const std::string& name);

// x+ = A x + B u + E d
struct LinParams {
  Matrix A, B, E;
};

// x+ = relu(A x + B u + E d)
struct RnnParams {
  Matrix A, B, E;
};

// Bias-free gated cell:
//   w  = sigmoid(A1 x + B1 u + E1 d)
//   n  = tanh(w .* (A2 x) + B2 u + E2 d)
//   z  = sigmoid(A3 x + B3 u + E3 d)
//   x+ = (1 - z) .* n + z .* x
struct GruParams {
  Matrix A1, B1, E1, A2, B2, E2, A3, B3, E3;
};

// Structured cell with a guaranteed spectral-radius bracket. The transition
// matrix is materialized from unconstrained parameters as
//   M = 1 - eps * sigmoid(M_raw),  A = softmax_rows(A_raw) .* M
// which keeps A entrywise positive with row sums in [1 - eps, 1], so the
// dominant eigenvalue lies in [1 - eps, 1].
struct SsmParams {
  Matrix A_raw, M_raw, B, E;
  double eps = 0.05;
  bool allow_nondissipative = false;  // escape hatch: permits eps in (-1, 0)
};

struct Model {
  ModelKind kind = ModelKind::kLin;
  Eigen::Index nx = 0, nu = 0, nd = 0;
  std::variant<LinParams, RnnParams, GruParams, SsmParams> params{LinParams{}};
};

// Seeded initialization. State matrices draw from U(-1,1) (scaled by
// 1/sqrt(nx) for the unconstrained cells), input maps from U(-0.1,0.1)
// scaled by 1/sqrt(fan-in). The structured cell starts diagonally dominant
// (A_raw + 2I) and lightly damped (M_raw near -3), so its initial row sums
// sit close to 1.
Model make_model(ModelKind kind, Eigen::Index nx, Eigen::Index nu, Eigen::Index nd,
                 Rng& rng, double eps = 0.05);

// Stable-order named views over the trainable matrices.
std::vector<ParamRef> param_refs(Model& m);

// Read-only counterpart, aligned with param_refs.
std::vector<std::pair<std::string, const Matrix*>> param_views(const Model& m);

Matrix materialize_ssm_A(const SsmParams& p);

// Transition matrix for spectral analysis: LIN/RNN weight, materialized SSM.
// GRU has no single transition matrix and is rejected.
Matrix effective_A(const Model& m);

// Plain (tape-free) forward step over a column batch.
Matrix eval_step(const Model& m, const Matrix& x, const Matrix& u, const Matrix& d);

// Tape-side binding: one leaf per parameter matrix, SSM transition
// materialized once per tape so every step shares it.
struct BoundModel {
  ModelKind kind;
  Eigen::Index nx, nu, nd;
  std::vector<ad::Var> vars;  // aligned with param_refs order
  ad::Var ssm_A{};            // SSM only
};

BoundModel bind_model(ad::Tape& tape, const Model& m);
ad::Var model_step(ad::Tape& tape, const BoundModel& bm, ad::Var x, ad::Var u, ad::Var d);

// Gradients read off a bound model after backward, aligned with param_refs.
std::vector<Matrix> model_grads(const BoundModel& bm);

// Versioned JSON round-trip at full precision.
void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

}  // namespace dpc
