#pragma once

#include "dpc/policy.hpp"
#include "dpc/qp.hpp"

namespace dpc {

// Receding-horizon tracking controller on known linear dynamics. Each step
// builds a dense single-shooting QP over stacked inputs and soft-constraint
// slacks with the same stage weights as the learned policy, solves it, and
// applies the first move.
struct MpcConfig {
  LossWeights weights{};
  int horizon = 1;
  double tol = 1e-8;
  int cap = 200000;
};

struct MpcStep {
  Vector u0;
  Vector u_seq;  // horizon * nu stacked inputs
  double objective = 0.0;
  QpStatus status = QpStatus::kSolved;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

// d_seq is horizon x nd (d_k per planned step); r_seq, xlo_seq, xhi_seq hold
// the reference and observed-state bounds for x_{k+1}; ulo_seq, uhi_seq are
// horizon x nu input bounds. Bounds with magnitude >= 1e8 are treated as
// absent.
MpcStep nominal_mpc_step(const Matrix& A, const Matrix& B, const Matrix& E,
                         Eigen::Index observed, const Vector& x0, const Matrix& d_seq,
                         const Vector& r_seq, const Vector& xlo_seq, const Vector& xhi_seq,
                         const Matrix& ulo_seq, const Matrix& uhi_seq, const MpcConfig& cfg);

}  // namespace dpc
