#pragma once

#include "dpc/matrix.hpp"

namespace dpc {

// Convex quadratic program
//   min  1/2 z'Hz + f'z
//   s.t. G z <= h,  Aeq z = beq
// with H symmetric positive semidefinite. G and Aeq may have zero rows.
struct QpProblem {
  Matrix H;
  Vector f;
  Matrix G;
  Vector h;
  Matrix Aeq;
  Vector beq;
};

enum class QpStatus { kSolved, kMaxIter };

const char* qp_status_name(QpStatus s);

struct QpResult {
  Vector z;
  Vector lambda;  // inequality multipliers, >= 0 at optimum
  Vector nu;      // equality multipliers
  QpStatus status = QpStatus::kSolved;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

// Operator-splitting solver with over-relaxation, adaptive penalty, and a
// terminal active-set polish that refines the iterate to KKT precision.
QpResult qp_solve(const QpProblem& p, double tol = 1e-8, int cap = 200000);

}  // namespace dpc
