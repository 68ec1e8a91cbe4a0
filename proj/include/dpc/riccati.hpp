#pragma once

#include "dpc/matrix.hpp"
#include "dpc/plant.hpp"

namespace dpc {

// Fixed-point iteration on the discrete algebraic Riccati equation
//   P = A'PA - A'PB (R + B'PB)^-1 B'PA + Q
// run until the update falls below tol in the max norm.
Matrix dare_solve(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                  double tol = 1e-12, int cap = 100000);

struct LqrGain {
  Matrix K;  // nu x nx
  Matrix P;
  Matrix Q, R;
};

LqrGain lqr_design(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R);

// Steady-state target for a constant disturbance and reference:
//   [A - I  B] [x_ss]   [-E d]
//   [C      0] [u_ss] = [ r  ]
// with C selecting the observed component.
struct SteadyState {
  Vector x;
  Vector u;
};

SteadyState steady_state_target(const Matrix& A, const Matrix& B, const Matrix& E,
                                Eigen::Index observed, const Vector& d, double r);

// u = u_ss - K (x - x_ss), saturated by the caller.
Vector lqr_control(const LqrGain& g, const Matrix& A, const Matrix& B, const Matrix& E,
                   Eigen::Index observed, const Vector& x, const Vector& d, double r);

// Integral-augmented regulator over [x; q], q+ = q + (r - x_obs). The gain is
// designed on the augmented pair; closed-loop integral action removes
// steady-state offset for constant references.
struct LqiGain {
  Matrix Kx;  // nu x nx
  Matrix Kq;  // nu x 1
  Matrix P;   // augmented Riccati solution
};

LqiGain lqi_design(const Matrix& A, const Matrix& B, Eigen::Index observed, const Matrix& Qx,
                   double q_integral, const Matrix& R);

struct LqiState {
  double q = 0.0;
};

// u = -Kx x - Kq q, then the integrator advances with the realized error.
Vector lqi_control(const LqiGain& g, LqiState& state, const Vector& x, Eigen::Index observed,
                   double r);

}  // namespace dpc
