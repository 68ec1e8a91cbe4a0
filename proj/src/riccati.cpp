#include "dpc/riccati.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "dpc/eig.hpp"
#include "dpc/errors.hpp"

namespace dpc {
namespace {

void check_symmetric_psd(const Matrix& Q, const char* name) {
  if (Q.rows() != Q.cols()) {
    throw ShapeError(msg(name, " must be square, got ", shape_str(Q)));
  }
  double scale = 1.0 + Q.cwiseAbs().maxCoeff();
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ConfigError(msg(name, " must be symmetric"));
  }
}

}  // namespace

Matrix dare_solve(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                  double tol, int cap) {
  if (A.rows() != A.cols()) {
    throw ShapeError(msg("A must be square, got ", shape_str(A)));
  }
  if (B.rows() != A.rows()) {
    throw ShapeError(msg("B has ", B.rows(), " rows, A has ", A.rows()));
  }
  check_symmetric_psd(Q, "Q");
  check_symmetric_psd(R, "R");
  if (Q.rows() != A.rows() || R.rows() != B.cols()) {
    throw ShapeError("Riccati weight dimensions do not match the system");
  }
  require_finite(A, "A");
  require_finite(B, "B");

  Matrix P = Q;
  for (int it = 0; it < cap; ++it) {
    Matrix BtP = B.transpose() * P;
    Matrix G = R + BtP * B;
    Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(G)};
    if (llt.info() != Eigen::Success) {
      throw NumericError("R + B'PB is not positive definite");
    }
    Matrix BtPA = BtP * A;
    Matrix Pn = A.transpose() * P * A -
                BtPA.transpose() * Matrix(llt.solve(Eigen::MatrixXd(BtPA))) + Q;
    Pn = 0.5 * (Pn + Pn.transpose()).eval();
    double diff = (Pn - P).cwiseAbs().maxCoeff();
    P = Pn;
    if (diff < tol) {
      return P;
    }
  }
  throw NumericError(msg("Riccati fixed point did not reach ", tol, " within ", cap,
                         " iterations"));
}

LqrGain lqr_design(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
  LqrGain g;
  g.Q = Q;
  g.R = R;
  g.P = dare_solve(A, B, Q, R);
  Matrix G = R + B.transpose() * g.P * B;
  Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(G)};
  if (llt.info() != Eigen::Success) {
    throw NumericError("R + B'PB is not positive definite");
  }
  g.K = Matrix(llt.solve(Eigen::MatrixXd(B.transpose() * g.P * A)));
  double rho = spectral_radius(A - B * g.K);
  if (rho >= 1.0) {
    throw NumericError(msg("closed loop is not contractive, spectral radius ", rho));
  }
  return g;
}

SteadyState steady_state_target(const Matrix& A, const Matrix& B, const Matrix& E,
                                Eigen::Index observed, const Vector& d, double r) {
  Eigen::Index n = A.rows();
  Eigen::Index m = B.cols();
  if (observed < 0 || observed >= n) {
    throw ConfigError(msg("observed index ", observed, " out of range for ", n, " states"));
  }
  Matrix M = Matrix::Zero(n + 1, n + m);
  M.topLeftCorner(n, n) = A - Matrix::Identity(n, n);
  M.block(0, n, n, m) = B;
  M(n, observed) = 1.0;
  Vector rhs(n + 1);
  rhs.head(n) = -(E * d);
  rhs(n) = r;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod((Eigen::MatrixXd(M)));
  if (cod.rank() < n + 1) {
    throw NumericError("steady-state system is rank deficient");
  }
  Vector zu = cod.solve(rhs);
  SteadyState ss;
  ss.x = zu.head(n);
  ss.u = zu.tail(m);
  return ss;
}

Vector lqr_control(const LqrGain& g, const Matrix& A, const Matrix& B, const Matrix& E,
                   Eigen::Index observed, const Vector& x, const Vector& d, double r) {
  SteadyState ss = steady_state_target(A, B, E, observed, d, r);
  return ss.u - g.K * (x - ss.x);
}

LqiGain lqi_design(const Matrix& A, const Matrix& B, Eigen::Index observed, const Matrix& Qx,
                   double q_integral, const Matrix& R) {
  Eigen::Index n = A.rows();
  Eigen::Index m = B.cols();
  if (observed < 0 || observed >= n) {
    throw ConfigError(msg("observed index ", observed, " out of range for ", n, " states"));
  }
  if (q_integral <= 0) {
    throw ConfigError(msg("integral weight must be positive, got ", q_integral));
  }
  Matrix Aa = Matrix::Zero(n + 1, n + 1);
  Aa.topLeftCorner(n, n) = A;
  Aa(n, observed) = -1.0;
  Aa(n, n) = 1.0;
  Matrix Ba = Matrix::Zero(n + 1, m);
  Ba.topRows(n) = B;
  Matrix Qa = Matrix::Zero(n + 1, n + 1);
  Qa.topLeftCorner(n, n) = Qx;
  Qa(n, n) = q_integral;
  LqrGain aug = lqr_design(Aa, Ba, Qa, R);
  LqiGain g;
  g.Kx = aug.K.leftCols(n);
  g.Kq = aug.K.rightCols(1);
  g.P = aug.P;
  return g;
}

Vector lqi_control(const LqiGain& g, LqiState& state, const Vector& x, Eigen::Index observed,
                   double r) {
  Vector u = -(g.Kx * x) - g.Kq.col(0) * state.q;
  state.q += r - x(observed);
  return u;
}

}  // namespace dpc
