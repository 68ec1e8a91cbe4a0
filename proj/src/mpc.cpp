#include "dpc/mpc.hpp"

#include <cmath>
#include <vector>

#include "dpc/errors.hpp"

namespace dpc {
namespace {

constexpr double kNoBound = 1e8;

}  // namespace

MpcStep nominal_mpc_step(const Matrix& A, const Matrix& B, const Matrix& E,
                         Eigen::Index observed, const Vector& x0, const Matrix& d_seq,
                         const Vector& r_seq, const Vector& xlo_seq, const Vector& xhi_seq,
                         const Matrix& ulo_seq, const Matrix& uhi_seq, const MpcConfig& cfg) {
  Eigen::Index n = A.rows();
  Eigen::Index nu = B.cols();
  int N = cfg.horizon;
  if (N < 1) {
    throw ConfigError(msg("horizon must be >= 1, got ", N));
  }
  if (cfg.weights.q_sx <= 0 || cfg.weights.q_su <= 0) {
    throw ConfigError("slack weights must be positive for the soft-constrained program");
  }
  if (observed < 0 || observed >= n) {
    throw ConfigError(msg("observed index ", observed, " out of range for ", n, " states"));
  }
  if (A.cols() != n || B.rows() != n || E.rows() != n || x0.size() != n) {
    throw ShapeError("system matrices and state disagree on the state dimension");
  }
  if (d_seq.rows() != N || d_seq.cols() != E.cols() || r_seq.size() != N ||
      xlo_seq.size() != N || xhi_seq.size() != N || ulo_seq.rows() != N ||
      ulo_seq.cols() != nu || uhi_seq.rows() != N || uhi_seq.cols() != nu) {
    throw ShapeError("forecast sequences do not match the horizon");
  }

  // Observed-component prediction: x_obs(k+1) = base(k) + sum_j gain(k,j) u_j.
  std::vector<Matrix> apow(static_cast<size_t>(N) + 1);
  apow[0] = Matrix::Identity(n, n);
  for (int j = 1; j <= N; ++j) {
    apow[static_cast<size_t>(j)] = apow[static_cast<size_t>(j - 1)] * A;
  }
  Vector base(N);
  Matrix gamma = Matrix::Zero(N, N * nu);
  {
    Vector free_state = x0;
    for (int k = 0; k < N; ++k) {
      free_state = A * free_state + E * d_seq.row(k).transpose();
      base(k) = free_state(observed);
      for (int j = 0; j <= k; ++j) {
        gamma.block(k, j * nu, 1, nu) =
            apow[static_cast<size_t>(k - j)].row(observed) * B;
      }
    }
  }

  Eigen::Index n_u = static_cast<Eigen::Index>(N) * nu;
  Eigen::Index n_sx = N;
  Eigen::Index n_su = n_u;
  Eigen::Index nz = n_u + n_sx + n_su;

  QpProblem qp;
  qp.H = Matrix::Zero(nz, nz);
  qp.f = Vector::Zero(nz);
  qp.H.topLeftCorner(n_u, n_u) =
      2.0 * (cfg.weights.q_ref * (gamma.transpose() * gamma).eval() +
             cfg.weights.q_input * Matrix::Identity(n_u, n_u));
  qp.H.block(n_u, n_u, n_sx, n_sx) = 2.0 * cfg.weights.q_sx * Matrix::Identity(n_sx, n_sx);
  qp.H.bottomRightCorner(n_su, n_su) = 2.0 * cfg.weights.q_su * Matrix::Identity(n_su, n_su);
  qp.f.head(n_u) = -2.0 * cfg.weights.q_ref * (gamma.transpose() * (r_seq - base));

  std::vector<Vector> rows;
  std::vector<double> rhs;
  auto add_row = [&](const Vector& row, double b) {
    rows.push_back(row);
    rhs.push_back(b);
  };
  for (int k = 0; k < N; ++k) {
    Eigen::Index sx_at = n_u + k;
    if (std::abs(xlo_seq(k)) < kNoBound) {
      Vector row = Vector::Zero(nz);
      row.head(n_u) = -gamma.row(k).transpose();
      row(sx_at) = -1.0;
      add_row(row, base(k) - xlo_seq(k));
    }
    if (std::abs(xhi_seq(k)) < kNoBound) {
      Vector row = Vector::Zero(nz);
      row.head(n_u) = gamma.row(k).transpose();
      row(sx_at) = -1.0;
      add_row(row, xhi_seq(k) - base(k));
    }
    Vector sx_pos = Vector::Zero(nz);
    sx_pos(sx_at) = -1.0;
    add_row(sx_pos, 0.0);
    for (Eigen::Index c = 0; c < nu; ++c) {
      Eigen::Index u_at = static_cast<Eigen::Index>(k) * nu + c;
      Eigen::Index su_at = n_u + n_sx + u_at;
      if (uhi_seq(k, c) < kNoBound) {
        Vector row = Vector::Zero(nz);
        row(u_at) = 1.0;
        row(su_at) = -1.0;
        add_row(row, uhi_seq(k, c));
      }
      if (ulo_seq(k, c) > -kNoBound) {
        Vector row = Vector::Zero(nz);
        row(u_at) = -1.0;
        row(su_at) = -1.0;
        add_row(row, -ulo_seq(k, c));
      }
      Vector su_pos = Vector::Zero(nz);
      su_pos(su_at) = -1.0;
      add_row(su_pos, 0.0);
    }
  }
  qp.G.resize(static_cast<Eigen::Index>(rows.size()), nz);
  qp.h.resize(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    qp.G.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    qp.h(static_cast<Eigen::Index>(i)) = rhs[i];
  }
  qp.Aeq.resize(0, nz);
  qp.beq.resize(0);

  QpResult sol = qp_solve(qp, cfg.tol, cfg.cap);

  MpcStep step;
  step.u_seq = sol.z.head(n_u);
  step.u0 = step.u_seq.head(nu);
  step.status = sol.status;
  step.iterations = sol.iterations;
  step.primal_residual = sol.primal_residual;
  step.dual_residual = sol.dual_residual;
  Vector err = r_seq - base - gamma * step.u_seq;
  Vector sx = sol.z.segment(n_u, n_sx);
  Vector su = sol.z.tail(n_su);
  step.objective = cfg.weights.q_ref * err.squaredNorm() +
                   cfg.weights.q_input * step.u_seq.squaredNorm() +
                   cfg.weights.q_sx * sx.squaredNorm() + cfg.weights.q_su * su.squaredNorm();
  return step;
}

}  // namespace dpc
