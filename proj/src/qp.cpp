#include "dpc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include "dpc/errors.hpp"

namespace dpc {
namespace {

constexpr double kSigma = 1e-6;
constexpr double kAlpha = 1.6;
constexpr double kRhoEqScale = 1e3;
constexpr int kCheckEvery = 25;
constexpr int kAdaptEvery = 100;

struct Stacked {
  Matrix C;       // (m + me) x n
  Vector lo, hi;  // two-sided bounds; equality rows have lo == hi
  Eigen::Index m = 0, me = 0;
};

void validate(const QpProblem& p) {
  Eigen::Index n = p.H.rows();
  if (p.H.cols() != n || n < 1) {
    throw ShapeError(msg("H must be square, got ", shape_str(p.H)));
  }
  if (p.f.size() != n) {
    throw ShapeError(msg("f has ", p.f.size(), " entries, H is ", shape_str(p.H)));
  }
  double scale = 1.0 + p.H.cwiseAbs().maxCoeff();
  if ((p.H - p.H.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw ConfigError("H must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(p.H),
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericError("H eigenvalue check failed to converge");
  }
  if (es.eigenvalues().minCoeff() < -1e-9 * scale) {
    throw ConfigError(msg("H is not positive semidefinite, eigmin ",
                          es.eigenvalues().minCoeff()));
  }
  if (p.G.rows() > 0 && p.G.cols() != n) {
    throw ShapeError(msg("G has ", p.G.cols(), " columns, expected ", n));
  }
  if (p.h.size() != p.G.rows()) {
    throw ShapeError(msg("h has ", p.h.size(), " entries, G has ", p.G.rows(), " rows"));
  }
  if (p.Aeq.rows() > 0 && p.Aeq.cols() != n) {
    throw ShapeError(msg("Aeq has ", p.Aeq.cols(), " columns, expected ", n));
  }
  if (p.beq.size() != p.Aeq.rows()) {
    throw ShapeError(msg("beq has ", p.beq.size(), " entries, Aeq has ", p.Aeq.rows(),
                         " rows"));
  }
  require_finite(p.H, "H");
  require_finite(Matrix(p.f), "f");
  if (p.G.rows() > 0) require_finite(p.G, "G");
  if (p.Aeq.rows() > 0) {
    require_finite(p.Aeq, "Aeq");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr((Eigen::MatrixXd(p.Aeq)));
    Vector ls = qr.solve(p.beq);
    double res = (p.Aeq * ls - p.beq).cwiseAbs().maxCoeff();
    if (res > 1e-8 * (1.0 + p.beq.cwiseAbs().maxCoeff())) {
      throw ConfigError(msg("equality system is infeasible, residual ", res));
    }
  }
}

Stacked stack_constraints(const QpProblem& p) {
  Stacked s;
  s.m = p.G.rows();
  s.me = p.Aeq.rows();
  Eigen::Index total = s.m + s.me;
  s.C.resize(total, p.H.rows());
  s.lo.resize(total);
  s.hi.resize(total);
  if (s.m > 0) {
    s.C.topRows(s.m) = p.G;
    s.lo.head(s.m).setConstant(-std::numeric_limits<double>::infinity());
    s.hi.head(s.m) = p.h;
  }
  if (s.me > 0) {
    s.C.bottomRows(s.me) = p.Aeq;
    s.lo.tail(s.me) = p.beq;
    s.hi.tail(s.me) = p.beq;
  }
  return s;
}

struct Residuals {
  double primal;
  double dual;
};

Residuals kkt_residuals(const QpProblem& p, const Vector& z, const Vector& lambda,
                        const Vector& nu) {
  double rp = 0.0;
  if (p.G.rows() > 0) {
    rp = std::max(rp, ((p.G * z - p.h).cwiseMax(0.0)).maxCoeff());
  }
  if (p.Aeq.rows() > 0) {
    rp = std::max(rp, (p.Aeq * z - p.beq).cwiseAbs().maxCoeff());
  }
  Vector station = p.H * z + p.f;
  if (p.G.rows() > 0) {
    station += p.G.transpose() * lambda;
  }
  if (p.Aeq.rows() > 0) {
    station += p.Aeq.transpose() * nu;
  }
  return {rp, station.cwiseAbs().maxCoeff()};
}

// Equality-solve on the detected active set; accepted only when it passes a
// full KKT screen.
bool try_polish(const QpProblem& p, const Stacked& st, const Vector& s, const Vector& y,
                double tol, QpResult& out) {
  Eigen::Index n = p.H.rows();
  std::vector<Eigen::Index> active;
  std::vector<double> bound;
  std::vector<int> side;  // +1 upper, -1 lower, 0 equality
  for (Eigen::Index i = 0; i < st.C.rows(); ++i) {
    if (st.lo(i) == st.hi(i)) {
      active.push_back(i);
      bound.push_back(st.hi(i));
      side.push_back(0);
      continue;
    }
    double span = 1.0 + std::abs(st.hi(i));
    if (std::isfinite(st.hi(i)) && st.hi(i) - s(i) <= 1e-6 * span && y(i) > 1e-12) {
      active.push_back(i);
      bound.push_back(st.hi(i));
      side.push_back(1);
    } else if (std::isfinite(st.lo(i)) && s(i) - st.lo(i) <= 1e-6 * span && y(i) < -1e-12) {
      active.push_back(i);
      bound.push_back(st.lo(i));
      side.push_back(-1);
    }
  }
  Eigen::Index na = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + na, n + na);
  kkt.topLeftCorner(n, n) = p.H;
  for (Eigen::Index a = 0; a < na; ++a) {
    kkt.block(0, n + a, n, 1) = st.C.row(active[static_cast<size_t>(a)]).transpose();
    kkt.block(n + a, 0, 1, n) = st.C.row(active[static_cast<size_t>(a)]);
  }
  Eigen::VectorXd rhs(n + na);
  rhs.head(n) = -p.f;
  for (Eigen::Index a = 0; a < na; ++a) {
    rhs(n + a) = bound[static_cast<size_t>(a)];
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) {
    return false;
  }
  Eigen::VectorXd sol = lu.solve(rhs);
  Vector z = sol.head(n);
  Vector mult = sol.tail(na);

  Vector lambda = Vector::Zero(st.m);
  Vector nu = Vector::Zero(st.me);
  for (Eigen::Index a = 0; a < na; ++a) {
    Eigen::Index i = active[static_cast<size_t>(a)];
    if (side[static_cast<size_t>(a)] == 0) {
      nu(i - st.m) = mult(a);
    } else {
      if (side[static_cast<size_t>(a)] > 0 && mult(a) < -tol) {
        return false;
      }
      if (side[static_cast<size_t>(a)] < 0 && mult(a) > tol) {
        return false;
      }
      lambda(i) = mult(a);
    }
  }
  if ((lambda.array() < -tol).any()) {
    return false;
  }
  lambda = lambda.cwiseMax(0.0);
  Residuals res = kkt_residuals(p, z, lambda, nu);
  double feas_scale = 1.0 + z.cwiseAbs().maxCoeff();
  if (res.primal > tol * feas_scale || res.dual > 1e-6 * feas_scale) {
    return false;
  }
  out.z = z;
  out.lambda = lambda;
  out.nu = nu;
  out.primal_residual = res.primal;
  out.dual_residual = res.dual;
  out.status = QpStatus::kSolved;
  return true;
}

}  // namespace

const char* qp_status_name(QpStatus s) {
  return s == QpStatus::kSolved ? "solved" : "max-iter";
}

QpResult qp_solve(const QpProblem& p, double tol, int cap) {
  validate(p);
  Eigen::Index n = p.H.rows();
  QpResult out;
  out.lambda = Vector::Zero(p.G.rows());
  out.nu = Vector::Zero(p.Aeq.rows());

  if (p.G.rows() == 0 && p.Aeq.rows() == 0) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Eigen::MatrixXd(p.H));
    if (ldlt.info() != Eigen::Success) {
      throw NumericError("H factorization failed");
    }
    out.z = ldlt.solve(-p.f);
    double res = (p.H * out.z + p.f).cwiseAbs().maxCoeff();
    if (res > 1e-8 * (1.0 + p.f.cwiseAbs().maxCoeff())) {
      throw NumericError(msg("unconstrained stationarity residual ", res,
                             "; H is singular along f"));
    }
    out.dual_residual = res;
    return out;
  }

  Stacked st = stack_constraints(p);
  Eigen::Index mt = st.C.rows();

  double rho = 0.1;
  auto rho_vec = [&](double r) {
    Vector v = Vector::Constant(mt, r);
    v.tail(st.me).setConstant(kRhoEqScale * r);
    return v;
  };
  Vector rv = rho_vec(rho);

  Eigen::MatrixXd quad =
      Eigen::MatrixXd(p.H) + kSigma * Eigen::MatrixXd::Identity(n, n) +
      Eigen::MatrixXd(st.C.transpose() * rv.asDiagonal() * st.C);
  Eigen::LLT<Eigen::MatrixXd> llt(quad);
  if (llt.info() != Eigen::Success) {
    throw NumericError("splitting system factorization failed");
  }

  Vector z = Vector::Zero(n);
  Vector s = Vector::Zero(mt);
  for (Eigen::Index i = 0; i < mt; ++i) {
    s(i) = std::clamp(0.0, st.lo(i), st.hi(i));
  }
  Vector y = Vector::Zero(mt);

  int it = 0;
  bool converged = false;
  for (; it < cap; ++it) {
    Vector rhs = kSigma * z - p.f + st.C.transpose() * (rv.cwiseProduct(s) - y);
    Vector zh = llt.solve(rhs);
    Vector ch = st.C * zh;
    Vector z_next = kAlpha * zh + (1.0 - kAlpha) * z;
    Vector v = kAlpha * ch + (1.0 - kAlpha) * s + y.cwiseQuotient(rv);
    Vector s_next = v.cwiseMax(st.lo).cwiseMin(st.hi);
    y += rv.cwiseProduct(kAlpha * ch + (1.0 - kAlpha) * s - s_next);
    z = z_next;
    s = s_next;

    if ((it + 1) % kCheckEvery == 0 || it + 1 == cap) {
      Vector cz = st.C * z;
      double rp = (cz - s).cwiseAbs().maxCoeff();
      Vector station = p.H * z + p.f + st.C.transpose() * y;
      double rd = station.cwiseAbs().maxCoeff();
      double eps_p = tol * (1.0 + std::max(cz.cwiseAbs().maxCoeff(), s.cwiseAbs().maxCoeff()));
      double eps_d = tol * (1.0 + std::max({(p.H * z).cwiseAbs().maxCoeff(),
                                            p.f.cwiseAbs().maxCoeff(),
                                            (st.C.transpose() * y).cwiseAbs().maxCoeff()}));
      if (rp <= eps_p && rd <= eps_d) {
        converged = true;
        ++it;
        break;
      }
      if ((it + 1) % kAdaptEvery == 0) {
        double num = rp / (1.0 + cz.cwiseAbs().maxCoeff());
        double den = rd / (1.0 + (p.H * z).cwiseAbs().maxCoeff() + p.f.cwiseAbs().maxCoeff());
        if (den > 0 && num > 0) {
          double ratio = std::sqrt(num / den);
          if (ratio > 5.0 || ratio < 0.2) {
            rho = std::clamp(rho * ratio, 1e-6, 1e6);
            rv = rho_vec(rho);
            quad = Eigen::MatrixXd(p.H) + kSigma * Eigen::MatrixXd::Identity(n, n) +
                   Eigen::MatrixXd(st.C.transpose() * rv.asDiagonal() * st.C);
            llt.compute(quad);
            if (llt.info() != Eigen::Success) {
              throw NumericError("splitting system refactorization failed");
            }
          }
        }
      }
    }
  }

  out.z = z;
  out.lambda = y.head(st.m).cwiseMax(0.0);
  out.nu = y.tail(st.me);
  out.iterations = it;
  out.status = converged ? QpStatus::kSolved : QpStatus::kMaxIter;

  QpResult polished = out;
  if (try_polish(p, st, s, y, tol, polished)) {
    polished.iterations = it;
    return polished;
  }

  Residuals res = kkt_residuals(p, out.z, out.lambda, out.nu);
  out.primal_residual = res.primal;
  out.dual_residual = res.dual;
  return out;
}

}  // namespace dpc
