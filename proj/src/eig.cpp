#include "dpc/eig.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace dpc {

namespace {

void require_square(const Matrix& A, const char* where) {
  if (A.rows() != A.cols() || A.rows() == 0)
    throw ShapeError(msg(where, ": expected nonempty square matrix, got ", shape_str(A)));
  require_finite(A, where);
}

}  // namespace

std::vector<Complex> eig_all(const Matrix& A, int max_sweeps) {
  require_square(A, "eig_all");
  const Eigen::Index n = A.rows();
  if (n > 64) throw ContractError(msg("eig_all: n = ", n, " exceeds supported size 64"));

  Eigen::MatrixXd a = A;  // column-major working copy
  Eigen::RealSchur<Eigen::MatrixXd> schur;
  schur.setMaxIterations(max_sweeps > 0 ? max_sweeps : static_cast<int>(10 * n * n));
  schur.compute(a, /*computeU=*/false);
  if (schur.info() != Eigen::Success)
    throw NumericError(msg("eig_all: QR iteration did not converge within ",
                           (max_sweeps > 0 ? max_sweeps : static_cast<int>(10 * n * n)),
                           " sweeps"));

  // Read 1x1 and 2x2 blocks off the quasi-triangular factor.
  const Eigen::MatrixXd& T = schur.matrixT();
  std::vector<Complex> ev;
  ev.reserve(static_cast<size_t>(n));
  Eigen::Index i = 0;
  while (i < n) {
    if (i == n - 1 || T(i + 1, i) == 0.0) {
      ev.emplace_back(T(i, i), 0.0);
      ++i;
    } else {
      double p = 0.5 * (T(i, i) + T(i + 1, i + 1));
      double det = T(i, i) * T(i + 1, i + 1) - T(i, i + 1) * T(i + 1, i);
      double disc = p * p - det;
      if (disc < 0.0) {
        double q = std::sqrt(-disc);
        ev.emplace_back(p, q);
        ev.emplace_back(p, -q);
      } else {
        double q = std::sqrt(disc);
        ev.emplace_back(p + q, 0.0);
        ev.emplace_back(p - q, 0.0);
      }
      i += 2;
    }
  }

  std::sort(ev.begin(), ev.end(), [](const Complex& x, const Complex& y) {
    double mx = std::abs(x), my = std::abs(y);
    if (mx != my) return mx > my;
    if (x.real() != y.real()) return x.real() > y.real();
    return x.imag() > y.imag();
  });
  return ev;
}

double dominant_eig(const Matrix& A, bool nonneg, double tol, int max_iter) {
  require_square(A, "dominant_eig");
  const Eigen::Index n = A.rows();
  if (nonneg && (A.array() < 0.0).any())
    throw ConfigError("dominant_eig: nonneg requested but matrix has negative entries");

  // Deterministic start inside the positive cone, slightly tilted so it is
  // not orthogonal to sign-structured eigenvectors.
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = 1.0 + 0.25 * static_cast<double>(i) / static_cast<double>(n);
  x /= x.norm();

  double est = 0.0;
  double prev = std::numeric_limits<double>::quiet_NaN();
  int stable = 0;
  for (int it = 0; it < max_iter; ++it) {
    Vector y = A * x;
    if (nonneg && (x.array() > 0.0).all()) {
      // Collatz brackets: for a positive iterate of a nonnegative matrix the
      // extreme ratios enclose the Perron root.
      double lo = std::numeric_limits<double>::infinity();
      double hi = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        double r = y(i) / x(i);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      if (hi - lo < tol) return 0.5 * (lo + hi);
      est = 0.5 * (lo + hi);
    }
    double ny = y.norm();
    if (ny == 0.0) return 0.0;  // reached the kernel: nilpotent direction
    // Two-application growth handles sign-flipping dominant eigenvalues.
    Vector y2 = A * (y / ny);
    double growth = std::sqrt(ny * y2.norm());
    if (!std::isfinite(growth)) throw NumericError("dominant_eig: iterate overflow");
    if (!nonneg) est = growth;
    if (std::isfinite(prev) && std::abs(growth - prev) <= tol * std::max(1.0, growth)) {
      if (++stable >= 3 && !nonneg) return growth;
      if (stable >= 3 && nonneg) return est;
    } else {
      stable = 0;
    }
    prev = growth;
    double ny2 = y2.norm();
    x = ny2 > 0.0 ? Vector(y2 / ny2) : Vector(y / ny);
  }
  throw NumericError(msg("dominant_eig: no convergence after ", max_iter, " iterations"));
}

}  // namespace dpc
