#pragma once

#include <vector>

#include "dpc/matrix.hpp"

namespace dpc {

// Full spectrum of a real square matrix (n <= 64) via Hessenberg reduction
// and shifted QR. Sorted by descending modulus; ties broken by descending
// real part, then descending imaginary part, so conjugate pairs sit together
// with the +i member first.
std::vector<Complex> eig_all(const Matrix& A, int max_sweeps = 0);

// Spectral-radius estimate by power iteration. With nonneg = true the matrix
// must be entrywise nonnegative and the iteration also tracks Collatz
// ratio brackets min_i (Ax)_i / x_i <= rho <= max_i (Ax)_i / x_i, which pin
// the dominant eigenvalue of a positive matrix to the requested tolerance.
double dominant_eig(const Matrix& A, bool nonneg = false, double tol = 1e-10,
                    int max_iter = 10000);

inline double spectral_radius(const Matrix& A) {
  auto ev = eig_all(A);
  return std::abs(ev.front());
}

}  // namespace dpc
