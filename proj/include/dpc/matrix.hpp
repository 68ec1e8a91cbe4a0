#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "dpc/errors.hpp"

namespace dpc {

// All numerics run on dense row-major doubles. Row-major keeps serialized
// matrices and in-memory storage in the same order.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;

inline std::string shape_str(const Matrix& m) {
  return msg(m.rows(), "x", m.cols());
}

inline void require_finite(const Matrix& m, const char* where) {
  if (!m.allFinite()) throw NumericError(msg("non-finite values in ", where));
}

inline void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* where) {
  if (m.rows() != rows || m.cols() != cols)
    throw ShapeError(msg(where, ": expected ", rows, "x", cols, ", got ", shape_str(m)));
}

// Column-stacked matrix from per-column vectors, used when assembling batches.
inline Matrix from_columns(const std::vector<Vector>& cols) {
  if (cols.empty()) throw ContractError("from_columns: empty column set");
  Matrix out(cols.front().size(), static_cast<Eigen::Index>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j) {
    if (cols[j].size() != out.rows())
      throw ShapeError(msg("from_columns: column ", j, " has length ", cols[j].size(),
                           ", expected ", out.rows()));
    out.col(static_cast<Eigen::Index>(j)) = cols[j];
  }
  return out;
}

}  // namespace dpc
