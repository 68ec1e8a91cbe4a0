#include "dpc/json_io.hpp"

#include <atomic>
#include <fstream>

namespace dpc {

namespace {
std::atomic<int64_t> g_io_ops{0};
}

int64_t io_op_count() { return g_io_ops.load(); }

namespace detail {
void count_io_op() { g_io_ops.fetch_add(1); }
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix json_to_matrix(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols,
                      const std::string& name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw ConfigError(msg("matrix '", name, "': expected ", rows, " rows, got ",
                          j.is_array() ? std::to_string(j.size()) : std::string("non-array")));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ConfigError(msg("matrix '", name, "': row ", i, " expected ", cols, " entries"));
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<size_t>(k)].get<double>();
  }
  return m;
}

void save_json(const nlohmann::json& j, const std::string& path) {
  detail::count_io_op();
  std::ofstream out(path);
  if (!out) throw IoError(msg("cannot open '", path, "' for writing"));
  out << j.dump(2) << "\n";
  if (!out) throw IoError(msg("write failed for '", path, "'"));
}

nlohmann::json load_json(const std::string& path) {
  detail::count_io_op();
  std::ifstream in(path);
  if (!in) throw IoError(msg("cannot open '", path, "'"));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(msg(path, ": JSON parse failed: ", e.what()));
  }
  return j;
}

}  // namespace dpc
