#pragma once

#include <json.hpp>
#include <string>

#include "dpc/matrix.hpp"

namespace dpc {

// JSON is the structured-text carrier for models, policies, and configs.
// Doubles serialize at shortest round-trip precision, so save/load is
// bit-exact.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix json_to_matrix(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols,
                      const std::string& name);
void save_json(const nlohmann::json& j, const std::string& path);
nlohmann::json load_json(const std::string& path);

// IO activity counter used by the benchmark harness to assert that measured
// sections perform no serialization.
int64_t io_op_count();

namespace detail {
void count_io_op();
}

}  // namespace dpc
