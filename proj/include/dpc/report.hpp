#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dpc/csv.hpp"
#include "dpc/model.hpp"
#include "dpc/plant.hpp"

namespace dpc {

// Monospace table with a header rule; first column left-aligned, the rest
// right-aligned.
std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows);

// Identification summary (MSE per model and horizon) plus an eigenvalue
// table holding the plant's true spectrum and each model's learned spectrum.
std::string report_sysid(const Csv& results, const Plant& plant,
                         const std::vector<std::pair<std::string, Model>>& models);

// Closed-loop metric blocks, one per controller, columns per uncertainty
// mode, built from the aggregate rows.
std::string report_simulate(const Csv& results);

// Timing table plus per-controller growth exponents; the explicit-MPC column
// is listed as not implemented and memory footprints as not measured.
std::string report_bench(const Csv& results);

}  // namespace dpc
