#include "dpc/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "dpc/bench.hpp"
#include "dpc/eig.hpp"
#include "dpc/errors.hpp"

namespace dpc {
namespace {

std::string num(double v, const char* fmt = "%.4g") {
  if (std::isnan(v)) {
    return "-";
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

const std::vector<std::string> kUncertaintyOrder = {"none", "w", "v", "wv"};

double lookup(const Csv& csv, const std::vector<double>& row, const std::string& name) {
  return row[csv.col(name)];
}

std::vector<double> sorted_moduli(const Matrix& A) {
  std::vector<double> mods;
  for (const Complex& e : eig_all(A)) {
    mods.push_back(std::abs(e));
  }
  std::sort(mods.rbegin(), mods.rend());
  return mods;
}

}  // namespace

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  if (header.empty()) {
    throw ContractError("table needs a header");
  }
  std::vector<size_t> width(header.size());
  for (size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
  }
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw ContractError(msg("table row has ", row.size(), " cells, header has ",
                              header.size()));
    }
    for (size_t c = 0; c < row.size(); ++c) {
      width[c] = std::max(width[c], row[c].size());
    }
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) {
        out << "  ";
      }
      if (c == 0) {
        out << cells[c] << std::string(width[c] - cells[c].size(), ' ');
      } else {
        out << std::string(width[c] - cells[c].size(), ' ') << cells[c];
      }
    }
    out << "\n";
  };
  emit(header);
  size_t total = 0;
  for (size_t c = 0; c < width.size(); ++c) {
    total += width[c] + (c > 0 ? 2 : 0);
  }
  out << std::string(total, '-') << "\n";
  for (const auto& row : rows) {
    emit(row);
  }
  return out.str();
}

std::string report_sysid(const Csv& results, const Plant& plant,
                         const std::vector<std::pair<std::string, Model>>& models) {
  std::ostringstream out;
  out << "Identification results (N-step MSE per split, open-loop MSE on test)\n";
  std::map<std::pair<int, int>, std::array<double, 4>> cells;
  for (const auto& row : results.rows) {
    int kind = static_cast<int>(lookup(results, row, "model"));
    int horizon = static_cast<int>(lookup(results, row, "N"));
    int split = static_cast<int>(lookup(results, row, "split"));
    if (split < 0 || split > 2) {
      throw ContractError(msg("unknown split code ", split));
    }
    auto [it, fresh] = cells.try_emplace(
        {kind, horizon},
        std::array<double, 4>{std::nan(""), std::nan(""), std::nan(""), std::nan("")});
    it->second[static_cast<size_t>(split)] = lookup(results, row, "nstep_mse");
    if (split == 2) {
      it->second[3] = lookup(results, row, "openloop_mse");
    }
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& [key, vals] : cells) {
    rows.push_back({kind_name(static_cast<ModelKind>(key.first)), num(key.second, "%.0f"),
                    num(vals[0], "%.4g"), num(vals[1], "%.4g"), num(vals[2], "%.4g"),
                    num(vals[3], "%.4g")});
  }
  out << render_table({"model", "N", "train MSE", "val MSE", "test MSE", "open-loop MSE"},
                      rows);

  out << "\nEigenvalues (modulus, descending)\n";
  std::vector<std::vector<std::string>> eig_rows;
  {
    std::vector<std::string> row = {"true"};
    for (double m : sorted_moduli(plant.A)) {
      row.push_back(num(m, "%.6f"));
    }
    eig_rows.push_back(row);
  }
  size_t eig_cols = eig_rows.front().size();
  for (const auto& [name, model] : models) {
    std::vector<std::string> row = {name};
    if (model.kind == ModelKind::kGru) {
      while (row.size() < eig_cols) {
        row.push_back("n/a");
      }
    } else {
      for (double m : sorted_moduli(effective_A(model))) {
        row.push_back(num(m, "%.6f"));
      }
      while (row.size() < eig_cols) {
        row.push_back("-");
      }
      row.resize(eig_cols);
    }
    eig_rows.push_back(row);
  }
  std::vector<std::string> eig_header = {"system"};
  for (size_t i = 1; i < eig_cols; ++i) {
    eig_header.push_back(msg("|eig", i, "|"));
  }
  out << render_table(eig_header, eig_rows);
  return out.str();
}

std::string report_simulate(const Csv& results) {
  std::map<double, std::map<std::string, std::vector<double>>> agg;
  size_t unc_col = results.col("uncertainty");
  for (const auto& row : results.rows) {
    if (lookup(results, row, "run") >= 0) {
      continue;
    }
    double ctrl = lookup(results, row, "controller");
    double unc_code = row[unc_col];
    std::string unc = kUncertaintyOrder[static_cast<size_t>(unc_code)];
    agg[ctrl][unc] = row;
  }
  const std::vector<std::pair<std::string, std::string>> metrics = {
      {"mse_ref", "MSE ref."}, {"ma_ene", "MA ene. (W)"}, {"ma_con", "MA con. (degC)"},
      {"mse_mod", "MSE mod."}, {"ma_gap", "MA gap (degC)"}};
  const std::vector<std::string> controller_names = {"dlmpc", "joint", "joint-adapt",
                                                     "lqr",   "lqi",   "mpc",
                                                     "zero"};
  std::ostringstream out;
  for (const auto& [ctrl_code, by_unc] : agg) {
    size_t idx = static_cast<size_t>(ctrl_code);
    std::string name = idx < controller_names.size() ? controller_names[idx]
                                                     : msg("controller-", ctrl_code);
    out << name << " (test week, aggregate over runs)\n";
    std::vector<std::vector<std::string>> rows;
    for (const auto& [field, label] : metrics) {
      std::vector<std::string> row = {label};
      bool any = false;
      for (const std::string& unc : kUncertaintyOrder) {
        auto it = by_unc.find(unc);
        if (it == by_unc.end()) {
          row.push_back("-");
        } else {
          double v = it->second[results.col(field)];
          row.push_back(num(v, "%.4g"));
          if (!std::isnan(v)) {
            any = true;
          }
        }
      }
      if (any) {
        rows.push_back(row);
      }
    }
    out << render_table({"metric", "none", "w", "v", "wv"}, rows) << "\n";
  }
  if (agg.empty()) {
    out << "no aggregate simulation rows found\n";
  }
  return out.str();
}

std::string report_bench(const Csv& results) {
  std::vector<TimingRecord> records;
  for (const auto& row : results.rows) {
    TimingRecord r;
    r.controller = lookup(results, row, "controller") == 0 ? "dlmpc" : "impc";
    r.horizon = static_cast<int>(lookup(results, row, "horizon"));
    r.samples = static_cast<Eigen::Index>(lookup(results, row, "samples"));
    r.mean_ms = lookup(results, row, "mean_ms");
    r.median_ms = lookup(results, row, "median_ms");
    r.max_ms = lookup(results, row, "max_ms");
    r.qp_iterations = lookup(results, row, "qp_iterations");
    records.push_back(r);
  }
  std::set<int> horizons;
  for (const auto& r : records) {
    horizons.insert(r.horizon);
  }
  std::ostringstream out;
  out << "Per-step timing (ms)\n";
  std::vector<std::vector<std::string>> rows;
  for (int n : horizons) {
    for (const std::string& ctrl : {std::string("dlmpc"), std::string("impc")}) {
      for (const auto& r : records) {
        if (r.horizon == n && r.controller == ctrl) {
          rows.push_back({r.controller, num(n, "%.0f"), num(r.mean_ms, "%.4g"),
                          num(r.median_ms, "%.4g"), num(r.max_ms, "%.4g"),
                          num(static_cast<double>(r.samples), "%.0f"),
                          num(r.qp_iterations, "%.1f")});
        }
      }
    }
  }
  out << render_table({"controller", "N", "mean", "median", "max", "samples", "QP iters"},
                      rows);
  for (const std::string& ctrl : {std::string("dlmpc"), std::string("impc")}) {
    bool present = false;
    for (const auto& r : records) {
      present = present || r.controller == ctrl;
    }
    if (present && horizons.size() >= 2) {
      out << ctrl << " growth exponent over N: " << num(growth_exponent(records, ctrl), "%.3f")
          << "\n";
    }
  }
  out << "empc: not implemented\n";
  out << "memory footprint: not measured\n";
  return out.str();
}

}  // namespace dpc
