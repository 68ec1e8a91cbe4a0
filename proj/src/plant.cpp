#include "dpc/plant.hpp"

#include <cmath>

#include "dpc/csv.hpp"
#include "dpc/json_io.hpp"

namespace dpc {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Designed spectrum: three slow envelope modes and one fast room-air mode.
const double kLambda[4] = {0.999, 0.994, 0.983, 0.254};

// Mixing matrix S = C^{-1/2} Q with Q orthogonal and C the thermal
// capacitance scaling (heavy wall/ceiling masses, light internal mass,
// unit room air). Chosen so S diag(lambda) S^{-1} is entrywise nonnegative
// with strong mass-to-room coupling and weak room-to-mass feedback.
const double kS[4][4] = {
    {0.020390915036257718, -0.0043695290567760366, -0.0012007580792030368,
     -0.00013295327864358469},
    {0.015924709715645958, 0.07830471438621063, -0.01428960763187131,
     -0.0020831392388826492},
    {0.017267365732014636, 0.030000712372969435, 0.18536879816890484,
     -0.011843851807993125},
    {0.01701217033020801, 0.033437595588076435, 0.056749068539593411,
     0.99768334479524756}};

// Heater-to-room-air per-step gain, calibrated for a 0.007 degC/W DC gain.
constexpr double kB4 = 0.003500915601444359;

// Solar coupling onto wall and ceiling plus a window share into room air,
// calibrated for a 0.005 degC/W DC gain on room air.
const double kSolar[4] = {6.025440355822546e-06, 6.025440355822546e-06, 0.0,
                          1.8076321067467638e-06};

}  // namespace

Plant build_default_plant() {
  Plant p;
  Matrix S(4, 4), D = Matrix::Zero(4, 4);
  for (int i = 0; i < 4; ++i) {
    D(i, i) = kLambda[i];
    for (int j = 0; j < 4; ++j) S(i, j) = kS[i][j];
  }
  p.A = S * D * S.inverse();
  p.B = Matrix::Zero(4, 1);
  p.B(3, 0) = kB4;
  p.E = Matrix::Zero(4, 3);
  p.E.col(0) = (Matrix::Identity(4, 4) - p.A) * Matrix::Ones(4, 1);  // ambient
  for (int i = 0; i < 4; ++i) p.E(i, 1) = kSolar[i];                 // solar
  p.E.col(2) = p.B;                                                  // internal gains
  return p;
}

Uncertainty uncertainty_mode(const std::string& mode) {
  if (mode == "none") return {0.0, 0.0};
  if (mode == "w") return {0.0, kSigmaW};
  if (mode == "v") return {kSigmaV, 0.0};
  if (mode == "wv") return {kSigmaV, kSigmaW};
  throw ConfigError(msg("unknown uncertainty mode '", mode, "' (none|w|v|wv)"));
}

Vector plant_step(const Plant& p, const Vector& x, const Vector& u, const Vector& d,
                  const Uncertainty& unc, Rng& rng) {
  if (x.size() != p.nx || u.size() != p.nu || d.size() != p.nd)
    throw ShapeError(msg("plant_step: x ", x.size(), ", u ", u.size(), ", d ", d.size()));
  Vector next;
  if (unc.sigma_v > 0.0) {
    Matrix Ap = p.A;
    for (Eigen::Index i = 0; i < p.nx; ++i)
      for (Eigen::Index j = 0; j < p.nx; ++j)
        Ap(i, j) *= 1.0 + rng.normal(0.0, unc.sigma_v);
    next = Ap * x + p.B * u + p.E * d;
  } else {
    next = p.A * x + p.B * u + p.E * d;
  }
  if (unc.sigma_w > 0.0)
    for (Eigen::Index i = 0; i < p.nx; ++i) next(i) += rng.normal(0.0, unc.sigma_w);
  if (!next.allFinite()) throw NumericError("plant_step: non-finite state");
  return next;
}

namespace {

// Daily profiles (k counts 300 s samples, 288 per day, k = 0 at midnight):
// ambient trough at 01:00 and peak at 13:00; solar is a daylight half-sine
// peaking at noon; internal gains step up during 08:00-20:00 occupancy.
double ambient_at(Eigen::Index k) {
  return 7.5 - 7.5 * std::cos(2.0 * kPi * (static_cast<double>(k) - 12.0) / 288.0);
}

double solar_base_at(Eigen::Index k) {
  double s = std::sin(2.0 * kPi * (static_cast<double>(k) - 72.0) / 288.0);
  return s > 0.0 ? 800.0 * s : 0.0;
}

double internal_base_at(Eigen::Index k) {
  Eigen::Index tod = k % 288;
  return (tod >= 96 && tod < 240) ? 500.0 : 100.0;
}

}  // namespace

Dataset generate_dataset(const Plant& p, const DataConfig& cfg, uint64_t seed) {
  if (cfg.days < 28)
    throw ConfigError(msg("dataset needs at least 28 days for the week splits, got ", cfg.days));
  const Eigen::Index T = static_cast<Eigen::Index>(cfg.days) * 288;

  Dataset ds;
  ds.X.resize(T, 4);
  ds.U.resize(T, 1);
  ds.D.resize(T, 3);
  ds.R.resize(T);
  ds.xlo = Vector::Constant(T, cfg.xlo);
  ds.xhi = Vector::Constant(T, cfg.xhi);
  ds.ulo = Vector::Constant(T, cfg.ulo);
  ds.uhi = Vector::Constant(T, cfg.uhi);

  Rng noise = substream(seed, "data");
  for (Eigen::Index k = 0; k < T; ++k) {
    double amb = ambient_at(k) + noise.normal(0.0, 0.15);
    double sol_base = solar_base_at(k);
    double sol_eps = noise.normal(0.0, 10.0);
    double sol = sol_base > 0.0 ? std::max(0.0, sol_base + sol_eps) : 0.0;
    double gains = std::max(0.0, internal_base_at(k) + noise.normal(0.0, 15.0));
    ds.D(k, 0) = amb;
    ds.D(k, 1) = sol;
    ds.D(k, 2) = gains;

    double s = std::sin(2.0 * kPi * static_cast<double>(k) / 288.0);
    ds.U(k, 0) = cfg.offset_sine ? 0.5 * cfg.u_amp * (1.0 + s)
                                 : std::max(0.0, cfg.u_amp * s);
    ds.R(k) = 20.0 + 2.0 * s;
  }

  Uncertainty unc = uncertainty_mode(cfg.uncertainty);
  Rng unc_rng = substream(seed, "uncertainty");
  Vector x = Vector::Constant(4, cfg.x0);
  for (Eigen::Index k = 0; k < T; ++k) {
    ds.X.row(k) = x.transpose();
    if (k + 1 < T)
      x = plant_step(p, x, ds.U.row(k).transpose(), ds.D.row(k).transpose(), unc, unc_rng);
  }

  const Eigen::Index week = 7 * 288;
  ds.train = {week, week};
  ds.val = {2 * week, week};
  ds.test = {3 * week, week};
  return ds;
}

void save_dataset(const Dataset& d, const std::string& path) {
  std::vector<std::string> header = {"k",  "x1", "x2", "x3",  "x4",  "u1",  "d1",
                                     "d2", "d3", "r",  "xlo", "xhi", "ulo", "uhi"};
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<size_t>(d.size()));
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    rows.push_back({static_cast<double>(k), d.X(k, 0), d.X(k, 1), d.X(k, 2), d.X(k, 3),
                    d.U(k, 0), d.D(k, 0), d.D(k, 1), d.D(k, 2), d.R(k), d.xlo(k),
                    d.xhi(k), d.ulo(k), d.uhi(k)});
  }
  write_csv(path, header, rows);
}

Dataset load_dataset(const std::string& path, const DataConfig& cfg) {
  Csv csv = read_csv(path);
  const Eigen::Index T = static_cast<Eigen::Index>(csv.rows.size());
  if (T < 4 * 7 * 288)
    throw ConfigError(msg(path, ": dataset has ", T, " rows, need at least ", 4 * 7 * 288));

  Dataset ds;
  ds.X.resize(T, 4);
  ds.U.resize(T, 1);
  ds.D.resize(T, 3);
  ds.R.resize(T);
  ds.xlo.resize(T);
  ds.xhi.resize(T);
  ds.ulo.resize(T);
  ds.uhi.resize(T);

  size_t ck = csv.col("k");
  size_t cx[4] = {csv.col("x1"), csv.col("x2"), csv.col("x3"), csv.col("x4")};
  size_t cu = csv.col("u1");
  size_t cd[3] = {csv.col("d1"), csv.col("d2"), csv.col("d3")};
  bool has_r = csv.has_col("r");
  bool has_b = csv.has_col("xlo") && csv.has_col("xhi") && csv.has_col("ulo") && csv.has_col("uhi");

  for (Eigen::Index k = 0; k < T; ++k) {
    const auto& row = csv.rows[static_cast<size_t>(k)];
    if (row[ck] != static_cast<double>(k))
      throw IoError(msg(path, ":", k + 2, ": expected k=", k, ", got ", row[ck]));
    for (int j = 0; j < 4; ++j) ds.X(k, j) = row[cx[j]];
    ds.U(k, 0) = row[cu];
    for (int j = 0; j < 3; ++j) ds.D(k, j) = row[cd[j]];
    double s = std::sin(2.0 * kPi * static_cast<double>(k) / 288.0);
    ds.R(k) = has_r ? row[csv.col("r")] : 20.0 + 2.0 * s;
    ds.xlo(k) = has_b ? row[csv.col("xlo")] : cfg.xlo;
    ds.xhi(k) = has_b ? row[csv.col("xhi")] : cfg.xhi;
    ds.ulo(k) = has_b ? row[csv.col("ulo")] : cfg.ulo;
    ds.uhi(k) = has_b ? row[csv.col("uhi")] : cfg.uhi;
  }
  const Eigen::Index week = 7 * 288;
  ds.train = {week, week};
  ds.val = {2 * week, week};
  ds.test = {3 * week, week};
  return ds;
}

void save_plant(const Plant& p, const std::string& path) {
  nlohmann::json j;
  j["format"] = "dpc-plant";
  j["version"] = 1;
  j["nx"] = p.nx;
  j["nu"] = p.nu;
  j["nd"] = p.nd;
  j["obs"] = p.obs;
  j["ts"] = p.ts;
  j["A"] = matrix_to_json(p.A);
  j["B"] = matrix_to_json(p.B);
  j["E"] = matrix_to_json(p.E);
  save_json(j, path);
}

Plant load_plant(const std::string& path) {
  nlohmann::json j = load_json(path);
  if (j.value("format", "") != "dpc-plant")
    throw ConfigError(msg(path, ": not a plant file"));
  Plant p;
  p.nx = j.at("nx").get<Eigen::Index>();
  p.nu = j.at("nu").get<Eigen::Index>();
  p.nd = j.at("nd").get<Eigen::Index>();
  p.obs = j.at("obs").get<Eigen::Index>();
  p.ts = j.at("ts").get<double>();
  p.A = json_to_matrix(j.at("A"), p.nx, p.nx, "A");
  p.B = json_to_matrix(j.at("B"), p.nx, p.nu, "B");
  p.E = json_to_matrix(j.at("E"), p.nx, p.nd, "E");
  return p;
}

}  // namespace dpc
