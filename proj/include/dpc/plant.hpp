#pragma once

#include <string>

#include "dpc/matrix.hpp"
#include "dpc/rng.hpp"

namespace dpc {

// Ground-truth building-thermal plant used to synthesize data and to judge
// controllers. Four states: wall mass, ceiling mass, internal mass, room air
// (observed). One input: heater power in W. Three disturbances: ambient
// temperature in degC, solar gain in W, internal gains in W. 300 s sampling.
struct Plant {
  Matrix A;  // 4x4, entrywise nonnegative, eigenvalues {0.999, 0.994, 0.983, 0.254}
  Matrix B;  // 4x1, heat into room air
  Matrix E;  // 4x3, ambient / solar / internal couplings
  Eigen::Index nx = 4, nu = 1, nd = 3;
  Eigen::Index obs = 3;  // room air
  double ts = 300.0;
};

// A is realized as S diag(lambda) S^{-1} for a fixed mixing S, chosen so the
// entries are nonnegative with sub-unit row sums. Sub-unit row sums make the
// ambient coupling column (I - A) * 1 nonnegative, which pins the unheated,
// gain-free building at exactly ambient temperature in steady state.
Plant build_default_plant();

// Additive/parametric plant uncertainty: each step perturbs A entrywise by
// (1 + v), v ~ N(0, sigma_v), and adds w ~ N(0, sigma_w) per state.
struct Uncertainty {
  double sigma_v = 0.0;
  double sigma_w = 0.0;
};

inline constexpr double kSigmaV = 0.01;
inline constexpr double kSigmaW = 0.1;

// Modes: "none", "w", "v", "wv".
Uncertainty uncertainty_mode(const std::string& mode);

Vector plant_step(const Plant& p, const Vector& x, const Vector& u, const Vector& d,
                  const Uncertainty& unc, Rng& rng);

struct DataConfig {
  int days = 28;
  double x0 = 20.0;
  double u_amp = 4000.0;
  bool offset_sine = false;  // default clipped sine: max(0, amp * sin)
  double xlo = 19.0, xhi = 25.0;
  double ulo = 0.0, uhi = 5000.0;
  std::string uncertainty = "none";
};

// One month of excitation data plus the evaluation reference and bound
// series. Rows are samples; weeks 2/3/4 are the train/val/test splits.
struct Dataset {
  double ts = 300.0;
  Eigen::Index samples_per_day = 288;
  Matrix X;  // T x 4
  Matrix U;  // T x 1
  Matrix D;  // T x 3
  Vector R;  // T, evaluation reference for the observed state
  Vector xlo, xhi, ulo, uhi;  // T each

  struct Split {
    Eigen::Index begin = 0, size = 0;
  };
  Split train, val, test;

  Eigen::Index size() const { return X.rows(); }
};

Dataset generate_dataset(const Plant& p, const DataConfig& cfg, uint64_t seed);

// CSV round trip with header k,x1,x2,x3,x4,u1,d1,d2,d3,r,xlo,xhi,ulo,uhi.
// Missing optional columns (r and the bounds) are filled from cfg.
void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path, const DataConfig& cfg);

// Plant config round trip (dimensions, matrices, sampling time).
void save_plant(const Plant& p, const std::string& path);
Plant load_plant(const std::string& path);

}  // namespace dpc
