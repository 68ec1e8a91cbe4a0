#include "dpc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#include "dpc/errors.hpp"
#include "dpc/json_io.hpp"

namespace dpc {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Timing {
  double mean_ms, median_ms, max_ms;
  Eigen::Index samples;
};

// Times fn(i) for at least `evals` calls after warmup. Calls are grouped so
// each timed batch spans well above clock resolution; per-call time is the
// batch average.
Timing measure(const std::function<void(Eigen::Index)>& fn, Eigen::Index evals) {
  Eigen::Index warmup = std::max<Eigen::Index>(8, evals / 16);
  for (Eigen::Index i = 0; i < warmup; ++i) {
    fn(i);
  }
  Clock::time_point probe_start = Clock::now();
  fn(0);
  double probe = seconds_since(probe_start);
  Eigen::Index per_batch = 1;
  if (probe < 1e-4) {
    per_batch = std::clamp<Eigen::Index>(
        static_cast<Eigen::Index>(1e-4 / std::max(probe, 1e-7)), 1, 256);
  }
  Eigen::Index batches = (evals + per_batch - 1) / per_batch;
  std::vector<double> batch_ms(static_cast<size_t>(batches));
  int64_t io_before = io_op_count();
  Eigen::Index call = 0;
  for (Eigen::Index b = 0; b < batches; ++b) {
    Clock::time_point start = Clock::now();
    for (Eigen::Index j = 0; j < per_batch; ++j) {
      fn(call++);
    }
    batch_ms[static_cast<size_t>(b)] =
        seconds_since(start) * 1e3 / static_cast<double>(per_batch);
  }
  if (io_op_count() != io_before) {
    throw ContractError("measured section performed IO");
  }
  Timing t;
  t.samples = batches * per_batch;
  double total = 0.0;
  for (double v : batch_ms) {
    total += v;
  }
  t.mean_ms = total / static_cast<double>(batches);
  std::vector<double> sorted = batch_ms;
  std::sort(sorted.begin(), sorted.end());
  t.median_ms = sorted[sorted.size() / 2];
  t.max_ms = sorted.back();
  return t;
}

}  // namespace

std::vector<TimingRecord> run_bench(const Plant& plant, const Dataset& ds,
                                    const BenchConfig& cfg) {
  if (cfg.horizons.empty()) {
    throw ConfigError("bench needs at least one horizon");
  }
  if (cfg.evals < 1) {
    throw ConfigError(msg("bench needs evals >= 1, got ", cfg.evals));
  }
  if (ds.test.size < 2) {
    throw ConfigError("bench needs a test split with transitions");
  }
  Eigen::Index obs = plant.obs;
  Eigen::Index rows = ds.test.size - 1;
  std::vector<TimingRecord> records;

  for (int N : cfg.horizons) {
    if (N < 1) {
      throw ConfigError(msg("bench horizon must be >= 1, got ", N));
    }
    Rng init = substream(cfg.seed, "init", static_cast<uint64_t>(N));
    Vector in_scale = default_in_scale(ds, plant.nx, plant.nd, plant.nu);
    Policy policy = make_policy(plant.nx, plant.nd, plant.nu, cfg.hidden_per_step * N, init,
                                in_scale);

    volatile double sink = 0.0;
    auto policy_once = [&](Eigen::Index i) {
      Eigen::Index t = ds.test.begin + (i % rows);
      ControlBatch b;
      b.x = Matrix(ds.X.row(t).transpose());
      b.d = Matrix(ds.D.row(t).transpose());
      b.r = Matrix::Constant(1, 1, ds.R(t + 1));
      b.xlo = Matrix::Constant(plant.nx, 1, -kBoundSentinel);
      b.xhi = Matrix::Constant(plant.nx, 1, kBoundSentinel);
      b.xlo(obs, 0) = ds.xlo(t + 1);
      b.xhi(obs, 0) = ds.xhi(t + 1);
      b.ulo = Matrix::Constant(plant.nu, 1, ds.ulo(t));
      b.uhi = Matrix::Constant(plant.nu, 1, ds.uhi(t));
      sink = sink + policy_eval(policy, b)(0, 0);
    };
    Timing pt = measure(policy_once, cfg.evals);
    records.push_back({"dlmpc", N, pt.samples, pt.mean_ms, pt.median_ms, pt.max_ms});

    MpcConfig mpc_cfg = cfg.mpc;
    mpc_cfg.horizon = N;
    Eigen::Index last = ds.size() - 1;
    double qp_calls = 0.0, qp_iters = 0.0, qp_rp = 0.0, qp_rd = 0.0;
    auto mpc_once = [&](Eigen::Index i) {
      Eigen::Index t = ds.test.begin + (i % rows);
      Matrix d_seq(N, plant.nd);
      Vector r_seq(N), xlo_seq(N), xhi_seq(N);
      Matrix ulo_seq(N, plant.nu), uhi_seq(N, plant.nu);
      for (int k = 0; k < N; ++k) {
        Eigen::Index row = std::min<Eigen::Index>(t + k, last);
        Eigen::Index next = std::min<Eigen::Index>(t + k + 1, last);
        d_seq.row(k) = ds.D.row(row);
        r_seq(k) = ds.R(next);
        xlo_seq(k) = ds.xlo(next);
        xhi_seq(k) = ds.xhi(next);
        ulo_seq.row(k).setConstant(ds.ulo(row));
        uhi_seq.row(k).setConstant(ds.uhi(row));
      }
      MpcStep step = nominal_mpc_step(plant.A, plant.B, plant.E, obs,
                                      Vector(ds.X.row(t).transpose()), d_seq, r_seq, xlo_seq,
                                      xhi_seq, ulo_seq, uhi_seq, mpc_cfg);
      qp_calls += 1.0;
      qp_iters += static_cast<double>(step.iterations);
      qp_rp += step.primal_residual;
      qp_rd += step.dual_residual;
      sink = sink + step.u0(0);
    };
    Timing mt = measure(mpc_once, cfg.evals);
    TimingRecord impc{"impc", N, mt.samples, mt.mean_ms, mt.median_ms, mt.max_ms};
    impc.qp_iterations = qp_iters / qp_calls;
    impc.qp_primal_residual = qp_rp / qp_calls;
    impc.qp_dual_residual = qp_rd / qp_calls;
    records.push_back(impc);
  }
  return records;
}

double growth_exponent(const std::vector<TimingRecord>& records,
                       const std::string& controller) {
  std::vector<double> lx, ly;
  for (const TimingRecord& r : records) {
    if (r.controller == controller && r.horizon > 0 && r.mean_ms > 0) {
      lx.push_back(std::log(static_cast<double>(r.horizon)));
      ly.push_back(std::log(r.mean_ms));
    }
  }
  if (lx.size() < 2) {
    throw ConfigError(msg("growth fit needs at least two horizons for ", controller));
  }
  double mx = 0, my = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(lx.size());
  double num = 0, den = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  if (den == 0) {
    throw ConfigError("growth fit needs distinct horizons");
  }
  return num / den;
}

}  // namespace dpc
