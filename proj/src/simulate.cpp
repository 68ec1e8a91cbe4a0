#include "dpc/simulate.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "dpc/errors.hpp"

namespace dpc {
namespace {

ControlBatch single_batch(const Policy& p, Eigen::Index observed, const StepCtx& ctx,
                          const Vector& x_used) {
  ControlBatch b;
  b.x = x_used;
  b.d = ctx.d;
  b.r = Matrix::Constant(1, 1, ctx.r);
  b.xlo = Matrix::Constant(p.nx, 1, -kBoundSentinel);
  b.xhi = Matrix::Constant(p.nx, 1, kBoundSentinel);
  b.xlo(observed, 0) = ctx.xlo;
  b.xhi(observed, 0) = ctx.xhi;
  b.ulo = ctx.ulo;
  b.uhi = ctx.uhi;
  return b;
}

Vector saturate(const Vector& u, const Vector& lo, const Vector& hi) {
  return u.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

SimResult simulate(const Plant& plant, const Dataset& ds, const RunFactory& make_run,
                   const SimConfig& cfg) {
  if (cfg.runs < 1) {
    throw ConfigError(msg("simulation needs runs >= 1, got ", cfg.runs));
  }
  if (ds.test.size < 2) {
    throw ConfigError(msg("test split of ", ds.test.size, " samples has no transition"));
  }
  Uncertainty unc = uncertainty_mode(cfg.uncertainty);
  Eigen::Index obs = plant.obs;
  Eigen::Index steps = ds.test.size - 1;

  SimResult result;
  RunMetrics mean;
  double nan = std::numeric_limits<double>::quiet_NaN();
  for (int run = 0; run < cfg.runs; ++run) {
    Rng noise = substream(cfg.seed, "uncertainty", static_cast<uint64_t>(run));
    RunSetup setup = make_run();
    bool with_model = setup.predictor.model != nullptr;

    Vector x = ds.X.row(ds.test.begin).transpose();
    RunMetrics m;
    for (Eigen::Index t = ds.test.begin; t < ds.test.begin + steps; ++t) {
      StepCtx ctx;
      ctx.t = t;
      ctx.x = x;
      ctx.d = ds.D.row(t).transpose();
      ctx.r = ds.R(t + 1);
      ctx.xlo = ds.xlo(t + 1);
      ctx.xhi = ds.xhi(t + 1);
      ctx.ulo = Vector::Constant(plant.nu, ds.ulo(t));
      ctx.uhi = Vector::Constant(plant.nu, ds.uhi(t));

      Vector u = setup.control(ctx);
      if (u.size() != plant.nu) {
        throw ShapeError(msg("controller returned ", u.size(), " inputs, plant has ",
                             plant.nu));
      }
      if (!u.allFinite()) {
        throw NumericError(msg("controller returned a non-finite input at row ", t));
      }
      Vector u_app = saturate(u, ctx.ulo, ctx.uhi);

      Vector predicted;
      if (with_model) {
        Vector x_in = setup.predictor.corrected ? setup.predictor.corrected(x) : x;
        predicted = Vector(
            eval_step(*setup.predictor.model, Matrix(x_in), Matrix(u_app), Matrix(ctx.d))
                .col(0));
      }
      Vector x_next = plant_step(plant, x, u_app, ctx.d, unc, noise);

      double err = ctx.r - x_next(obs);
      m.mse_ref += err * err;
      m.ma_ene += u_app.cwiseAbs().sum();
      double viol = std::max(0.0, ctx.xlo - x_next(obs)) + std::max(0.0, x_next(obs) - ctx.xhi);
      m.ma_con += viol;
      if (with_model) {
        double gap = std::abs(predicted(obs) - x_next(obs));
        m.mse_mod += gap * gap;
        m.ma_gap += gap;
      }
      x = x_next;
    }
    double inv_t = 1.0 / static_cast<double>(steps);
    m.mse_ref *= inv_t;
    m.ma_ene *= inv_t;
    m.ma_con *= inv_t;
    if (with_model) {
      m.mse_mod *= inv_t;
      m.ma_gap *= inv_t;
    } else {
      m.mse_mod = nan;
      m.ma_gap = nan;
    }
    result.runs.push_back(m);
    mean.mse_ref += m.mse_ref;
    mean.ma_ene += m.ma_ene;
    mean.ma_con += m.ma_con;
    mean.mse_mod += m.mse_mod;
    mean.ma_gap += m.ma_gap;
  }
  double inv_r = 1.0 / static_cast<double>(cfg.runs);
  mean.mse_ref *= inv_r;
  mean.ma_ene *= inv_r;
  mean.ma_con *= inv_r;
  mean.mse_mod *= inv_r;
  mean.ma_gap *= inv_r;
  result.mean = mean;
  return result;
}

RunFactory policy_runner(const Policy& policy, Eigen::Index observed,
                         const Model* predict_with) {
  return [policy, observed, predict_with]() -> RunSetup {
    RunSetup s;
    s.control = [policy, observed](const StepCtx& ctx) -> Vector {
      ControlBatch b = single_batch(policy, observed, ctx, ctx.x);
      return Vector(policy_eval(policy, b).col(0));
    };
    if (predict_with != nullptr) {
      s.predictor.model = predict_with;
      s.predictor.corrected = [](const Vector& x) { return x; };
    }
    return s;
  };
}

RunFactory adaptive_policy_runner(const Policy& policy, const Model& model,
                                  const AdaptConfig& cfg) {
  const Model* model_ptr = &model;
  return [policy, model_ptr, cfg]() -> RunSetup {
    struct RunState {
      Policy policy;
      OnlineAdaptState adapt;
      bool has_prev = false;
      Vector x_prev, u_prev, d_prev;
    };
    auto st = std::make_shared<RunState>(
        RunState{policy, OnlineAdaptState(policy.nx, cfg), false, {}, {}, {}});
    Eigen::Index observed = cfg.observed;

    RunSetup s;
    s.control = [st, model_ptr, cfg, observed](const StepCtx& ctx) -> Vector {
      if (st->has_prev) {
        AdaptTuple tup;
        tup.x_prev = st->x_prev;
        tup.u_prev = st->u_prev;
        tup.d_prev = st->d_prev;
        tup.x_meas = ctx.x;
        tup.d = ctx.d;
        tup.r = ctx.r;
        tup.xlo = Vector::Constant(st->policy.nx, -kBoundSentinel);
        tup.xhi = Vector::Constant(st->policy.nx, kBoundSentinel);
        tup.xlo(observed) = ctx.xlo;
        tup.xhi(observed) = ctx.xhi;
        tup.ulo = ctx.ulo;
        tup.uhi = ctx.uhi;
        st->adapt.adapt(st->policy, *model_ptr, tup);
      }
      Vector x_corr = st->adapt.corrected(ctx.x);
      ControlBatch b = single_batch(st->policy, observed, ctx, x_corr);
      Vector u = Vector(policy_eval(st->policy, b).col(0));
      st->x_prev = ctx.x;
      st->u_prev = u.cwiseMax(ctx.ulo).cwiseMin(ctx.uhi);
      st->d_prev = ctx.d;
      st->has_prev = true;
      return u;
    };
    s.predictor.model = model_ptr;
    s.predictor.corrected = [st](const Vector& x) { return st->adapt.corrected(x); };
    return s;
  };
}

RunFactory lqr_runner(const Plant& plant, const LqrGain& gain) {
  const Plant* p = &plant;
  return [p, gain]() -> RunSetup {
    RunSetup s;
    s.control = [p, gain](const StepCtx& ctx) -> Vector {
      return lqr_control(gain, p->A, p->B, p->E, p->obs, ctx.x, ctx.d, ctx.r);
    };
    return s;
  };
}

RunFactory lqi_runner(const Plant& plant, const LqiGain& gain) {
  const Plant* p = &plant;
  return [p, gain]() -> RunSetup {
    auto state = std::make_shared<LqiState>();
    RunSetup s;
    s.control = [p, gain, state](const StepCtx& ctx) -> Vector {
      return lqi_control(gain, *state, ctx.x, p->obs, ctx.r);
    };
    return s;
  };
}

RunFactory mpc_runner(const Plant& plant, const Dataset& ds, const MpcConfig& cfg) {
  const Plant* p = &plant;
  const Dataset* data = &ds;
  return [p, data, cfg]() -> RunSetup {
    RunSetup s;
    s.control = [p, data, cfg](const StepCtx& ctx) -> Vector {
      int N = cfg.horizon;
      Eigen::Index last = data->size() - 1;
      Matrix d_seq(N, p->nd);
      Vector r_seq(N), xlo_seq(N), xhi_seq(N);
      Matrix ulo_seq(N, p->nu), uhi_seq(N, p->nu);
      for (int k = 0; k < N; ++k) {
        Eigen::Index row = std::min<Eigen::Index>(ctx.t + k, last);
        Eigen::Index next = std::min<Eigen::Index>(ctx.t + k + 1, last);
        d_seq.row(k) = data->D.row(row);
        r_seq(k) = data->R(next);
        xlo_seq(k) = data->xlo(next);
        xhi_seq(k) = data->xhi(next);
        ulo_seq.row(k).setConstant(data->ulo(row));
        uhi_seq.row(k).setConstant(data->uhi(row));
      }
      MpcStep step = nominal_mpc_step(p->A, p->B, p->E, p->obs, ctx.x, d_seq, r_seq,
                                      xlo_seq, xhi_seq, ulo_seq, uhi_seq, cfg);
      return step.u0;
    };
    return s;
  };
}

RunFactory zero_runner(Eigen::Index nu) {
  return [nu]() -> RunSetup {
    RunSetup s;
    s.control = [nu](const StepCtx&) -> Vector { return Vector::Zero(nu); };
    return s;
  };
}

}  // namespace dpc
