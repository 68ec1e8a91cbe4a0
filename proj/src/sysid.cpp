#include "dpc/sysid.hpp"

#include <utility>

#include "dpc/errors.hpp"

namespace dpc {
namespace {

// Rows {begin, begin + stride, ...} of source, transposed into columns.
Matrix gather_cols(const Matrix& source, Eigen::Index begin, Eigen::Index stride,
                   Eigen::Index count) {
  Matrix out(source.cols(), count);
  for (Eigen::Index w = 0; w < count; ++w) {
    out.col(w) = source.row(begin + w * stride).transpose();
  }
  return out;
}

struct Windows {
  Eigen::Index count = 0;
  Matrix x0;                // nx x W
  std::vector<Matrix> u;    // horizon entries, nu x W
  std::vector<Matrix> d;    // horizon entries, nd x W
  std::vector<Matrix> tgt;  // horizon entries, rows x W
};

Windows cut_windows(const Dataset& ds, Dataset::Split split, int horizon, int observed) {
  if (horizon < 1) {
    throw ConfigError(msg("sysid horizon must be >= 1, got ", horizon));
  }
  if (observed < -1 || observed >= ds.X.cols()) {
    throw ConfigError(msg("observed index ", observed, " out of range for ", ds.X.cols(),
                          " states"));
  }
  Windows w;
  w.count = (split.size - 1) / horizon;
  if (w.count < 1) {
    throw ConfigError(msg("split of ", split.size, " samples has no window of horizon ",
                          horizon));
  }
  w.x0 = gather_cols(ds.X, split.begin, horizon, w.count);
  for (int k = 0; k < horizon; ++k) {
    w.u.push_back(gather_cols(ds.U, split.begin + k, horizon, w.count));
    w.d.push_back(gather_cols(ds.D, split.begin + k, horizon, w.count));
    Matrix full = gather_cols(ds.X, split.begin + k + 1, horizon, w.count);
    w.tgt.push_back(observed < 0 ? full : Matrix(full.row(observed)));
  }
  return w;
}

}  // namespace

double nstep_mse(const Model& m, const Dataset& ds, Dataset::Split split, int horizon,
                 int observed) {
  Windows w = cut_windows(ds, split, horizon, observed);
  Matrix x = w.x0;
  double sum = 0.0;
  for (int k = 0; k < horizon; ++k) {
    x = eval_step(m, x, w.u[static_cast<size_t>(k)], w.d[static_cast<size_t>(k)]);
    const Matrix& tgt = w.tgt[static_cast<size_t>(k)];
    if (observed < 0) {
      sum += (x - tgt).squaredNorm();
    } else {
      sum += (x.row(observed) - tgt).squaredNorm();
    }
  }
  double denom = static_cast<double>(horizon) * static_cast<double>(w.count) *
                 static_cast<double>(observed < 0 ? ds.X.cols() : 1);
  return sum / denom;
}

double open_loop_mse(const Model& m, const Dataset& ds, Dataset::Split split, int observed) {
  if (split.size < 2) {
    throw ConfigError(msg("split of ", split.size, " samples has no transition"));
  }
  Matrix x = ds.X.row(split.begin).transpose();
  double sum = 0.0;
  for (Eigen::Index k = 1; k < split.size; ++k) {
    Eigen::Index t = split.begin + k;
    x = eval_step(m, x, ds.U.row(t - 1).transpose(), ds.D.row(t - 1).transpose());
    Matrix tgt = ds.X.row(t).transpose();
    if (observed < 0) {
      sum += (x - tgt).squaredNorm();
    } else {
      sum += (x(observed, 0) - tgt(observed, 0)) * (x(observed, 0) - tgt(observed, 0));
    }
  }
  double denom = static_cast<double>(split.size - 1) *
                 static_cast<double>(observed < 0 ? ds.X.cols() : 1);
  return sum / denom;
}

SysIdResult train_sysid(Model init, const Dataset& ds, const SysIdConfig& cfg) {
  if (cfg.epochs < 0) {
    throw ConfigError(msg("sysid epochs must be >= 0, got ", cfg.epochs));
  }
  Windows w = cut_windows(ds, ds.train, cfg.horizon, cfg.observed);
  double denom = static_cast<double>(cfg.horizon) * static_cast<double>(w.count) *
                 static_cast<double>(cfg.observed < 0 ? ds.X.cols() : 1);

  SysIdResult res;
  res.model = std::move(init);
  Model best = res.model;
  Optimizer opt(cfg.optim);
  std::vector<ParamRef> refs = param_refs(res.model);
  ad::Tape tape;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double train_loss = 0.0;
    try {
      tape.reset();
      BoundModel bm = bind_model(tape, res.model);
      ad::Var x = tape.leaf(w.x0);
      ad::Var total{};
      for (int k = 0; k < cfg.horizon; ++k) {
        x = model_step(tape, bm, x, tape.leaf(w.u[static_cast<size_t>(k)]),
                       tape.leaf(w.d[static_cast<size_t>(k)]));
        ad::Var pred = cfg.observed < 0 ? x : slice_rows(x, cfg.observed, 1);
        ad::Var err = sub(pred, tape.leaf(w.tgt[static_cast<size_t>(k)]));
        ad::Var sq = sum_sq(err);
        total = k == 0 ? sq : add(total, sq);
      }
      ad::Var loss = scale(total, 1.0 / denom);
      tape.backward(loss);
      train_loss = loss.value()(0, 0);
      opt.step(refs, model_grads(bm));
    } catch (const NumericError& e) {
      throw NumericError(msg("sysid training diverged at epoch ", epoch, ": ", e.what()));
    }
    double val = nstep_mse(res.model, ds, ds.val, cfg.horizon, cfg.observed);
    res.curve.push_back({epoch, train_loss, val});

    if (res.best_epoch < 0 || val < res.best_val) {
      res.best_val = val;
      res.best_epoch = epoch;
      best = res.model;
    }
    res.stopped_epoch = epoch;
    if (epoch - res.best_epoch >= cfg.patience) {
      break;
    }
  }
  res.model = std::move(best);
  return res;
}

}  // namespace dpc
