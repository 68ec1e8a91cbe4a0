#include "dpc/joint.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <utility>

#include <json.hpp>

#include "dpc/errors.hpp"
#include "dpc/json_io.hpp"

namespace dpc {
namespace {

struct IdBatch {
  Matrix x, u, d, x_next;  // columns aligned with the control batch
};

IdBatch id_batch_at_rows(const Dataset& ds, const std::vector<Eigen::Index>& rows) {
  IdBatch b;
  Eigen::Index count = static_cast<Eigen::Index>(rows.size());
  b.x.resize(ds.X.cols(), count);
  b.u.resize(ds.U.cols(), count);
  b.d.resize(ds.D.cols(), count);
  b.x_next.resize(ds.X.cols(), count);
  for (Eigen::Index j = 0; j < count; ++j) {
    Eigen::Index t = rows[static_cast<size_t>(j)];
    b.x.col(j) = ds.X.row(t).transpose();
    b.u.col(j) = ds.U.row(t).transpose();
    b.d.col(j) = ds.D.row(t).transpose();
    b.x_next.col(j) = ds.X.row(t + 1).transpose();
  }
  return b;
}

ad::Var id_loss_on_tape(ad::Tape& tape, const BoundModel& bm, ad::Var x, const IdBatch& b,
                        Eigen::Index observed, const JointWeights& w) {
  double inv_b = 1.0 / static_cast<double>(b.x.cols());
  ad::Var pred = model_step(tape, bm, x, tape.leaf(b.u), tape.leaf(b.d));
  ad::Var err = sub(slice_rows(pred, observed, 1), tape.leaf(Matrix(b.x_next.row(observed))));
  ad::Var dx = sub(pred, x);
  return add(scale(sum_sq(err), w.q_id * inv_b), scale(sum_sq(dx), w.q_dx * inv_b));
}

using ParamView = std::pair<std::string, const Matrix*>;

void check_partition(const std::vector<ParamView>& frozen,
                     const std::vector<ParamView>& trainable,
                     const std::vector<ParamView>& all) {
  std::set<const Matrix*> f, t;
  for (const auto& r : frozen) f.insert(r.second);
  for (const auto& r : trainable) t.insert(r.second);
  if (f.size() + t.size() != all.size()) {
    throw ContractError("adapt parameter partition does not cover the parameter set");
  }
  for (const Matrix* m : t) {
    if (f.count(m) != 0) {
      throw ContractError("adapt parameter partition overlaps");
    }
  }
  for (const auto& r : all) {
    if (f.count(r.second) + t.count(r.second) != 1) {
      throw ContractError(msg("parameter ", r.first, " not covered by the adapt partition"));
    }
  }
}

}  // namespace

double id_objective(const Model& m, const Matrix& x, const Matrix& u, const Matrix& d,
                    const Matrix& x_next, Eigen::Index observed, const JointWeights& w) {
  if (observed < 0 || observed >= x.rows()) {
    throw ConfigError(msg("observed index ", observed, " out of range for ", x.rows(),
                          " states"));
  }
  double inv_b = 1.0 / static_cast<double>(x.cols());
  Matrix pred = eval_step(m, x, u, d);
  double err = (pred.row(observed) - x_next.row(observed)).squaredNorm();
  double dx = (pred - x).squaredNorm();
  return w.q_id * inv_b * err + w.q_dx * inv_b * dx;
}

JointResult train_joint(Model init_model, Policy init_policy, const Dataset& ds,
                        const JointConfig& cfg) {
  if (cfg.epochs < 0) {
    throw ConfigError(msg("joint epochs must be >= 0, got ", cfg.epochs));
  }
  if (cfg.val_every < 1) {
    throw ConfigError(msg("val_every must be >= 1, got ", cfg.val_every));
  }
  if (cfg.weights.q_id < 0 || cfg.weights.q_dx < 0) {
    throw ConfigError("joint weights must be nonnegative");
  }
  JointResult res;
  res.model = std::move(init_model);
  res.policy = std::move(init_policy);
  Model best_model = res.model;
  Policy best_policy = res.policy;

  Optimizer opt(cfg.optim);
  std::vector<ParamRef> refs = param_refs(res.policy);
  if (!cfg.freeze_model) {
    for (auto& r : param_refs(res.model)) {
      refs.push_back(r);
    }
  }

  Rng val_stream = substream(cfg.seed, "val-sampling");
  ControlBatch val_batch =
      sample_control_batch(ds, ds.val, cfg.batch, cfg.observed, val_stream);
  IdBatch val_id = id_batch_at_rows(ds, val_batch.rows);

  auto validate = [&]() {
    double v = control_objective(res.policy, res.model, val_batch, cfg.observed,
                                 cfg.weights.control, cfg.horizon);
    if (!cfg.detach_id) {
      v += id_objective(res.model, val_id.x, val_id.u, val_id.d, val_id.x_next, cfg.observed,
                        cfg.weights);
    }
    return v;
  };

  ad::Tape tape;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng stream = substream(cfg.seed, "sampling", static_cast<uint64_t>(epoch));
    ControlBatch batch =
        sample_control_batch(ds, ds.train, cfg.batch, cfg.observed, stream);
    tape.reset();
    BoundPolicy bp = bind_policy(tape, res.policy);
    BoundModel bm = bind_model(tape, res.model);
    double loss_value = 0.0;
    try {
      ad::Var loss = control_loss(tape, bp, res.policy, bm, batch, cfg.observed,
                                  cfg.weights.control, cfg.horizon);
      if (!cfg.detach_id) {
        IdBatch idb = id_batch_at_rows(ds, batch.rows);
        loss = add(loss, id_loss_on_tape(tape, bm, tape.leaf(idb.x), idb, cfg.observed,
                                         cfg.weights));
      }
      tape.backward(loss);
      loss_value = loss.value()(0, 0);
      std::vector<Matrix> grads = {bp.W1.grad(), bp.b1.grad(), bp.W2.grad(), bp.b2.grad()};
      if (!cfg.freeze_model) {
        for (auto& g : model_grads(bm)) {
          grads.push_back(g);
        }
      }
      opt.step(refs, grads);
    } catch (const NumericError& e) {
      throw NumericError(msg("joint training diverged at epoch ", epoch, ": ", e.what()));
    }

    double val = std::numeric_limits<double>::quiet_NaN();
    if (epoch % cfg.val_every == 0 || epoch == cfg.epochs - 1) {
      val = validate();
      if (res.best_epoch < 0 || val < res.best_val) {
        res.best_val = val;
        res.best_epoch = epoch;
        best_model = res.model;
        best_policy = res.policy;
      }
    }
    res.curve.push_back({epoch, loss_value, val});
  }
  if (res.best_epoch >= 0) {
    res.model = std::move(best_model);
    res.policy = std::move(best_policy);
  }
  return res;
}

OnlineAdaptState::OnlineAdaptState(Eigen::Index nx, const AdaptConfig& cfg)
    : cfg_(cfg), xhat_(Matrix::Zero(nx, 1)) {
  if (cfg.steps < 0) {
    throw ConfigError(msg("adapt steps must be >= 0, got ", cfg.steps));
  }
}

Vector OnlineAdaptState::corrected(const Vector& x_meas) const {
  if (x_meas.size() != xhat_.rows()) {
    throw ShapeError(msg("measured state has ", x_meas.size(), " entries, xhat has ",
                         xhat_.rows()));
  }
  return x_meas + xhat_.col(0);
}

void OnlineAdaptState::reset() { xhat_.setZero(); }

void OnlineAdaptState::adapt(Policy& policy, const Model& model, const AdaptTuple& tuple) {
  Eigen::Index nx = policy.nx;
  Eigen::Index nu = policy.nu;
  if (tuple.x_meas.size() != nx || tuple.x_prev.size() != nx || tuple.u_prev.size() != nu ||
      tuple.d.size() != policy.nd || tuple.d_prev.size() != policy.nd) {
    throw ShapeError("adapt tuple dimensions do not match the policy");
  }

  std::vector<ParamView> frozen = {{"W1", &policy.W1}, {"b1", &policy.b1}};
  for (auto& v : param_views(model)) {
    frozen.push_back(v);
  }
  std::vector<ParamView> trainable = {{"W2", &policy.W2}, {"b2", &policy.b2},
                                      {"xhat", &xhat_}};
  std::vector<ParamView> all = trainable;
  for (auto& v : frozen) {
    all.push_back(v);
  }
  check_partition(frozen, trainable, all);
  std::vector<ParamRef> opt_refs = {{"W2", &policy.W2}, {"b2", &policy.b2},
                                    {"xhat", &xhat_}};

  ControlBatch batch;
  batch.x = tuple.x_meas;
  batch.d = tuple.d;
  batch.r = Matrix::Constant(1, 1, tuple.r);
  batch.xlo = tuple.xlo;
  batch.xhi = tuple.xhi;
  batch.ulo = tuple.ulo;
  batch.uhi = tuple.uhi;

  IdBatch idb;
  idb.x = tuple.x_prev;
  idb.u = tuple.u_prev;
  idb.d = tuple.d_prev;
  idb.x_next = tuple.x_meas;

  Optimizer opt(cfg_.optim);
  ad::Tape tape;
  for (int step = 0; step < cfg_.steps; ++step) {
    tape.reset();
    BoundPolicy bp = bind_policy(tape, policy);
    BoundModel bm = bind_model(tape, model);
    ad::Var xhat_var = tape.leaf(xhat_);
    ad::Var x_corr = add(tape.leaf(Matrix(tuple.x_meas)), xhat_var);
    ad::Var loss = control_loss(tape, bp, policy, bm, batch, cfg_.observed,
                                cfg_.weights.control, 1, x_corr);
    ad::Var x_id = add(tape.leaf(Matrix(tuple.x_prev)), xhat_var);
    loss = add(loss, id_loss_on_tape(tape, bm, x_id, idb, cfg_.observed, cfg_.weights));
    tape.backward(loss);
    opt.step(opt_refs, {bp.W2.grad(), bp.b2.grad(), xhat_var.grad()});
  }
}

void OnlineAdaptState::save(const std::string& path) const {
  nlohmann::json j;
  j["format"] = "dpc-adapt";
  j["version"] = 1;
  j["xhat"] = matrix_to_json(xhat_);
  save_json(j, path);
}

OnlineAdaptState OnlineAdaptState::load(const std::string& path, const AdaptConfig& cfg) {
  nlohmann::json j = load_json(path);
  if (!j.contains("format") || j["format"] != "dpc-adapt") {
    throw ConfigError(msg(path, " is not an adapt-state file"));
  }
  if (!j.contains("version") || j["version"] != 1) {
    throw ConfigError(msg(path, " has an unsupported adapt-state version"));
  }
  nlohmann::json jm = j.at("xhat");
  Eigen::Index nx = jm.at("rows").get<Eigen::Index>();
  OnlineAdaptState st(nx, cfg);
  st.xhat_ = json_to_matrix(jm, nx, 1, "xhat");
  return st;
}

}  // namespace dpc
