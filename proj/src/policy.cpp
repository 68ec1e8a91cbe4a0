#include "dpc/policy.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <json.hpp>

#include "dpc/errors.hpp"
#include "dpc/json_io.hpp"

namespace dpc {
namespace {

constexpr double kStateLo = 0.0;
constexpr double kStateHi = 25.0;
constexpr double kRefLo = 15.0;
constexpr double kRefHi = 25.0;

Matrix clamp_bounds(const Matrix& bounds, double scale) {
  return bounds.cwiseMax(-2.0 * scale).cwiseMin(3.0 * scale);
}

// Rows below the state block, already clamped and scaled. Shared by the leaf
// and on-tape feature paths so both see identical values.
Matrix tail_features(const Policy& p, const ControlBatch& batch) {
  Eigen::Index rows = policy_in_dim(p.nx, p.nd, p.nu) - p.nx;
  Matrix tail(rows, batch.cols());
  double sx = p.in_scale(0);
  double su = p.in_scale(p.in_scale.size() - 1);
  Eigen::Index at = 0;
  tail.middleRows(at, p.nd) = batch.d;
  at += p.nd;
  tail.middleRows(at, 1) = batch.r;
  at += 1;
  tail.middleRows(at, p.nx) = clamp_bounds(batch.xlo, sx);
  at += p.nx;
  tail.middleRows(at, p.nx) = clamp_bounds(batch.xhi, sx);
  at += p.nx;
  tail.middleRows(at, p.nu) = clamp_bounds(batch.ulo, su);
  at += p.nu;
  tail.middleRows(at, p.nu) = clamp_bounds(batch.uhi, su);
  Eigen::ArrayXd inv = p.in_scale.tail(rows).array().inverse();
  tail.array().colwise() *= inv;
  return tail;
}

void check_batch(const Policy& p, const ControlBatch& batch) {
  Eigen::Index b = batch.cols();
  require_shape(batch.x, p.nx, b, "batch.x");
  require_shape(batch.d, p.nd, b, "batch.d");
  require_shape(batch.r, 1, b, "batch.r");
  require_shape(batch.xlo, p.nx, b, "batch.xlo");
  require_shape(batch.xhi, p.nx, b, "batch.xhi");
  require_shape(batch.ulo, p.nu, b, "batch.ulo");
  require_shape(batch.uhi, p.nu, b, "batch.uhi");
}

}  // namespace

Eigen::Index policy_in_dim(Eigen::Index nx, Eigen::Index nd, Eigen::Index nu) {
  return 3 * nx + nd + 1 + 2 * nu;
}

Vector default_in_scale(const Dataset& ds, Eigen::Index nx, Eigen::Index nd, Eigen::Index nu) {
  if (ds.X.cols() != nx || ds.D.cols() != nd || ds.U.cols() != nu) {
    throw ShapeError(msg("dataset is ", ds.X.cols(), "/", ds.D.cols(), "/", ds.U.cols(),
                         " states/disturbances/inputs, policy wants ", nx, "/", nd, "/", nu));
  }
  auto train_rows = [&](const auto& series) {
    return series.middleRows(ds.train.begin, ds.train.size);
  };
  double sx = std::max(train_rows(ds.X).cwiseAbs().maxCoeff(), 1e-3);
  double su = std::max({train_rows(ds.ulo).cwiseAbs().maxCoeff(),
                        train_rows(ds.uhi).cwiseAbs().maxCoeff(), 1e-3});
  Vector scale(policy_in_dim(nx, nd, nu));
  Eigen::Index at = 0;
  scale.segment(at, nx).setConstant(sx);
  at += nx;
  for (Eigen::Index j = 0; j < nd; ++j) {
    scale(at + j) = std::max(train_rows(ds.D).col(j).cwiseAbs().maxCoeff(), 1e-3);
  }
  at += nd;
  scale(at) = sx;
  at += 1;
  scale.segment(at, 2 * nx).setConstant(sx);
  at += 2 * nx;
  scale.segment(at, 2 * nu).setConstant(su);
  return scale;
}

Policy make_policy(Eigen::Index nx, Eigen::Index nd, Eigen::Index nu, Eigen::Index hidden,
                   Rng& rng, Vector in_scale) {
  if (nx < 1 || nd < 0 || nu < 1 || hidden < 1) {
    throw ConfigError(msg("policy dims nx=", nx, " nd=", nd, " nu=", nu, " hidden=", hidden));
  }
  Eigen::Index in_dim = policy_in_dim(nx, nd, nu);
  if (in_scale.size() != in_dim) {
    throw ShapeError(msg("in_scale has ", in_scale.size(), " entries, expected ", in_dim));
  }
  if ((in_scale.array() <= 0.0).any()) {
    throw ConfigError("in_scale entries must be positive");
  }
  Policy p;
  p.nx = nx;
  p.nd = nd;
  p.nu = nu;
  p.in_scale = std::move(in_scale);
  double a1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
  p.W1.resize(hidden, in_dim);
  for (Eigen::Index i = 0; i < hidden; ++i) {
    for (Eigen::Index j = 0; j < in_dim; ++j) {
      p.W1(i, j) = rng.uniform(-a1, a1);
    }
  }
  p.b1 = Matrix::Zero(hidden, 1);
  double a2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  p.W2.resize(nu, hidden);
  for (Eigen::Index i = 0; i < nu; ++i) {
    for (Eigen::Index j = 0; j < hidden; ++j) {
      p.W2(i, j) = rng.uniform(-a2, a2);
    }
  }
  p.b2 = Matrix::Zero(nu, 1);
  return p;
}

std::vector<ParamRef> param_refs(Policy& p) {
  return {{"W1", &p.W1}, {"b1", &p.b1}, {"W2", &p.W2}, {"b2", &p.b2}};
}

ControlBatch sample_control_batch(const Dataset& ds, Dataset::Split split, Eigen::Index count,
                                  Eigen::Index observed, Rng& rng) {
  if (count < 1) {
    throw ConfigError(msg("control batch size must be >= 1, got ", count));
  }
  if (observed < 0 || observed >= ds.X.cols()) {
    throw ConfigError(msg("observed index ", observed, " out of range for ", ds.X.cols(),
                          " states"));
  }
  if (split.size < 2) {
    throw ConfigError(msg("split of ", split.size, " samples has no transition to sample"));
  }
  Eigen::Index nx = ds.X.cols();
  Eigen::Index nd = ds.D.cols();
  Eigen::Index nu = ds.U.cols();
  ControlBatch b;
  b.x.resize(nx, count);
  b.d.resize(nd, count);
  b.r.resize(1, count);
  b.xlo = Matrix::Constant(nx, count, -kBoundSentinel);
  b.xhi = Matrix::Constant(nx, count, kBoundSentinel);
  b.ulo.resize(nu, count);
  b.uhi.resize(nu, count);
  b.rows.resize(static_cast<size_t>(count));
  for (Eigen::Index j = 0; j < count; ++j) {
    for (Eigen::Index i = 0; i < nx; ++i) {
      b.x(i, j) = rng.uniform(kStateLo, kStateHi);
    }
    b.r(0, j) = rng.uniform(kRefLo, kRefHi);
    // The last split row is excluded so every sampled row has a successor
    // transition within the split.
    Eigen::Index t = split.begin + rng.uniform_int(0, static_cast<int>(split.size) - 2);
    b.rows[static_cast<size_t>(j)] = t;
    b.d.col(j) = ds.D.row(t).transpose();
    b.xlo(observed, j) = ds.xlo(t);
    b.xhi(observed, j) = ds.xhi(t);
    b.ulo.col(j).setConstant(ds.ulo(t));
    b.uhi.col(j).setConstant(ds.uhi(t));
  }
  return b;
}

Matrix slack(const Matrix& x, const Matrix& lo, const Matrix& hi) {
  if (lo.rows() != x.rows() || lo.cols() != x.cols() || hi.rows() != x.rows() ||
      hi.cols() != x.cols()) {
    throw ShapeError(msg("slack bounds ", shape_str(lo), "/", shape_str(hi),
                         " do not match value ", shape_str(x)));
  }
  if ((lo.array() > hi.array()).any()) {
    throw ConfigError("slack lower bound exceeds upper bound");
  }
  return (lo - x).cwiseMax(0.0) + (x - hi).cwiseMax(0.0);
}

Matrix assemble_features(const Policy& p, const ControlBatch& batch) {
  check_batch(p, batch);
  Matrix f(policy_in_dim(p.nx, p.nd, p.nu), batch.cols());
  Eigen::ArrayXd inv = p.in_scale.head(p.nx).array().inverse();
  f.topRows(p.nx) = (batch.x.array().colwise() * inv).matrix();
  f.bottomRows(f.rows() - p.nx) = tail_features(p, batch);
  return f;
}

Matrix policy_eval(const Policy& p, const ControlBatch& batch) {
  Matrix f = assemble_features(p, batch);
  Matrix h = ((p.W1 * f).colwise() + Vector(p.b1.col(0))).cwiseMax(0.0);
  return (p.W2 * h).colwise() + Vector(p.b2.col(0));
}

StepEval eval_control_step(const Policy& p, const Model& m, const ControlBatch& batch) {
  StepEval s;
  s.u = policy_eval(p, batch);
  s.su = slack(s.u, batch.ulo, batch.uhi);
  s.x_next = eval_step(m, batch.x, s.u, batch.d);
  s.sx = slack(s.x_next, batch.xlo, batch.xhi);
  return s;
}

double control_objective(const Policy& p, const Model& m, const ControlBatch& batch,
                         Eigen::Index observed, const LossWeights& w, int horizon) {
  if (horizon < 1) {
    throw ConfigError(msg("control horizon must be >= 1, got ", horizon));
  }
  double inv_b = 1.0 / static_cast<double>(batch.cols());
  ControlBatch stage = batch;
  double total = 0.0;
  for (int step = 0; step < horizon; ++step) {
    StepEval s = eval_control_step(p, m, stage);
    Matrix err = batch.r - s.x_next.row(observed);
    total += w.q_ref * inv_b * err.squaredNorm() + w.q_input * inv_b * s.u.squaredNorm() +
             w.q_sx * inv_b * s.sx.squaredNorm() + w.q_su * inv_b * s.su.squaredNorm();
    stage.x = s.x_next;
  }
  return total;
}

BoundPolicy bind_policy(ad::Tape& tape, const Policy& p) {
  return {tape.leaf(p.W1), tape.leaf(p.b1), tape.leaf(p.W2), tape.leaf(p.b2)};
}

ad::Var policy_forward(ad::Tape& tape, const BoundPolicy& bp, ad::Var features) {
  ad::Var ones = tape.leaf(Matrix::Ones(1, features.cols()));
  ad::Var h = relu(add(matmul(bp.W1, features), matmul(bp.b1, ones)));
  return add(matmul(bp.W2, h), matmul(bp.b2, ones));
}

ad::Var features_on_tape(ad::Tape& tape, const Policy& p, ad::Var x, const ControlBatch& batch) {
  check_batch(p, batch);
  Matrix inv = (p.in_scale.head(p.nx).array().inverse()).matrix();
  ad::Var scaled =
      hadamard(x, tape.leaf(inv.replicate(1, batch.cols())));
  return concat_rows(scaled, tape.leaf(tail_features(p, batch)));
}

ad::Var control_loss(ad::Tape& tape, const BoundPolicy& bp, const Policy& p,
                     const BoundModel& bm, const ControlBatch& batch, Eigen::Index observed,
                     const LossWeights& w, int horizon, std::optional<ad::Var> x_var,
                     ControlGraph* first_step) {
  if (horizon < 1) {
    throw ConfigError(msg("control horizon must be >= 1, got ", horizon));
  }
  if (observed < 0 || observed >= p.nx) {
    throw ConfigError(msg("observed index ", observed, " out of range for ", p.nx, " states"));
  }
  check_batch(p, batch);
  double inv_b = 1.0 / static_cast<double>(batch.cols());
  ad::Var x = x_var.value_or(ad::Var{});
  ad::Var d = tape.leaf(batch.d);
  ad::Var r = tape.leaf(batch.r);
  ad::Var xlo = tape.leaf(batch.xlo);
  ad::Var xhi = tape.leaf(batch.xhi);
  ad::Var ulo = tape.leaf(batch.ulo);
  ad::Var uhi = tape.leaf(batch.uhi);
  ad::Var total{};
  for (int step = 0; step < horizon; ++step) {
    ad::Var f;
    if (step == 0 && !x_var.has_value()) {
      x = tape.leaf(batch.x);
      f = tape.leaf(assemble_features(p, batch));
    } else {
      f = features_on_tape(tape, p, x, batch);
    }
    ad::Var u = policy_forward(tape, bp, f);
    ad::Var su = add(relu(sub(ulo, u)), relu(sub(u, uhi)));
    x = model_step(tape, bm, x, u, d);
    ad::Var sx = add(relu(sub(xlo, x)), relu(sub(x, xhi)));
    ad::Var err = sub(r, slice_rows(x, observed, 1));
    ad::Var stage = add(add(scale(sum_sq(err), w.q_ref * inv_b),
                            scale(sum_sq(u), w.q_input * inv_b)),
                        add(scale(sum_sq(sx), w.q_sx * inv_b),
                            scale(sum_sq(su), w.q_su * inv_b)));
    if (step == 0 && first_step != nullptr) {
      *first_step = ControlGraph{u, x, stage};
    }
    total = step == 0 ? stage : add(total, stage);
  }
  return total;
}

PolicyTrainResult train_policy(Policy init, const Model& model, const Dataset& ds,
                               const PolicyTrainConfig& cfg, Eigen::Index observed) {
  if (cfg.epochs < 0) {
    throw ConfigError(msg("policy epochs must be >= 0, got ", cfg.epochs));
  }
  if (model.nx != init.nx || model.nd != init.nd || model.nu != init.nu) {
    throw ShapeError(msg("model is ", model.nx, "/", model.nu, "/", model.nd,
                         " states/inputs/disturbances, policy wants ", init.nx, "/", init.nu,
                         "/", init.nd));
  }
  PolicyTrainResult res;
  res.policy = std::move(init);
  Optimizer opt(cfg.optim);
  std::vector<ParamRef> refs = param_refs(res.policy);
  ad::Tape tape;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng stream = substream(cfg.seed, "sampling", static_cast<uint64_t>(epoch));
    ControlBatch batch =
        sample_control_batch(ds, ds.train, cfg.batch, observed, stream);
    tape.reset();
    BoundPolicy bp = bind_policy(tape, res.policy);
    BoundModel bm = bind_model(tape, model);
    try {
      ad::Var loss = control_loss(tape, bp, res.policy, bm, batch, observed, cfg.weights,
                                  cfg.horizon);
      tape.backward(loss);
      res.curve.push_back({epoch, loss.value()(0, 0)});
      opt.step(refs, {bp.W1.grad(), bp.b1.grad(), bp.W2.grad(), bp.b2.grad()});
    } catch (const NumericError& e) {
      throw NumericError(msg("policy training diverged at epoch ", epoch, ": ", e.what()));
    }
  }
  return res;
}

void save_policy(const Policy& p, const std::string& path) {
  nlohmann::json j;
  j["format"] = "dpc-policy";
  j["version"] = 1;
  j["nx"] = p.nx;
  j["nd"] = p.nd;
  j["nu"] = p.nu;
  j["hidden"] = p.W1.rows();
  j["W1"] = matrix_to_json(p.W1);
  j["b1"] = matrix_to_json(p.b1);
  j["W2"] = matrix_to_json(p.W2);
  j["b2"] = matrix_to_json(p.b2);
  j["in_scale"] = matrix_to_json(Matrix(p.in_scale));
  save_json(j, path);
}

Policy load_policy(const std::string& path) {
  nlohmann::json j = load_json(path);
  if (!j.contains("format") || j["format"] != "dpc-policy") {
    throw ConfigError(msg(path, " is not a policy file"));
  }
  if (!j.contains("version") || j["version"] != 1) {
    throw ConfigError(msg(path, " has an unsupported policy version"));
  }
  Policy p;
  p.nx = j.at("nx").get<Eigen::Index>();
  p.nd = j.at("nd").get<Eigen::Index>();
  p.nu = j.at("nu").get<Eigen::Index>();
  Eigen::Index hidden = j.at("hidden").get<Eigen::Index>();
  Eigen::Index in_dim = policy_in_dim(p.nx, p.nd, p.nu);
  p.W1 = json_to_matrix(j.at("W1"), hidden, in_dim, "W1");
  p.b1 = json_to_matrix(j.at("b1"), hidden, 1, "b1");
  p.W2 = json_to_matrix(j.at("W2"), p.nu, hidden, "W2");
  p.b2 = json_to_matrix(j.at("b2"), p.nu, 1, "b2");
  p.in_scale = Vector(json_to_matrix(j.at("in_scale"), in_dim, 1, "in_scale"));
  return p;
}

}  // namespace dpc
