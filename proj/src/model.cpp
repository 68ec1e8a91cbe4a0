#include "dpc/model.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "dpc/json_io.hpp"

namespace dpc {

const char* kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLin: return "LIN";
    case ModelKind::kRnn: return "RNN";
    case ModelKind::kGru: return "GRU";
    case ModelKind::kSsm: return "SSM";
  }
  return "?";
}

ModelKind kind_from_name(const std::string& name) {
  std::string up = name;
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (up == "LIN") return ModelKind::kLin;
  if (up == "RNN") return ModelKind::kRnn;
  if (up == "GRU") return ModelKind::kGru;
  if (up == "SSM") return ModelKind::kSsm;
  throw ConfigError(msg("unknown model kind '", name, "'"));
}

namespace {

Matrix draw(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi, double scale) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.uniform(lo, hi);
  return m;
}

void check_dims(const Model& m) {
  if (m.nx <= 0 || m.nu <= 0 || m.nd <= 0)
    throw ConfigError(msg("model dimensions must be positive, got nx=", m.nx,
                          " nu=", m.nu, " nd=", m.nd));
}

void check_eps(const SsmParams& p) {
  double lo = p.allow_nondissipative ? -1.0 : 0.0;
  if (!(p.eps >= lo && p.eps < 1.0))
    throw ConfigError(msg("ssm eps = ", p.eps, " outside [", lo, ", 1)"));
}

}  // namespace

Model make_model(ModelKind kind, Eigen::Index nx, Eigen::Index nu, Eigen::Index nd,
                 Rng& rng, double eps) {
  Model m;
  m.kind = kind;
  m.nx = nx;
  m.nu = nu;
  m.nd = nd;
  check_dims(m);
  double ax = 1.0 / std::sqrt(static_cast<double>(nx));
  double bu = 1.0 / std::sqrt(static_cast<double>(nu));
  double ed = 1.0 / std::sqrt(static_cast<double>(nd));
  switch (kind) {
    case ModelKind::kLin: {
      LinParams p;
      p.A = draw(rng, nx, nx, -1, 1, ax);
      p.B = draw(rng, nx, nu, -0.1, 0.1, bu);
      p.E = draw(rng, nx, nd, -0.1, 0.1, ed);
      m.params = std::move(p);
      break;
    }
    case ModelKind::kRnn: {
      RnnParams p;
      p.A = draw(rng, nx, nx, -1, 1, ax);
      p.B = draw(rng, nx, nu, -0.1, 0.1, bu);
      p.E = draw(rng, nx, nd, -0.1, 0.1, ed);
      m.params = std::move(p);
      break;
    }
    case ModelKind::kGru: {
      GruParams p;
      p.A1 = draw(rng, nx, nx, -1, 1, ax);
      p.B1 = draw(rng, nx, nu, -0.1, 0.1, bu);
      p.E1 = draw(rng, nx, nd, -0.1, 0.1, ed);
      p.A2 = draw(rng, nx, nx, -1, 1, ax);
      p.B2 = draw(rng, nx, nu, -0.1, 0.1, bu);
      p.E2 = draw(rng, nx, nd, -0.1, 0.1, ed);
      p.A3 = draw(rng, nx, nx, -1, 1, ax);
      p.B3 = draw(rng, nx, nu, -0.1, 0.1, bu);
      p.E3 = draw(rng, nx, nd, -0.1, 0.1, ed);
      m.params = std::move(p);
      break;
    }
    case ModelKind::kSsm: {
      SsmParams p;
      p.A_raw = draw(rng, nx, nx, -1, 1, 1.0) + 2.0 * Matrix::Identity(nx, nx);
      p.M_raw = draw(rng, nx, nx, -0.3, 0.3, 1.0) + Matrix::Constant(nx, nx, -3.0);
      p.B = draw(rng, nx, nu, -0.1, 0.1, bu);
      p.E = draw(rng, nx, nd, -0.1, 0.1, ed);
      p.eps = eps;
      check_eps(p);
      m.params = std::move(p);
      break;
    }
  }
  return m;
}

std::vector<ParamRef> param_refs(Model& m) {
  switch (m.kind) {
    case ModelKind::kLin: {
      auto& p = std::get<LinParams>(m.params);
      return {{"A", &p.A}, {"B", &p.B}, {"E", &p.E}};
    }
    case ModelKind::kRnn: {
      auto& p = std::get<RnnParams>(m.params);
      return {{"A", &p.A}, {"B", &p.B}, {"E", &p.E}};
    }
    case ModelKind::kGru: {
      auto& p = std::get<GruParams>(m.params);
      return {{"A1", &p.A1}, {"B1", &p.B1}, {"E1", &p.E1},
              {"A2", &p.A2}, {"B2", &p.B2}, {"E2", &p.E2},
              {"A3", &p.A3}, {"B3", &p.B3}, {"E3", &p.E3}};
    }
    case ModelKind::kSsm: {
      auto& p = std::get<SsmParams>(m.params);
      return {{"A_raw", &p.A_raw}, {"M_raw", &p.M_raw}, {"B", &p.B}, {"E", &p.E}};
    }
  }
  throw ContractError("param_refs: bad kind");
}

std::vector<std::pair<std::string, const Matrix*>> param_views(const Model& m) {
  std::vector<std::pair<std::string, const Matrix*>> views;
  for (auto& r : param_refs(const_cast<Model&>(m))) {
    views.emplace_back(r.name, r.value);
  }
  return views;
}

Matrix materialize_ssm_A(const SsmParams& p) {
  check_eps(p);
  if (p.A_raw.rows() != p.A_raw.cols() || p.M_raw.rows() != p.A_raw.rows() ||
      p.M_raw.cols() != p.A_raw.cols())
    throw ShapeError(msg("materialize_ssm_A: A_raw ", shape_str(p.A_raw), " vs M_raw ",
                         shape_str(p.M_raw)));
  Matrix soft(p.A_raw.rows(), p.A_raw.cols());
  for (Eigen::Index i = 0; i < p.A_raw.rows(); ++i) {
    double mx = p.A_raw.row(i).maxCoeff();
    Eigen::RowVectorXd e = (p.A_raw.row(i).array() - mx).exp();
    soft.row(i) = e / e.sum();
  }
  Matrix damp = 1.0 - p.eps * (1.0 / (1.0 + (-p.M_raw.array()).exp()));
  return soft.cwiseProduct(damp);
}

Matrix effective_A(const Model& m) {
  switch (m.kind) {
    case ModelKind::kLin: return std::get<LinParams>(m.params).A;
    case ModelKind::kRnn: return std::get<RnnParams>(m.params).A;
    case ModelKind::kSsm: return materialize_ssm_A(std::get<SsmParams>(m.params));
    case ModelKind::kGru:
      throw ConfigError("effective_A: GRU has no single transition matrix");
  }
  throw ContractError("effective_A: bad kind");
}

namespace {

void check_step_shapes(const Model& m, const Matrix& x, const Matrix& u, const Matrix& d) {
  if (x.rows() != m.nx || u.rows() != m.nu || d.rows() != m.nd ||
      x.cols() != u.cols() || x.cols() != d.cols())
    throw ShapeError(msg("model step: x ", shape_str(x), ", u ", shape_str(u), ", d ",
                         shape_str(d), " incompatible with nx=", m.nx, " nu=", m.nu,
                         " nd=", m.nd));
}

inline Matrix sigmoid_m(const Matrix& v) {
  return (1.0 / (1.0 + (-v.array()).exp())).matrix();
}

}  // namespace

Matrix eval_step(const Model& m, const Matrix& x, const Matrix& u, const Matrix& d) {
  check_step_shapes(m, x, u, d);
  switch (m.kind) {
    case ModelKind::kLin: {
      const auto& p = std::get<LinParams>(m.params);
      return p.A * x + p.B * u + p.E * d;
    }
    case ModelKind::kRnn: {
      const auto& p = std::get<RnnParams>(m.params);
      return (p.A * x + p.B * u + p.E * d).cwiseMax(0.0);
    }
    case ModelKind::kGru: {
      const auto& p = std::get<GruParams>(m.params);
      Matrix w = sigmoid_m(p.A1 * x + p.B1 * u + p.E1 * d);
      Matrix n = (w.cwiseProduct(p.A2 * x) + p.B2 * u + p.E2 * d).array().tanh().matrix();
      Matrix z = sigmoid_m(p.A3 * x + p.B3 * u + p.E3 * d);
      return (1.0 - z.array()).matrix().cwiseProduct(n) + z.cwiseProduct(x);
    }
    case ModelKind::kSsm: {
      const auto& p = std::get<SsmParams>(m.params);
      return materialize_ssm_A(p) * x + p.B * u + p.E * d;
    }
  }
  throw ContractError("eval_step: bad kind");
}

BoundModel bind_model(ad::Tape& tape, const Model& m) {
  BoundModel bm;
  bm.kind = m.kind;
  bm.nx = m.nx;
  bm.nu = m.nu;
  bm.nd = m.nd;
  auto refs = param_refs(const_cast<Model&>(m));
  bm.vars.reserve(refs.size());
  for (const ParamRef& r : refs) bm.vars.push_back(tape.leaf(*r.value));
  if (m.kind == ModelKind::kSsm) {
    const auto& p = std::get<SsmParams>(m.params);
    check_eps(p);
    ad::Var a_raw = bm.vars[0];
    ad::Var m_raw = bm.vars[1];
    ad::Var ones = tape.leaf(Matrix::Ones(m.nx, m.nx));
    ad::Var damp = ad::sub(ones, ad::scale(ad::sigmoid(m_raw), p.eps));
    bm.ssm_A = ad::hadamard(ad::softmax_rows(a_raw), damp);
  }
  return bm;
}

ad::Var model_step(ad::Tape& tape, const BoundModel& bm, ad::Var x, ad::Var u, ad::Var d) {
  using namespace ad;
  switch (bm.kind) {
    case ModelKind::kLin: {
      return add(add(matmul(bm.vars[0], x), matmul(bm.vars[1], u)), matmul(bm.vars[2], d));
    }
    case ModelKind::kRnn: {
      return relu(add(add(matmul(bm.vars[0], x), matmul(bm.vars[1], u)), matmul(bm.vars[2], d)));
    }
    case ModelKind::kGru: {
      Var w = sigmoid(add(add(matmul(bm.vars[0], x), matmul(bm.vars[1], u)), matmul(bm.vars[2], d)));
      Var n = ad::tanh(add(add(hadamard(w, matmul(bm.vars[3], x)), matmul(bm.vars[4], u)),
                           matmul(bm.vars[5], d)));
      Var z = sigmoid(add(add(matmul(bm.vars[6], x), matmul(bm.vars[7], u)), matmul(bm.vars[8], d)));
      Var ones = tape.leaf(Matrix::Ones(x.rows(), x.cols()));
      return add(hadamard(sub(ones, z), n), hadamard(z, x));
    }
    case ModelKind::kSsm: {
      return add(add(matmul(bm.ssm_A, x), matmul(bm.vars[2], u)), matmul(bm.vars[3], d));
    }
  }
  throw ContractError("model_step: bad kind");
}

std::vector<Matrix> model_grads(const BoundModel& bm) {
  std::vector<Matrix> out;
  out.reserve(bm.vars.size());
  for (const ad::Var& v : bm.vars) out.push_back(v.grad());
  return out;
}

void save_model(const Model& m, const std::string& path) {
  nlohmann::json j;
  j["format"] = "dpc-model";
  j["version"] = 1;
  j["kind"] = kind_name(m.kind);
  j["nx"] = m.nx;
  j["nu"] = m.nu;
  j["nd"] = m.nd;
  nlohmann::json params;
  for (const ParamRef& r : param_refs(const_cast<Model&>(m)))
    params[r.name] = matrix_to_json(*r.value);
  j["params"] = params;
  if (m.kind == ModelKind::kSsm) {
    const auto& p = std::get<SsmParams>(m.params);
    j["eps"] = p.eps;
    j["allow_nondissipative"] = p.allow_nondissipative;
  }
  save_json(j, path);
}

Model load_model(const std::string& path) {
  nlohmann::json j = load_json(path);
  if (j.value("format", "") != "dpc-model")
    throw ConfigError(msg(path, ": not a model file"));
  if (j.value("version", 0) != 1)
    throw ConfigError(msg(path, ": unsupported model version ", j.value("version", 0)));
  Model m;
  m.kind = kind_from_name(j.at("kind").get<std::string>());
  m.nx = j.at("nx").get<Eigen::Index>();
  m.nu = j.at("nu").get<Eigen::Index>();
  m.nd = j.at("nd").get<Eigen::Index>();
  check_dims(m);
  switch (m.kind) {
    case ModelKind::kLin: m.params = LinParams{}; break;
    case ModelKind::kRnn: m.params = RnnParams{}; break;
    case ModelKind::kGru: m.params = GruParams{}; break;
    case ModelKind::kSsm: {
      SsmParams p;
      p.eps = j.at("eps").get<double>();
      p.allow_nondissipative = j.value("allow_nondissipative", false);
      m.params = std::move(p);
      break;
    }
  }
  const auto& params = j.at("params");
  for (const ParamRef& r : param_refs(m)) {
    Eigen::Index cols = m.nx;
    if (r.name.front() == 'B') cols = m.nu;
    if (r.name.front() == 'E') cols = m.nd;
    *r.value = json_to_matrix(params.at(r.name), m.nx, cols, r.name);
  }
  if (m.kind == ModelKind::kSsm) check_eps(std::get<SsmParams>(m.params));
  return m;
}

}  // namespace dpc
