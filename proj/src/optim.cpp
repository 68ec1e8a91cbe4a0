#include "dpc/optim.hpp"

#include <cmath>

namespace dpc {

void Optimizer::step(const std::vector<ParamRef>& params, const std::vector<Matrix>& grads) {
  if (params.size() != grads.size())
    throw ContractError(msg("optimizer step: ", params.size(), " params vs ", grads.size(), " grads"));
  if (m_.empty()) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const ParamRef& p : params) {
      m_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
      v_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
    }
  } else if (m_.size() != params.size()) {
    throw ContractError(msg("optimizer step: parameter count changed from ", m_.size(),
                            " to ", params.size()));
  }

  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));

  for (size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i].value;
    const Matrix& g = grads[i];
    if (g.rows() != p.rows() || g.cols() != p.cols())
      throw ShapeError(msg("optimizer step: gradient for '", params[i].name, "' is ",
                           shape_str(g), ", parameter is ", shape_str(p)));
    if (!g.allFinite())
      throw NumericError(msg("optimizer step: non-finite gradient for '", params[i].name, "'"));

    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    Matrix mhat = m_[i] / bc1;
    Matrix vhat = v_[i] / bc2;
    Matrix update = mhat.array() / (vhat.array().sqrt() + cfg_.eps);
    if (cfg_.algo == OptAlgo::kAdamW) update += cfg_.weight_decay * p;
    p -= cfg_.lr * update;
  }
}

}  // namespace dpc
