#include "dpc/tape.hpp"

#include <cmath>

namespace dpc::ad {

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kMatMul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kHadamard: return "hadamard";
    case Op::kScale: return "scale";
    case Op::kConcatRows: return "concat_rows";
    case Op::kSliceRows: return "slice_rows";
    case Op::kRelu: return "relu";
    case Op::kSigmoid: return "sigmoid";
    case Op::kTanh: return "tanh";
    case Op::kExp: return "exp";
    case Op::kSoftmaxRows: return "softmax_rows";
    case Op::kMse: return "mse";
    case Op::kSumSq: return "sum_sq";
  }
  return "?";
}

const Matrix& Var::value() const { return tape->at(id).value; }
const Matrix& Var::grad() const { return tape->at(id).grad; }
Eigen::Index Var::rows() const { return value().rows(); }
Eigen::Index Var::cols() const { return value().cols(); }

int Tape::push(Node node) {
  if (!node.value.allFinite())
    throw NumericError(msg("non-finite result in op ", op_name(node.op)));
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

Var Tape::leaf(Matrix value) {
  if (value.size() == 0) throw ShapeError("leaf: empty matrix");
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  return Var{this, push(std::move(n))};
}

void Tape::reset() { nodes_.clear(); }

namespace {

void check_same_tape(Var a, Var b, Op op) {
  if (a.tape == nullptr || b.tape == nullptr || a.tape != b.tape)
    throw ContractError(msg(op_name(op), ": operands from different tapes"));
}

void check_same_shape(Var a, Var b, Op op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(msg(op_name(op), ": shape mismatch ", shape_str(a.value()),
                         " vs ", shape_str(b.value())));
}

Matrix softmax_rows_value(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double m = x.row(i).maxCoeff();
    Eigen::RowVectorXd e = (x.row(i).array() - m).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

}  // namespace

Var binary_op(Op op, Var a, Var b) {
  check_same_tape(a, b, op);
  Tape& t = *a.tape;
  Tape::Node n;
  n.op = op;
  n.parent0 = a.id;
  n.parent1 = b.id;
  const Matrix& va = a.value();
  const Matrix& vb = b.value();
  switch (op) {
    case Op::kMatMul:
      if (va.cols() != vb.rows())
        throw ShapeError(msg("matmul: inner dimensions differ ", shape_str(va), " * ", shape_str(vb)));
      n.value = va * vb;
      break;
    case Op::kAdd:
      check_same_shape(a, b, op);
      n.value = va + vb;
      break;
    case Op::kSub:
      check_same_shape(a, b, op);
      n.value = va - vb;
      break;
    case Op::kHadamard:
      check_same_shape(a, b, op);
      n.value = va.cwiseProduct(vb);
      break;
    case Op::kConcatRows:
      if (va.cols() != vb.cols())
        throw ShapeError(msg("concat_rows: column counts differ ", shape_str(va), " vs ", shape_str(vb)));
      n.value.resize(va.rows() + vb.rows(), va.cols());
      n.value.topRows(va.rows()) = va;
      n.value.bottomRows(vb.rows()) = vb;
      break;
    case Op::kMse: {
      check_same_shape(a, b, op);
      double d = (va - vb).squaredNorm() / static_cast<double>(va.size());
      n.value = Matrix::Constant(1, 1, d);
      break;
    }
    default:
      throw ContractError(msg("binary_op: bad op ", op_name(op)));
  }
  return Var{&t, t.push(std::move(n))};
}

Var unary_op(Op op, Var a, double scalar) {
  if (a.tape == nullptr) throw ContractError(msg(op_name(op), ": unbound operand"));
  Tape& t = *a.tape;
  Tape::Node n;
  n.op = op;
  n.parent0 = a.id;
  n.scalar = scalar;
  const Matrix& v = a.value();
  switch (op) {
    case Op::kScale:
      n.value = scalar * v;
      break;
    case Op::kRelu:
      n.value = v.cwiseMax(0.0);
      break;
    case Op::kSigmoid:
      n.value = (1.0 / (1.0 + (-v.array()).exp())).matrix();
      break;
    case Op::kTanh:
      n.value = v.array().tanh().matrix();
      break;
    case Op::kExp:
      n.value = v.array().exp().matrix();
      break;
    case Op::kSoftmaxRows:
      n.value = softmax_rows_value(v);
      break;
    case Op::kSumSq:
      n.value = Matrix::Constant(1, 1, v.squaredNorm());
      break;
    default:
      throw ContractError(msg("unary_op: bad op ", op_name(op)));
  }
  return Var{&t, t.push(std::move(n))};
}

Var matmul(Var a, Var b) { return binary_op(Op::kMatMul, a, b); }
Var add(Var a, Var b) { return binary_op(Op::kAdd, a, b); }
Var sub(Var a, Var b) { return binary_op(Op::kSub, a, b); }
Var hadamard(Var a, Var b) { return binary_op(Op::kHadamard, a, b); }
Var concat_rows(Var a, Var b) { return binary_op(Op::kConcatRows, a, b); }
Var mse(Var a, Var b) { return binary_op(Op::kMse, a, b); }
Var scale(Var a, double s) { return unary_op(Op::kScale, a, s); }
Var relu(Var a) { return unary_op(Op::kRelu, a, 0.0); }
Var sigmoid(Var a) { return unary_op(Op::kSigmoid, a, 0.0); }
Var tanh(Var a) { return unary_op(Op::kTanh, a, 0.0); }
Var exp(Var a) { return unary_op(Op::kExp, a, 0.0); }
Var softmax_rows(Var a) { return unary_op(Op::kSoftmaxRows, a, 0.0); }
Var sum_sq(Var a) { return unary_op(Op::kSumSq, a, 0.0); }

Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count) {
  if (a.tape == nullptr) throw ContractError("slice_rows: unbound operand");
  if (begin < 0 || count <= 0 || begin + count > a.rows())
    throw ShapeError(msg("slice_rows: window [", begin, ", ", begin + count,
                         ") out of range for ", shape_str(a.value())));
  Tape& t = *a.tape;
  Tape::Node n;
  n.op = Op::kSliceRows;
  n.parent0 = a.id;
  n.row_begin = begin;
  n.value = a.value().middleRows(begin, count);
  return Var{&t, t.push(std::move(n))};
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw ContractError("backward: loss from another tape");
  const Node& ln = at(loss.id);
  if (ln.value.rows() != 1 || ln.value.cols() != 1)
    throw ContractError(msg("backward: loss must be 1x1, got ", shape_str(ln.value)));

  for (Node& n : nodes_) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  at(loss.id).grad(0, 0) = 1.0;

  for (int i = loss.id; i >= 0; --i) {
    Node& n = at(i);
    if (n.op == Op::kLeaf) continue;
    const Matrix& g = n.grad;
    Node& p0 = at(n.parent0);
    switch (n.op) {
      case Op::kMatMul: {
        Node& p1 = at(n.parent1);
        p0.grad.noalias() += g * p1.value.transpose();
        p1.grad.noalias() += p0.value.transpose() * g;
        break;
      }
      case Op::kAdd:
        p0.grad += g;
        at(n.parent1).grad += g;
        break;
      case Op::kSub:
        p0.grad += g;
        at(n.parent1).grad -= g;
        break;
      case Op::kHadamard: {
        Node& p1 = at(n.parent1);
        p0.grad += g.cwiseProduct(p1.value);
        p1.grad += g.cwiseProduct(p0.value);
        break;
      }
      case Op::kScale:
        p0.grad += n.scalar * g;
        break;
      case Op::kConcatRows: {
        Node& p1 = at(n.parent1);
        p0.grad += g.topRows(p0.value.rows());
        p1.grad += g.bottomRows(p1.value.rows());
        break;
      }
      case Op::kSliceRows:
        p0.grad.middleRows(n.row_begin, n.value.rows()) += g;
        break;
      case Op::kRelu:
        p0.grad.array() += g.array() * (p0.value.array() > 0.0).cast<double>();
        break;
      case Op::kSigmoid:
        p0.grad.array() += g.array() * n.value.array() * (1.0 - n.value.array());
        break;
      case Op::kTanh:
        p0.grad.array() += g.array() * (1.0 - n.value.array().square());
        break;
      case Op::kExp:
        p0.grad.array() += g.array() * n.value.array();
        break;
      case Op::kSoftmaxRows: {
        // Per row: dx = s .* (dy - <dy, s>)
        for (Eigen::Index r = 0; r < n.value.rows(); ++r) {
          double dot = g.row(r).dot(n.value.row(r));
          p0.grad.row(r).array() +=
              n.value.row(r).array() * (g.row(r).array() - dot);
        }
        break;
      }
      case Op::kMse: {
        Node& p1 = at(n.parent1);
        double s = 2.0 * g(0, 0) / static_cast<double>(p0.value.size());
        Matrix d = s * (p0.value - p1.value);
        p0.grad += d;
        p1.grad -= d;
        break;
      }
      case Op::kSumSq:
        p0.grad += 2.0 * g(0, 0) * p0.value;
        break;
      case Op::kLeaf:
        break;
    }
    if (!p0.grad.allFinite())
      throw NumericError(msg("non-finite gradient out of op ", op_name(n.op)));
  }
}

}  // namespace dpc::ad
