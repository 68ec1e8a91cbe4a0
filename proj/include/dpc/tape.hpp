#pragma once

#include <vector>

#include "dpc/matrix.hpp"

namespace dpc::ad {

class Tape;

// Handle into a tape node. Cheap to copy; valid for the life of its tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const;
  Eigen::Index cols() const;
};

enum class Op {
  kLeaf,
  kMatMul,
  kAdd,
  kSub,
  kHadamard,
  kScale,
  kConcatRows,
  kSliceRows,
  kRelu,
  kSigmoid,
  kTanh,
  kExp,
  kSoftmaxRows,
  kMse,
  kSumSq,
};

const char* op_name(Op op);

// Append-only reverse-mode tape over matrix ops. A training step records the
// forward pass, calls backward(loss) once, reads gradients off the leaves,
// and resets the tape for the next step.
class Tape {
 public:
  Var leaf(Matrix value);

  // Runs reverse accumulation from a scalar (1x1) loss node. Gradients of
  // nodes the loss does not reach are zero.
  void backward(Var loss);

  void reset();
  size_t size() const { return nodes_.size(); }

 private:
  friend struct Var;
  friend Var binary_op(Op op, Var a, Var b);
  friend Var unary_op(Op op, Var a, double scalar);
  friend Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count);

  struct Node {
    Op op;
    int parent0 = -1;
    int parent1 = -1;
    double scalar = 0.0;       // kScale factor
    Eigen::Index row_begin = 0;  // kSliceRows window
    Matrix value;
    Matrix grad;
  };

  int push(Node node);
  Node& at(int id) { return nodes_[static_cast<size_t>(id)]; }
  const Node& at(int id) const { return nodes_[static_cast<size_t>(id)]; }

  std::vector<Node> nodes_;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
Var concat_rows(Var a, Var b);
Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var softmax_rows(Var a);
Var mse(Var a, Var b);
Var sum_sq(Var a);

inline Var operator*(Var a, Var b) { return matmul(a, b); }
inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

}  // namespace dpc::ad
