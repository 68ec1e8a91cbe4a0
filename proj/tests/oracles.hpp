#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "dpc/matrix.hpp"
#include "dpc/qp.hpp"
#include "dpc/rng.hpp"
#include "dpc/tape.hpp"

// Independent reference routes used by the unit and acceptance suites. Each
// oracle recomputes a quantity along a path disjoint from the library's, so
// agreement is evidence instead of tautology: gradients against central
// finite differences, eigenvalues against polynomial root finding, QP optima
// against exhaustive active-set enumeration, Riccati solutions against the
// scalar closed form.
namespace oracle {

using dpc::Complex;
using dpc::Matrix;
using dpc::Rng;
using dpc::Vector;

// ---------------------------------------------------------------------------
// Finite-difference gradient checking over randomized composite graphs.
//
// A recipe is a straight-line program over the tape ops, ending in a scalar
// node. The checker replays it twice per parameter entry with perturbed leaf
// values for central differences and once intact for reverse-mode gradients.
// Draws whose relu inputs sit within 1e-3 of the kink, or whose
// intermediates exceed 30 in magnitude (exp headroom), are rejected and
// redrawn, so no finite step crosses a nondifferentiable point.
// ---------------------------------------------------------------------------

struct NodeSpec {
  dpc::ad::Op op = dpc::ad::Op::kLeaf;
  int p0 = -1;
  int p1 = -1;
  double scalar = 0.0;
  Eigen::Index row_begin = 0;
  Eigen::Index row_count = 0;
  Matrix base;  // kLeaf only
};

struct GraphRecipe {
  std::vector<NodeSpec> nodes;  // leaves included, in program order
  std::vector<int> leaves;      // node ids of the leaves, in replay order
};

inline std::vector<dpc::ad::Var> replay_all(dpc::ad::Tape& tape, const GraphRecipe& g,
                                            const std::vector<Matrix>& leaf_values) {
  using dpc::ad::Op;
  std::vector<dpc::ad::Var> built(g.nodes.size());
  size_t leaf_i = 0;
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    const NodeSpec& n = g.nodes[i];
    dpc::ad::Var a = n.p0 >= 0 ? built[static_cast<size_t>(n.p0)] : dpc::ad::Var{};
    dpc::ad::Var b = n.p1 >= 0 ? built[static_cast<size_t>(n.p1)] : dpc::ad::Var{};
    switch (n.op) {
      case Op::kLeaf: built[i] = tape.leaf(leaf_values[leaf_i++]); break;
      case Op::kMatMul: built[i] = matmul(a, b); break;
      case Op::kAdd: built[i] = add(a, b); break;
      case Op::kSub: built[i] = sub(a, b); break;
      case Op::kHadamard: built[i] = hadamard(a, b); break;
      case Op::kScale: built[i] = scale(a, n.scalar); break;
      case Op::kConcatRows: built[i] = concat_rows(a, b); break;
      case Op::kSliceRows: built[i] = slice_rows(a, n.row_begin, n.row_count); break;
      case Op::kRelu: built[i] = relu(a); break;
      case Op::kSigmoid: built[i] = sigmoid(a); break;
      case Op::kTanh: built[i] = tanh(a); break;
      case Op::kExp: built[i] = exp(a); break;
      case Op::kSoftmaxRows: built[i] = softmax_rows(a); break;
      case Op::kMse: built[i] = mse(a, b); break;
      case Op::kSumSq: built[i] = sum_sq(a); break;
    }
  }
  return built;
}

inline std::vector<Matrix> leaf_bases(const GraphRecipe& g) {
  std::vector<Matrix> vals;
  vals.reserve(g.leaves.size());
  for (int id : g.leaves) vals.push_back(g.nodes[static_cast<size_t>(id)].base);
  return vals;
}

inline double loss_value(const GraphRecipe& g, const std::vector<Matrix>& leaf_values) {
  dpc::ad::Tape tape;
  return replay_all(tape, g, leaf_values).back().value()(0, 0);
}

inline std::optional<GraphRecipe> draw_graph(Rng& rng, int op_count) {
  using dpc::ad::Op;
  GraphRecipe g;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shape;

  auto add_leaf = [&](Eigen::Index r, Eigen::Index c) {
    NodeSpec n;
    n.op = Op::kLeaf;
    n.base = Matrix(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) n.base(i, j) = rng.uniform(-1.5, 1.5);
    g.nodes.push_back(std::move(n));
    g.leaves.push_back(static_cast<int>(g.nodes.size()) - 1);
    shape.emplace_back(r, c);
    return static_cast<int>(g.nodes.size()) - 1;
  };

  int head = add_leaf(rng.uniform_int(1, 4), rng.uniform_int(1, 4));
  for (int step = 0; step < op_count; ++step) {
    auto [hr, hc] = shape[static_cast<size_t>(head)];
    static const Op kChoices[] = {Op::kMatMul,     Op::kAdd,     Op::kSub,  Op::kHadamard,
                                  Op::kScale,      Op::kConcatRows, Op::kSliceRows,
                                  Op::kRelu,       Op::kSigmoid, Op::kTanh, Op::kExp,
                                  Op::kSoftmaxRows};
    Op op = kChoices[rng.uniform_int(0, 11)];
    NodeSpec n;
    n.op = op;
    n.p0 = head;
    std::pair<Eigen::Index, Eigen::Index> out{hr, hc};
    switch (op) {
      case Op::kMatMul: {
        if (rng.uniform() < 0.5) {
          Eigen::Index k = rng.uniform_int(1, 4);
          n.p1 = add_leaf(hc, k);
          out = {hr, k};
        } else {
          Eigen::Index k = rng.uniform_int(1, 4);
          n.p0 = add_leaf(k, hr);
          n.p1 = head;
          out = {k, hc};
        }
        break;
      }
      case Op::kAdd:
      case Op::kSub:
      case Op::kHadamard: {
        int other = -1;
        for (int cand = head - 1; cand >= 0 && other < 0; --cand)
          if (shape[static_cast<size_t>(cand)] == std::make_pair(hr, hc) &&
              rng.uniform() < 0.5)
            other = cand;
        n.p1 = other >= 0 ? other : add_leaf(hr, hc);
        break;
      }
      case Op::kConcatRows: {
        Eigen::Index r2 = rng.uniform_int(1, 3);
        n.p1 = add_leaf(r2, hc);
        out = {hr + r2, hc};
        break;
      }
      case Op::kSliceRows: {
        if (hr < 2) continue;
        n.row_count = rng.uniform_int(1, static_cast<int>(hr) - 1);
        n.row_begin = rng.uniform_int(0, static_cast<int>(hr - n.row_count));
        out = {n.row_count, hc};
        break;
      }
      case Op::kScale: n.scalar = rng.uniform(-2.0, 2.0); break;
      default: break;
    }
    g.nodes.push_back(n);
    shape.push_back(out);
    head = static_cast<int>(g.nodes.size()) - 1;
  }

  NodeSpec tail;
  tail.p0 = head;
  if (rng.uniform() < 0.5) {
    tail.op = Op::kSumSq;
    g.nodes.push_back(tail);
  } else {
    auto [hr, hc] = shape[static_cast<size_t>(head)];
    tail.op = Op::kMse;
    tail.p1 = add_leaf(hr, hc);
    g.nodes.push_back(tail);
  }

  dpc::ad::Tape probe;
  std::vector<dpc::ad::Var> built = replay_all(probe, g, leaf_bases(g));
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    if (built[i].value().cwiseAbs().maxCoeff() > 30.0) return std::nullopt;
    if (g.nodes[i].op == Op::kRelu) {
      const Matrix& pre = built[static_cast<size_t>(g.nodes[i].p0)].value();
      if (pre.cwiseAbs().minCoeff() < 1e-3) return std::nullopt;
    }
  }
  return g;
}

struct FdOutcome {
  double max_rel_err = 0.0;
  int entries = 0;
};

// Relative error convention: |ad - fd| / max(|ad|, |fd|, 1e-2). The floor
// turns the comparison absolute for near-zero gradients, where the central
// difference itself carries ~1e-10 truncation noise.
inline FdOutcome fd_check(const GraphRecipe& g, double h = 1e-5) {
  FdOutcome out;
  dpc::ad::Tape tape;
  std::vector<dpc::ad::Var> built = replay_all(tape, g, leaf_bases(g));
  tape.backward(built.back());

  std::vector<Matrix> vals = leaf_bases(g);
  for (size_t li = 0; li < g.leaves.size(); ++li) {
    const Matrix& ad = built[static_cast<size_t>(g.leaves[li])].grad();
    for (Eigen::Index i = 0; i < vals[li].rows(); ++i) {
      for (Eigen::Index j = 0; j < vals[li].cols(); ++j) {
        double keep = vals[li](i, j);
        vals[li](i, j) = keep + h;
        double up = loss_value(g, vals);
        vals[li](i, j) = keep - h;
        double down = loss_value(g, vals);
        vals[li](i, j) = keep;
        double fd = (up - down) / (2.0 * h);
        double denom = std::max({std::abs(ad(i, j)), std::abs(fd), 1e-2});
        out.max_rel_err = std::max(out.max_rel_err, std::abs(ad(i, j) - fd) / denom);
        ++out.entries;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Eigenvalues by characteristic polynomial: Faddeev-LeVerrier coefficients,
// then Durand-Kerner simultaneous root iteration on the monic polynomial.
// ---------------------------------------------------------------------------

inline std::vector<double> charpoly(const Matrix& A) {
  const Eigen::Index n = A.rows();
  std::vector<double> c(static_cast<size_t>(n) + 1, 0.0);
  c[static_cast<size_t>(n)] = 1.0;
  Matrix M = Matrix::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    Matrix AM = A * M;
    double ck = -AM.trace() / static_cast<double>(k);
    c[static_cast<size_t>(n - k)] = ck;
    M = AM + ck * Matrix::Identity(n, n);
  }
  return c;  // p(z) = sum_k c[k] z^k, monic
}

inline std::vector<Complex> polyroots(const std::vector<double>& c, double tol = 1e-13,
                                      int cap = 2000) {
  const size_t n = c.size() - 1;
  auto p = [&](Complex z) {
    Complex acc = 0.0;
    for (size_t k = c.size(); k-- > 0;) acc = acc * z + c[k];
    return acc;
  };
  std::vector<Complex> z(n);
  Complex seed(0.4, 0.9);
  Complex w = seed;
  for (size_t j = 0; j < n; ++j, w *= seed) z[j] = w;
  for (int it = 0; it < cap; ++it) {
    double moved = 0.0;
    for (size_t j = 0; j < n; ++j) {
      Complex denom = 1.0;
      for (size_t k = 0; k < n; ++k)
        if (k != j) denom *= z[j] - z[k];
      Complex step = p(z[j]) / denom;
      z[j] -= step;
      moved = std::max(moved, std::abs(step));
    }
    if (moved < tol) break;
  }
  return z;
}

inline std::vector<Complex> eig_by_charpoly(const Matrix& A) {
  return polyroots(charpoly(A));
}

// Greedy nearest matching; returns the largest pairing distance.
inline double spectra_distance(std::vector<Complex> a, std::vector<Complex> b) {
  double worst = 0.0;
  for (const Complex& x : a) {
    size_t best = 0;
    double d = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < b.size(); ++k)
      if (std::abs(x - b[k]) < d) {
        d = std::abs(x - b[k]);
        best = k;
      }
    worst = std::max(worst, d);
    b.erase(b.begin() + static_cast<long>(best));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Brute-force active-set QP oracle for inequality-constrained instances whose
// optimum activates at most `max_active` rows. Enumerates candidate active
// sets by size; for each, solves the equality KKT system and verifies primal
// feasibility plus dual nonnegativity. A convex QP has a single KKT point, so
// the first verified candidate is the optimum.
// ---------------------------------------------------------------------------

struct ActiveSetSolution {
  Vector z;
  double objective = 0.0;
  std::vector<int> active;
};

inline std::optional<ActiveSetSolution> solve_with_active(const dpc::QpProblem& p,
                                                          const std::vector<int>& act,
                                                          double tol) {
  const Eigen::Index n = p.H.rows();
  const Eigen::Index k = static_cast<Eigen::Index>(act.size());
  Matrix kkt(n + k, n + k);
  kkt.setZero();
  kkt.topLeftCorner(n, n) = p.H;
  Vector rhs(n + k);
  rhs.head(n) = -p.f;
  for (Eigen::Index r = 0; r < k; ++r) {
    kkt.block(n + r, 0, 1, n) = p.G.row(act[static_cast<size_t>(r)]);
    kkt.block(0, n + r, n, 1) = p.G.row(act[static_cast<size_t>(r)]).transpose();
    rhs(n + r) = p.h(act[static_cast<size_t>(r)]);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) return std::nullopt;
  Vector sol = lu.solve(rhs);
  Vector z = sol.head(n);
  Vector lambda = sol.tail(k);
  if ((lambda.array() < -tol).any()) return std::nullopt;
  if (((p.G * z - p.h).array() > tol).any()) return std::nullopt;
  ActiveSetSolution out;
  out.z = z;
  out.objective = 0.5 * z.dot(p.H * z) + p.f.dot(z);
  out.active = act;
  return out;
}

inline std::optional<ActiveSetSolution> active_set_enumerate(const dpc::QpProblem& p,
                                                             int max_active,
                                                             double tol = 1e-9) {
  const int m = static_cast<int>(p.G.rows());
  std::vector<int> idx;
  for (int size = 0; size <= std::min(max_active, m); ++size) {
    idx.assign(static_cast<size_t>(size), 0);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      if (auto sol = solve_with_active(p, idx, tol)) return sol;
      if (size == 0) break;
      int pos = size - 1;
      while (pos >= 0 && idx[static_cast<size_t>(pos)] == m - size + pos) --pos;
      if (pos < 0) break;
      ++idx[static_cast<size_t>(pos)];
      for (int q = pos + 1; q < size; ++q)
        idx[static_cast<size_t>(q)] = idx[static_cast<size_t>(q - 1)] + 1;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Scalar discrete algebraic Riccati closed form. Substituting scalars into
//   p = a^2 p - a^2 b^2 p^2 / (r + b^2 p) + q
// and clearing the denominator gives
//   b^2 p^2 + (r - a^2 r - q b^2) p - q r = 0,
// whose positive root is the stabilizing solution.
// ---------------------------------------------------------------------------

inline double scalar_dare(double a, double b, double q, double r) {
  double A2 = b * b;
  double A1 = r - a * a * r - q * b * b;
  double A0 = -q * r;
  return (-A1 + std::sqrt(A1 * A1 - 4.0 * A2 * A0)) / (2.0 * A2);
}

}  // namespace oracle
