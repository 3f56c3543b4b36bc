#pragma once

#include <span>
#include <vector>

#include "s2fgl/matrix.hpp"

namespace s2fgl::ad {

// A trainable weight. Gradients accumulate across backward passes until
// zero_grad() is called (once per optimizer step in practice).
struct Parameter {
  DenseMatrix value;
  DenseMatrix grad;
  bool requires_grad = true;

  explicit Parameter(DenseMatrix v) : value(std::move(v)), grad(value.rows(), value.cols()) {}
  void zero_grad() { grad.fill(0.0); }
};

// Handle to a node on a Tape. Valid only for the tape that produced it.
struct Value {
  int id = -1;
};

// Reverse-mode tape over dense matrices. Nodes are recorded in topological
// order by construction; backward() visits each node exactly once in reverse.
// A tape is single-owner: build a fresh one per loss evaluation.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves. Constants never receive gradients; this is the stop-gradient
  // mechanism used for global features, prototypes, and eigenvectors.
  Value leaf(Parameter& p);
  Value constant(DenseMatrix m);

  Value matmul(Value a, Value b);
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value scale(Value a, double s);
  Value relu(Value a);
  Value mul_elem(Value a, Value b);
  // Scales every row of `a` (N x M) by the matching entry of column `w` (N x 1).
  Value mul_col(Value a, Value w);
  Value concat_cols(const std::vector<Value>& parts);
  Value col(Value a, int j);
  Value gather_rows(Value a, const std::vector<int>& indices);

  // Row-stabilized softmax; each output row sums to 1.
  Value softmax_rows(Value a);
  // Mean over rows of sum_j p_j*log(p_j/q_j), with 1e-12 clamps inside logs.
  Value kl_rows(Value p, Value q);
  // Mean of squared elementwise differences.
  Value mse(Value a, Value b);
  // Mean negative log-softmax of the true class over `mask` rows of `logits`.
  Value cross_entropy(Value logits, const std::vector<int>& labels, const std::vector<int>& mask);
  // result[i][j] = cos(a_i, b_j); zero-norm rows or prototypes give 0.
  Value cosine_sim_rows(Value a, const DenseMatrix& b);

  Value sum(Value a);
  Value sum_squares(Value a);

  // The reference is invalidated by recording further nodes.
  const DenseMatrix& value(Value v) const;
  double scalar(Value v) const;  // value of a 1x1 node
  int num_nodes() const { return static_cast<int>(nodes_.size()); }

  // Reverse pass from a scalar root; gradients accumulate into the
  // Parameter.grad of every leaf reached.
  void backward(Value root);

 private:
  enum class Op {
    kLeaf,
    kConstant,
    kMatMul,
    kAdd,
    kSub,
    kScale,
    kRelu,
    kMulElem,
    kMulCol,
    kConcatCols,
    kCol,
    kGatherRows,
    kSoftmaxRows,
    kKlRows,
    kMse,
    kCrossEntropy,
    kCosineSimRows,
    kSum,
    kSumSquares,
  };

  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    std::vector<int> extra_inputs;  // concat_cols
    DenseMatrix out;
    bool requires_grad = false;
    Parameter* param = nullptr;   // leaf
    double factor = 0.0;          // scale
    int col_index = 0;            // col
    DenseMatrix operand;          // cosine_sim_rows constant matrix
    std::vector<int> indices;     // cross_entropy mask / gather_rows indices
    std::vector<int> labels;      // cross_entropy
  };

  int push(Node n);
  const Node& node(Value v) const;
  bool needs_grad(Value v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }

  std::vector<Node> nodes_;
};

// p <- p - lr * (grad + weight_decay * p) for every parameter with
// requires_grad set. lr must be nonnegative.
void sgd_step(std::span<Parameter* const> params, double lr, double weight_decay);

}  // namespace s2fgl::ad
