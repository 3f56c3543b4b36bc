#include "s2fgl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "s2fgl/errors.hpp"

namespace s2fgl::ad {

namespace {

constexpr double kLogClamp = 1e-12;

double clamped_log(double x) { return std::log(x > kLogClamp ? x : kLogClamp); }

void check_finite(const DenseMatrix& m, const char* op_name) {
  if (!m.all_finite()) {
    throw std::runtime_error(std::string("non-finite values produced by ") + op_name);
  }
}

}  // namespace

int Tape::push(Node n) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(n));
  return id;
}

const Tape::Node& Tape::node(Value v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
    throw std::invalid_argument("value handle does not belong to this tape");
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

const DenseMatrix& Tape::value(Value v) const { return node(v).out; }

double Tape::scalar(Value v) const {
  const DenseMatrix& m = node(v).out;
  if (m.rows() != 1 || m.cols() != 1) throw DimensionError("scalar() on a non-1x1 value");
  return m(0, 0);
}

Value Tape::leaf(Parameter& p) {
  Node n;
  n.op = Op::kLeaf;
  n.out = p.value;
  n.param = &p;
  n.requires_grad = p.requires_grad;
  return {push(std::move(n))};
}

Value Tape::constant(DenseMatrix m) {
  check_finite(m, "constant");
  Node n;
  n.op = Op::kConstant;
  n.out = std::move(m);
  n.requires_grad = false;
  return {push(std::move(n))};
}

Value Tape::matmul(Value a, Value b) {
  const DenseMatrix& A = value(a);
  const DenseMatrix& B = value(b);
  Node n;
  n.op = Op::kMatMul;
  n.a = a.id;
  n.b = b.id;
  n.out = multiply(A, B);
  check_finite(n.out, "matmul");
  n.requires_grad = needs_grad(a) || needs_grad(b);
  return {push(std::move(n))};
}

Value Tape::add(Value a, Value b) {
  Node n;
  n.op = Op::kAdd;
  n.a = a.id;
  n.b = b.id;
  n.out = s2fgl::add(value(a), value(b));
  check_finite(n.out, "add");
  n.requires_grad = needs_grad(a) || needs_grad(b);
  return {push(std::move(n))};
}

Value Tape::sub(Value a, Value b) {
  Node n;
  n.op = Op::kSub;
  n.a = a.id;
  n.b = b.id;
  n.out = subtract(value(a), value(b));
  check_finite(n.out, "sub");
  n.requires_grad = needs_grad(a) || needs_grad(b);
  return {push(std::move(n))};
}

Value Tape::scale(Value a, double s) {
  Node n;
  n.op = Op::kScale;
  n.a = a.id;
  n.factor = s;
  n.out = s2fgl::scale(value(a), s);
  check_finite(n.out, "scale");
  n.requires_grad = needs_grad(a);
  return {push(std::move(n))};
}

Value Tape::relu(Value a) {
  Node n;
  n.op = Op::kRelu;
  n.a = a.id;
  n.out = value(a);
  for (double& v : n.out.data()) v = v > 0.0 ? v : 0.0;
  n.requires_grad = needs_grad(a);
  return {push(std::move(n))};
}

Value Tape::mul_elem(Value a, Value b) {
  const DenseMatrix& A = value(a);
  const DenseMatrix& B = value(b);
  if (!A.same_shape(B)) throw DimensionError("mul_elem shape mismatch");
  Node n;
  n.op = Op::kMulElem;
  n.a = a.id;
  n.b = b.id;
  n.out = A;
  for (std::size_t i = 0; i < n.out.data().size(); ++i) n.out.data()[i] *= B.data()[i];
  check_finite(n.out, "mul_elem");
  n.requires_grad = needs_grad(a) || needs_grad(b);
  return {push(std::move(n))};
}

Value Tape::mul_col(Value a, Value w) {
  const DenseMatrix& A = value(a);
  const DenseMatrix& W = value(w);
  if (W.cols() != 1 || W.rows() != A.rows()) throw DimensionError("mul_col weight must be Nx1");
  Node n;
  n.op = Op::kMulCol;
  n.a = a.id;
  n.b = w.id;
  n.out = A;
  for (int i = 0; i < A.rows(); ++i) {
    const double wi = W(i, 0);
    for (int j = 0; j < A.cols(); ++j) n.out(i, j) *= wi;
  }
  check_finite(n.out, "mul_col");
  n.requires_grad = needs_grad(a) || needs_grad(w);
  return {push(std::move(n))};
}

Value Tape::concat_cols(const std::vector<Value>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols on empty list");
  const int rows = value(parts[0]).rows();
  int cols = 0;
  for (Value p : parts) {
    if (value(p).rows() != rows) throw DimensionError("concat_cols row mismatch");
    cols += value(p).cols();
  }
  Node n;
  n.op = Op::kConcatCols;
  n.out = DenseMatrix(rows, cols);
  int offset = 0;
  for (Value p : parts) {
    const DenseMatrix& m = value(p);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < m.cols(); ++j) n.out(i, offset + j) = m(i, j);
    }
    offset += m.cols();
    n.extra_inputs.push_back(p.id);
    n.requires_grad = n.requires_grad || needs_grad(p);
  }
  return {push(std::move(n))};
}

Value Tape::col(Value a, int j) {
  const DenseMatrix& A = value(a);
  if (j < 0 || j >= A.cols()) throw DimensionError("col index out of range");
  Node n;
  n.op = Op::kCol;
  n.a = a.id;
  n.col_index = j;
  n.out = DenseMatrix(A.rows(), 1);
  for (int i = 0; i < A.rows(); ++i) n.out(i, 0) = A(i, j);
  n.requires_grad = needs_grad(a);
  return {push(std::move(n))};
}

Value Tape::gather_rows(Value a, const std::vector<int>& indices) {
  const DenseMatrix& A = value(a);
  for (int idx : indices) {
    if (idx < 0 || idx >= A.rows()) throw DimensionError("gather_rows index out of range");
  }
  Node n;
  n.op = Op::kGatherRows;
  n.a = a.id;
  n.indices = indices;
  n.out = DenseMatrix(static_cast<int>(indices.size()), A.cols());
  for (int r = 0; r < n.out.rows(); ++r) {
    for (int j = 0; j < A.cols(); ++j) n.out(r, j) = A(indices[static_cast<std::size_t>(r)], j);
  }
  n.requires_grad = needs_grad(a);
  return {push(std::move(n))};
}

Value Tape::softmax_rows(Value a) {
  const DenseMatrix& A = value(a);
  Node n;
  n.op = Op::kSoftmaxRows;
  n.a = a.id;
  n.out = DenseMatrix(A.rows(), A.cols());
  for (int i = 0; i < A.rows(); ++i) {
    double m = A(i, 0);
    for (int j = 1; j < A.cols(); ++j) m = std::max(m, A(i, j));
    double denom = 0.0;
    for (int j = 0; j < A.cols(); ++j) {
      const double e = std::exp(A(i, j) - m);
      n.out(i, j) = e;
      denom += e;
    }
    for (int j = 0; j < A.cols(); ++j) n.out(i, j) /= denom;
  }
  check_finite(n.out, "softmax_rows");
  n.requires_grad = needs_grad(a);
  return {push(std::move(n))};
}

Value Tape::kl_rows(Value p, Value q) {
  const DenseMatrix& P = value(p);
  const DenseMatrix& Q = value(q);
  if (!P.same_shape(Q)) throw DimensionError("kl_rows shape mismatch");
  Node n;
  n.op = Op::kKlRows;
  n.a = p.id;
  n.b = q.id;
  double total = 0.0;
  for (int i = 0; i < P.rows(); ++i) {
    for (int j = 0; j < P.cols(); ++j) {
      total += P(i, j) * (clamped_log(P(i, j)) - clamped_log(Q(i, j)));
    }
  }
  n.out = DenseMatrix(1, 1);
  n.out(0, 0) = total / static_cast<double>(P.rows());
  check_finite(n.out, "kl_rows");
  n.requires_grad = needs_grad(p) || needs_grad(q);
  return {push(std::move(n))};
}

Value Tape::mse(Value a, Value b) {
  const DenseMatrix& A = value(a);
  const DenseMatrix& B = value(b);
  if (!A.same_shape(B)) throw DimensionError("mse shape mismatch");
  Node n;
  n.op = Op::kMse;
  n.a = a.id;
  n.b = b.id;
  double total = 0.0;
  for (std::size_t i = 0; i < A.data().size(); ++i) {
    const double d = A.data()[i] - B.data()[i];
    total += d * d;
  }
  n.out = DenseMatrix(1, 1);
  n.out(0, 0) = total / static_cast<double>(A.size());
  check_finite(n.out, "mse");
  n.requires_grad = needs_grad(a) || needs_grad(b);
  return {push(std::move(n))};
}

Value Tape::cross_entropy(Value logits, const std::vector<int>& labels,
                          const std::vector<int>& mask) {
  const DenseMatrix& X = value(logits);
  if (mask.empty()) throw std::invalid_argument("cross_entropy: empty mask");
  for (int u : mask) {
    if (u < 0 || u >= X.rows() || u >= static_cast<int>(labels.size())) {
      throw std::invalid_argument("cross_entropy: mask index out of range");
    }
    const int y = labels[static_cast<std::size_t>(u)];
    if (y < 0 || y >= X.cols()) {
      throw std::invalid_argument("cross_entropy: label out of range for node " +
                                  std::to_string(u));
    }
  }
  Node n;
  n.op = Op::kCrossEntropy;
  n.a = logits.id;
  n.labels = labels;
  n.indices = mask;
  double total = 0.0;
  for (int u : mask) {
    double m = X(u, 0);
    for (int j = 1; j < X.cols(); ++j) m = std::max(m, X(u, j));
    double denom = 0.0;
    for (int j = 0; j < X.cols(); ++j) denom += std::exp(X(u, j) - m);
    const double lse = m + std::log(denom);
    total += lse - X(u, labels[static_cast<std::size_t>(u)]);
  }
  n.out = DenseMatrix(1, 1);
  n.out(0, 0) = total / static_cast<double>(mask.size());
  check_finite(n.out, "cross_entropy");
  n.requires_grad = needs_grad(logits);
  return {push(std::move(n))};
}

Value Tape::cosine_sim_rows(Value a, const DenseMatrix& b) {
  const DenseMatrix& A = value(a);
  if (A.cols() != b.cols()) throw DimensionError("cosine_sim_rows feature dim mismatch");
  Node n;
  n.op = Op::kCosineSimRows;
  n.a = a.id;
  n.operand = b;
  n.out = DenseMatrix(A.rows(), b.rows());
  std::vector<double> b_norms(static_cast<std::size_t>(b.rows()), 0.0);
  for (int j = 0; j < b.rows(); ++j) {
    double s = 0.0;
    for (int k = 0; k < b.cols(); ++k) s += b(j, k) * b(j, k);
    b_norms[static_cast<std::size_t>(j)] = std::sqrt(s);
  }
  for (int i = 0; i < A.rows(); ++i) {
    double sa = 0.0;
    for (int k = 0; k < A.cols(); ++k) sa += A(i, k) * A(i, k);
    const double na = std::sqrt(sa);
    if (na == 0.0) continue;  // row stays all-zero by convention
    for (int j = 0; j < b.rows(); ++j) {
      const double nb = b_norms[static_cast<std::size_t>(j)];
      if (nb == 0.0) continue;
      double dot = 0.0;
      for (int k = 0; k < A.cols(); ++k) dot += A(i, k) * b(j, k);
      n.out(i, j) = dot / (na * nb);
    }
  }
  check_finite(n.out, "cosine_sim_rows");
  n.requires_grad = needs_grad(a);
  return {push(std::move(n))};
}

Value Tape::sum(Value a) {
  Node n;
  n.op = Op::kSum;
  n.a = a.id;
  double total = 0.0;
  for (double v : value(a).data()) total += v;
  n.out = DenseMatrix(1, 1);
  n.out(0, 0) = total;
  check_finite(n.out, "sum");
  n.requires_grad = needs_grad(a);
  return {push(std::move(n))};
}

Value Tape::sum_squares(Value a) {
  Node n;
  n.op = Op::kSumSquares;
  n.a = a.id;
  double total = 0.0;
  for (double v : value(a).data()) total += v * v;
  n.out = DenseMatrix(1, 1);
  n.out(0, 0) = total;
  check_finite(n.out, "sum_squares");
  n.requires_grad = needs_grad(a);
  return {push(std::move(n))};
}

void Tape::backward(Value root) {
  const Node& root_node = node(root);
  if (root_node.out.rows() != 1 || root_node.out.cols() != 1) {
    throw std::invalid_argument("backward root must be a scalar (1x1) value");
  }
  if (!root_node.requires_grad) return;  // nothing reaches a parameter

  std::vector<DenseMatrix> grads(nodes_.size());
  auto slot = [&](int id) -> DenseMatrix& {
    DenseMatrix& g = grads[static_cast<std::size_t>(id)];
    if (g.empty()) {
      const DenseMatrix& out = nodes_[static_cast<std::size_t>(id)].out;
      g = DenseMatrix(out.rows(), out.cols());
    }
    return g;
  };

  slot(root.id)(0, 0) = 1.0;

  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad) continue;
    const DenseMatrix& g = grads[static_cast<std::size_t>(id)];
    if (g.empty()) continue;  // not on a path from the root

    auto wants = [&](int input) {
      return input >= 0 && nodes_[static_cast<std::size_t>(input)].requires_grad;
    };

    switch (n.op) {
      case Op::kLeaf: {
        DenseMatrix& pg = n.param->grad;
        for (std::size_t i = 0; i < pg.data().size(); ++i) pg.data()[i] += g.data()[i];
        break;
      }
      case Op::kConstant:
        break;
      case Op::kMatMul: {
        const DenseMatrix& A = nodes_[static_cast<std::size_t>(n.a)].out;
        const DenseMatrix& B = nodes_[static_cast<std::size_t>(n.b)].out;
        if (wants(n.a)) {
          DenseMatrix da = multiply(g, transpose(B));
          DenseMatrix& ga = slot(n.a);
          for (std::size_t i = 0; i < ga.data().size(); ++i) ga.data()[i] += da.data()[i];
        }
        if (wants(n.b)) {
          DenseMatrix db = multiply(transpose(A), g);
          DenseMatrix& gb = slot(n.b);
          for (std::size_t i = 0; i < gb.data().size(); ++i) gb.data()[i] += db.data()[i];
        }
        break;
      }
      case Op::kAdd: {
        if (wants(n.a)) {
          DenseMatrix& ga = slot(n.a);
          for (std::size_t i = 0; i < ga.data().size(); ++i) ga.data()[i] += g.data()[i];
        }
        if (wants(n.b)) {
          DenseMatrix& gb = slot(n.b);
          for (std::size_t i = 0; i < gb.data().size(); ++i) gb.data()[i] += g.data()[i];
        }
        break;
      }
      case Op::kSub: {
        if (wants(n.a)) {
          DenseMatrix& ga = slot(n.a);
          for (std::size_t i = 0; i < ga.data().size(); ++i) ga.data()[i] += g.data()[i];
        }
        if (wants(n.b)) {
          DenseMatrix& gb = slot(n.b);
          for (std::size_t i = 0; i < gb.data().size(); ++i) gb.data()[i] -= g.data()[i];
        }
        break;
      }
      case Op::kScale: {
        if (wants(n.a)) {
          DenseMatrix& ga = slot(n.a);
          for (std::size_t i = 0; i < ga.data().size(); ++i) {
            ga.data()[i] += n.factor * g.data()[i];
          }
        }
        break;
      }
      case Op::kRelu: {
        if (wants(n.a)) {
          const DenseMatrix& A = nodes_[static_cast<std::size_t>(n.a)].out;
          DenseMatrix& ga = slot(n.a);
          for (std::size_t i = 0; i < ga.data().size(); ++i) {
            if (A.data()[i] > 0.0) ga.data()[i] += g.data()[i];
          }
        }
        break;
      }
      case Op::kMulElem: {
        const DenseMatrix& A = nodes_[static_cast<std::size_t>(n.a)].out;
        const DenseMatrix& B = nodes_[static_cast<std::size_t>(n.b)].out;
        if (wants(n.a)) {
          DenseMatrix& ga = slot(n.a);
          for (std::size_t i = 0; i < ga.data().size(); ++i) {
            ga.data()[i] += g.data()[i] * B.data()[i];
          }
        }
        if (wants(n.b)) {
          DenseMatrix& gb = slot(n.b);
          for (std::size_t i = 0; i < gb.data().size(); ++i) {
            gb.data()[i] += g.data()[i] * A.data()[i];
          }
        }
        break;
      }
      case Op::kMulCol: {
        const DenseMatrix& A = nodes_[static_cast<std::size_t>(n.a)].out;
        const DenseMatrix& W = nodes_[static_cast<std::size_t>(n.b)].out;
        if (wants(n.a)) {
          DenseMatrix& ga = slot(n.a);
          for (int i = 0; i < A.rows(); ++i) {
            const double wi = W(i, 0);
            for (int j = 0; j < A.cols(); ++j) ga(i, j) += g(i, j) * wi;
          }
        }
        if (wants(n.b)) {
          DenseMatrix& gw = slot(n.b);
          for (int i = 0; i < A.rows(); ++i) {
            double s = 0.0;
            for (int j = 0; j < A.cols(); ++j) s += g(i, j) * A(i, j);
            gw(i, 0) += s;
          }
        }
        break;
      }
      case Op::kConcatCols: {
        int offset = 0;
        for (int input : n.extra_inputs) {
          const DenseMatrix& part = nodes_[static_cast<std::size_t>(input)].out;
          if (wants(input)) {
            DenseMatrix& gp = slot(input);
            for (int i = 0; i < part.rows(); ++i) {
              for (int j = 0; j < part.cols(); ++j) gp(i, j) += g(i, offset + j);
            }
          }
          offset += part.cols();
        }
        break;
      }
      case Op::kCol: {
        if (wants(n.a)) {
          DenseMatrix& ga = slot(n.a);
          for (int i = 0; i < g.rows(); ++i) ga(i, n.col_index) += g(i, 0);
        }
        break;
      }
      case Op::kGatherRows: {
        if (wants(n.a)) {
          DenseMatrix& ga = slot(n.a);
          for (int r = 0; r < g.rows(); ++r) {
            const int src = n.indices[static_cast<std::size_t>(r)];
            for (int j = 0; j < g.cols(); ++j) ga(src, j) += g(r, j);
          }
        }
        break;
      }
      case Op::kSoftmaxRows: {
        if (wants(n.a)) {
          const DenseMatrix& Y = n.out;
          DenseMatrix& ga = slot(n.a);
          for (int i = 0; i < Y.rows(); ++i) {
            double dot = 0.0;
            for (int j = 0; j < Y.cols(); ++j) dot += g(i, j) * Y(i, j);
            for (int j = 0; j < Y.cols(); ++j) ga(i, j) += Y(i, j) * (g(i, j) - dot);
          }
        }
        break;
      }
      case Op::kKlRows: {
        const DenseMatrix& P = nodes_[static_cast<std::size_t>(n.a)].out;
        const DenseMatrix& Q = nodes_[static_cast<std::size_t>(n.b)].out;
        const double gs = g(0, 0) / static_cast<double>(P.rows());
        if (wants(n.a)) {
          DenseMatrix& gp = slot(n.a);
          for (int i = 0; i < P.rows(); ++i) {
            for (int j = 0; j < P.cols(); ++j) {
              const double dp = clamped_log(P(i, j)) - clamped_log(Q(i, j)) +
                                (P(i, j) > kLogClamp ? 1.0 : 0.0);
              gp(i, j) += gs * dp;
            }
          }
        }
        if (wants(n.b)) {
          DenseMatrix& gq = slot(n.b);
          for (int i = 0; i < Q.rows(); ++i) {
            for (int j = 0; j < Q.cols(); ++j) {
              if (Q(i, j) > kLogClamp) gq(i, j) -= gs * P(i, j) / Q(i, j);
            }
          }
        }
        break;
      }
      case Op::kMse: {
        const DenseMatrix& A = nodes_[static_cast<std::size_t>(n.a)].out;
        const DenseMatrix& B = nodes_[static_cast<std::size_t>(n.b)].out;
        const double gs = 2.0 * g(0, 0) / static_cast<double>(A.size());
        if (wants(n.a)) {
          DenseMatrix& ga = slot(n.a);
          for (std::size_t i = 0; i < ga.data().size(); ++i) {
            ga.data()[i] += gs * (A.data()[i] - B.data()[i]);
          }
        }
        if (wants(n.b)) {
          DenseMatrix& gb = slot(n.b);
          for (std::size_t i = 0; i < gb.data().size(); ++i) {
            gb.data()[i] -= gs * (A.data()[i] - B.data()[i]);
          }
        }
        break;
      }
      case Op::kCrossEntropy: {
        if (wants(n.a)) {
          const DenseMatrix& X = nodes_[static_cast<std::size_t>(n.a)].out;
          DenseMatrix& gx = slot(n.a);
          const double gs = g(0, 0) / static_cast<double>(n.indices.size());
          for (int u : n.indices) {
            double m = X(u, 0);
            for (int j = 1; j < X.cols(); ++j) m = std::max(m, X(u, j));
            double denom = 0.0;
            for (int j = 0; j < X.cols(); ++j) denom += std::exp(X(u, j) - m);
            const int y = n.labels[static_cast<std::size_t>(u)];
            for (int j = 0; j < X.cols(); ++j) {
              const double p = std::exp(X(u, j) - m) / denom;
              gx(u, j) += gs * (p - (j == y ? 1.0 : 0.0));
            }
          }
        }
        break;
      }
      case Op::kCosineSimRows: {
        if (wants(n.a)) {
          const DenseMatrix& A = nodes_[static_cast<std::size_t>(n.a)].out;
          const DenseMatrix& B = n.operand;
          DenseMatrix& ga = slot(n.a);
          for (int i = 0; i < A.rows(); ++i) {
            double sa = 0.0;
            for (int k = 0; k < A.cols(); ++k) sa += A(i, k) * A(i, k);
            const double na = std::sqrt(sa);
            if (na == 0.0) continue;  // similarity pinned to 0; zero gradient
            for (int j = 0; j < B.rows(); ++j) {
              double sb = 0.0;
              for (int k = 0; k < B.cols(); ++k) sb += B(j, k) * B(j, k);
              const double nb = std::sqrt(sb);
              if (nb == 0.0) continue;
              const double gij = g(i, j);
              if (gij == 0.0) continue;
              const double r = n.out(i, j);
              for (int k = 0; k < A.cols(); ++k) {
                ga(i, k) += gij * (B(j, k) / (na * nb) - r * A(i, k) / sa);
              }
            }
          }
        }
        break;
      }
      case Op::kSum: {
        if (wants(n.a)) {
          DenseMatrix& ga = slot(n.a);
          const double gs = g(0, 0);
          for (double& v : ga.data()) v += gs;
        }
        break;
      }
      case Op::kSumSquares: {
        if (wants(n.a)) {
          const DenseMatrix& A = nodes_[static_cast<std::size_t>(n.a)].out;
          DenseMatrix& ga = slot(n.a);
          const double gs = 2.0 * g(0, 0);
          for (std::size_t i = 0; i < ga.data().size(); ++i) ga.data()[i] += gs * A.data()[i];
        }
        break;
      }
    }
  }
}

void sgd_step(std::span<Parameter* const> params, double lr, double weight_decay) {
  if (lr < 0.0) throw std::invalid_argument("sgd_step: negative learning rate");
  for (Parameter* p : params) {
    if (!p->requires_grad) continue;
    if (!p->grad.same_shape(p->value)) throw DimensionError("sgd_step: gradient shape mismatch");
    for (std::size_t i = 0; i < p->value.data().size(); ++i) {
      const double g = p->grad.data()[i] + weight_decay * p->value.data()[i];
      p->value.data()[i] -= lr * g;
    }
  }
}

}  // namespace s2fgl::ad
