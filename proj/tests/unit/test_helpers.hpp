#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "s2fgl/autodiff.hpp"
#include "s2fgl/matrix.hpp"
#include "s2fgl/rng.hpp"

// Test-only oracles. Everything here is deliberately independent of the
// library's solver/backward paths: gradients come from central finite
// differences, inverses from Gauss-Jordan, spectral radii from power
// iteration.
namespace testutil {

using s2fgl::DenseMatrix;

using LossBuilder = std::function<s2fgl::ad::Value(s2fgl::ad::Tape&)>;

inline double eval_loss(const LossBuilder& build) {
  s2fgl::ad::Tape tape;
  return tape.scalar(build(tape));
}

// Central finite differences, h = 1e-5 by default.
inline std::vector<DenseMatrix> fd_gradients(const LossBuilder& build,
                                             const std::vector<s2fgl::ad::Parameter*>& params,
                                             double h = 1e-5) {
  std::vector<DenseMatrix> grads;
  for (s2fgl::ad::Parameter* p : params) {
    DenseMatrix g(p->value.rows(), p->value.cols());
    for (std::size_t i = 0; i < p->value.data().size(); ++i) {
      const double original = p->value.data()[i];
      p->value.data()[i] = original + h;
      const double plus = eval_loss(build);
      p->value.data()[i] = original - h;
      const double minus = eval_loss(build);
      p->value.data()[i] = original;
      g.data()[i] = (plus - minus) / (2.0 * h);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

inline std::vector<DenseMatrix> autodiff_gradients(
    const LossBuilder& build, const std::vector<s2fgl::ad::Parameter*>& params) {
  for (s2fgl::ad::Parameter* p : params) p->zero_grad();
  s2fgl::ad::Tape tape;
  tape.backward(build(tape));
  std::vector<DenseMatrix> grads;
  for (s2fgl::ad::Parameter* p : params) grads.push_back(p->grad);
  return grads;
}

// ||g_ad - g_fd|| / max(||g_fd||, 1e-8) over all parameters flattened.
inline double gradient_rel_error(const LossBuilder& build,
                                 const std::vector<s2fgl::ad::Parameter*>& params,
                                 double h = 1e-5) {
  const auto ad = autodiff_gradients(build, params);
  const auto fd = fd_gradients(build, params, h);
  double diff_sq = 0.0;
  double fd_sq = 0.0;
  for (std::size_t k = 0; k < ad.size(); ++k) {
    for (std::size_t i = 0; i < ad[k].data().size(); ++i) {
      const double d = ad[k].data()[i] - fd[k].data()[i];
      diff_sq += d * d;
      fd_sq += fd[k].data()[i] * fd[k].data()[i];
    }
  }
  return std::sqrt(diff_sq) / std::max(std::sqrt(fd_sq), 1e-8);
}

// Gauss-Jordan inverse with full row pivoting; independent of solve_linear.
inline DenseMatrix gauss_jordan_inverse(DenseMatrix a) {
  const int n = a.rows();
  if (n != a.cols()) throw std::invalid_argument("gauss_jordan_inverse: not square");
  DenseMatrix inv = DenseMatrix::identity(n);
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    }
    if (a(pivot, col) == 0.0) throw std::invalid_argument("gauss_jordan_inverse: singular");
    for (int j = 0; j < n; ++j) {
      std::swap(a(col, j), a(pivot, j));
      std::swap(inv(col, j), inv(pivot, j));
    }
    const double d = a(col, col);
    for (int j = 0; j < n; ++j) {
      a(col, j) /= d;
      inv(col, j) /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a(r, col);
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        a(r, j) -= f * a(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

// Dominant |eigenvalue| of a symmetric matrix by plain power iteration.
inline double power_iteration_radius(const DenseMatrix& m, int iterations = 500) {
  s2fgl::Rng rng(12345);
  std::vector<double> x(static_cast<std::size_t>(m.rows()));
  for (double& v : x) v = rng.normal();
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> y(x.size(), 0.0);
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < m.cols(); ++j) y[static_cast<std::size_t>(i)] += m(i, j) * x[static_cast<std::size_t>(j)];
    }
    double norm = 0.0;
    for (double v : y) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) x[i] = y[i] / norm;
    lambda = norm;
  }
  return lambda;
}

inline DenseMatrix random_matrix(int rows, int cols, s2fgl::Rng& rng, double scale = 1.0) {
  DenseMatrix m(rows, cols);
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

}  // namespace testutil
