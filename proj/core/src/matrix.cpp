#include "s2fgl/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "s2fgl/errors.hpp"

namespace s2fgl {

DenseMatrix::DenseMatrix(int rows, int cols)
    : rows_(rows), cols_(cols),
      data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0) {
  if (rows < 0 || cols < 0) throw DimensionError("negative matrix dimensions");
}

DenseMatrix::DenseMatrix(int rows, int cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows < 0 || cols < 0) throw DimensionError("negative matrix dimensions");
  if (data_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw DimensionError("data length does not match rows*cols");
  }
}

DenseMatrix DenseMatrix::identity(int n) {
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
  DenseMatrix m(r, c);
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) throw DimensionError("ragged initializer rows");
    int j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

DenseMatrix DenseMatrix::column(const std::vector<double>& v) {
  DenseMatrix m(static_cast<int>(v.size()), 1);
  for (int i = 0; i < m.rows(); ++i) m(i, 0) = v[static_cast<std::size_t>(i)];
  return m;
}

DenseMatrix DenseMatrix::row_vector(const std::vector<double>& v) {
  DenseMatrix m(1, static_cast<int>(v.size()));
  for (int j = 0; j < m.cols(); ++j) m(0, j) = v[static_cast<std::size_t>(j)];
  return m;
}

bool DenseMatrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void DenseMatrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul shape mismatch: " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " * " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
  DenseMatrix out(a.rows(), b.cols());
  const int n = a.rows(), k_dim = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    double* out_row = out.data().data() + static_cast<std::size_t>(i) * m;
    for (int k = 0; k < k_dim; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* b_row = b.data().data() + static_cast<std::size_t>(k) * m;
      for (int j = 0; j < m; ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) throw DimensionError("add shape mismatch");
  DenseMatrix out = a;
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) throw DimensionError("subtract shape mismatch");
  DenseMatrix out = a;
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

DenseMatrix scale(const DenseMatrix& a, double s) {
  DenseMatrix out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) throw DimensionError("max_abs_diff shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

double frobenius_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

DenseMatrix solve_linear(DenseMatrix a, DenseMatrix b) {
  if (a.rows() != a.cols()) throw DimensionError("solve_linear needs a square matrix");
  if (a.rows() != b.rows()) throw DimensionError("solve_linear rhs row mismatch");
  const int n = a.rows();
  const int m = b.cols();

  // Forward elimination with partial pivoting, applied to both A and B.
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double best = std::abs(a(col, col));
    for (int r = col + 1; r < n; ++r) {
      const double v = std::abs(a(r, col));
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best == 0.0) throw SingularMatrixError("singular matrix in solve_linear");
    if (pivot != col) {
      for (int j = 0; j < n; ++j) std::swap(a(col, j), a(pivot, j));
      for (int j = 0; j < m; ++j) std::swap(b(col, j), b(pivot, j));
    }
    const double inv_p = 1.0 / a(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double f = a(r, col) * inv_p;
      if (f == 0.0) continue;
      a(r, col) = 0.0;
      for (int j = col + 1; j < n; ++j) a(r, j) -= f * a(col, j);
      for (int j = 0; j < m; ++j) b(r, j) -= f * b(col, j);
    }
  }

  // Back substitution.
  DenseMatrix x(n, m);
  for (int r = n - 1; r >= 0; --r) {
    for (int j = 0; j < m; ++j) {
      double s = b(r, j);
      for (int k = r + 1; k < n; ++k) s -= a(r, k) * x(k, j);
      x(r, j) = s / a(r, r);
    }
  }
  return x;
}

}  // namespace s2fgl
