#include "s2fgl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "s2fgl/errors.hpp"

namespace s2fgl {

namespace {

constexpr double kJacobiThreshold = 1e-10;
constexpr double kLogClamp = 1e-12;

// Cyclic Jacobi on a symmetric matrix. Returns eigenvalues (unordered) in
// `diag` and accumulates rotations into `vecs` (columns are eigenvectors).
void jacobi_eigen(DenseMatrix a, std::vector<double>& diag, DenseMatrix& vecs) {
  const int n = a.rows();
  vecs = DenseMatrix::identity(n);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    }
    if (off <= kJacobiThreshold) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= kJacobiThreshold) continue;

        // Classic stable rotation: tan(2*theta) = 2*a_pq / (a_qq - a_pp).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = vecs(k, p);
          const double vkq = vecs(k, q);
          vecs(k, p) = c * vkp - s * vkq;
          vecs(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  diag.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) diag[static_cast<std::size_t>(i)] = a(i, i);
}

void check_symmetric(const DenseMatrix& m, const char* who) {
  if (m.rows() != m.cols()) throw DimensionError(std::string(who) + ": matrix not square");
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = i + 1; j < m.cols(); ++j) {
      if (std::abs(m(i, j) - m(j, i)) > 1e-10) {
        throw std::invalid_argument(std::string(who) + ": matrix not symmetric within 1e-10");
      }
    }
  }
}

// Unit-normalizes and fixes the sign so the largest-magnitude entry (ties by
// lower index) is positive.
std::vector<double> normalized_column(const DenseMatrix& vecs, int col) {
  const int n = vecs.rows();
  std::vector<double> u(static_cast<std::size_t>(n));
  double norm_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    u[static_cast<std::size_t>(i)] = vecs(i, col);
    norm_sq += u[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(i)];
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (double& x : u) x *= inv;

  int arg = 0;
  double best = std::abs(u[0]);
  for (int i = 1; i < n; ++i) {
    const double m = std::abs(u[static_cast<std::size_t>(i)]);
    if (m > best) {
      best = m;
      arg = i;
    }
  }
  if (u[static_cast<std::size_t>(arg)] < 0.0) {
    for (double& x : u) x = -x;
  }
  return u;
}

}  // namespace

SimilarityGraph sparse_self_similarity(const DenseMatrix& features, int k_sim) {
  const int n = features.rows();
  if (n < 2) throw std::invalid_argument("sparse_self_similarity: need at least 2 rows");
  if (k_sim < 1) throw std::invalid_argument("sparse_self_similarity: k_sim must be >= 1");
  if (k_sim >= n) throw std::invalid_argument("sparse_self_similarity: k_sim must be < N");

  std::vector<double> norms(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < features.cols(); ++j) s += features(i, j) * features(i, j);
    norms[static_cast<std::size_t>(i)] = std::sqrt(s);
  }

  DenseMatrix cosine(n, n);
  for (int i = 0; i < n; ++i) {
    if (norms[static_cast<std::size_t>(i)] == 0.0) continue;
    for (int j = i + 1; j < n; ++j) {
      if (norms[static_cast<std::size_t>(j)] == 0.0) continue;
      double dot = 0.0;
      for (int k = 0; k < features.cols(); ++k) dot += features(i, k) * features(j, k);
      const double c = dot / (norms[static_cast<std::size_t>(i)] * norms[static_cast<std::size_t>(j)]);
      cosine(i, j) = c;
      cosine(j, i) = c;
    }
  }

  // Keep each row's top-k_sim other nodes (ties by lower id), zero the rest.
  DenseMatrix kept(n, n);
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (a == i) return false;  // never keep self
      if (b == i) return true;
      const double ca = cosine(i, a);
      const double cb = cosine(i, b);
      if (ca != cb) return ca > cb;
      return a < b;
    });
    for (int r = 0; r < k_sim; ++r) {
      const int j = order[static_cast<std::size_t>(r)];
      kept(i, j) = cosine(i, j);
    }
  }

  SimilarityGraph sg;
  sg.k_sim = k_sim;
  sg.s_prime = DenseMatrix(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double v = std::max(kept(i, j), kept(j, i));  // symmetrize
      sg.s_prime(i, j) = v > 0.0 ? v : 0.0;               // clamp negatives
    }
  }
  return sg;
}

DenseMatrix laplacian(const SimilarityGraph& sg) {
  const int n = sg.s_prime.rows();
  DenseMatrix l = scale(sg.s_prime, -1.0);
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int j = 0; j < n; ++j) deg += sg.s_prime(i, j);
    l(i, i) += deg;
  }
  return l;
}

SpectralBasis extreme_eigenpairs(const DenseMatrix& l, int k_eig) {
  check_symmetric(l, "extreme_eigenpairs");
  const int n = l.rows();
  if (k_eig < 1) throw std::invalid_argument("extreme_eigenpairs: k_eig must be >= 1");
  if (2 * k_eig > n) {
    throw std::invalid_argument("extreme_eigenpairs: k_eig (" + std::to_string(k_eig) +
                                ") exceeds N/2 for N=" + std::to_string(n));
  }

  std::vector<double> vals;
  DenseMatrix vecs;
  jacobi_eigen(l, vals, vecs);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return vals[static_cast<std::size_t>(a)] < vals[static_cast<std::size_t>(b)];
  });

  SpectralBasis basis;
  for (int m = 0; m < k_eig; ++m) {
    const int lo = order[static_cast<std::size_t>(m)];
    basis.low_vals.push_back(vals[static_cast<std::size_t>(lo)]);
    basis.low_vecs.push_back(normalized_column(vecs, lo));
    const int hi = order[static_cast<std::size_t>(n - 1 - m)];
    basis.high_vals.push_back(vals[static_cast<std::size_t>(hi)]);
    basis.high_vecs.push_back(normalized_column(vecs, hi));
  }
  return basis;
}

std::vector<double> symmetric_eigenvalues(const DenseMatrix& m) {
  check_symmetric(m, "symmetric_eigenvalues");
  std::vector<double> vals;
  DenseMatrix vecs;
  jacobi_eigen(m, vals, vecs);
  std::sort(vals.begin(), vals.end());
  return vals;
}

namespace {

void check_unit_norm(const std::vector<double>& u, int expected_rows) {
  if (static_cast<int>(u.size()) != expected_rows) {
    throw DimensionError("project: eigenvector length must match feature rows");
  }
  double s = 0.0;
  for (double x : u) s += x * x;
  if (std::abs(std::sqrt(s) - 1.0) > 1e-8) {
    throw std::invalid_argument("project: vector is not unit-norm within 1e-8");
  }
}

}  // namespace

ad::Value project(ad::Tape& tape, ad::Value features, const std::vector<double>& u) {
  check_unit_norm(u, tape.value(features).rows());
  const ad::Value ut = tape.constant(DenseMatrix::row_vector(u));
  const ad::Value uc = tape.constant(DenseMatrix::column(u));
  return tape.matmul(uc, tape.matmul(ut, features));
}

DenseMatrix project(const DenseMatrix& features, const std::vector<double>& u) {
  check_unit_norm(u, features.rows());
  return multiply(DenseMatrix::column(u), multiply(DenseMatrix::row_vector(u), features));
}

DenseMatrix sym_normalized_laplacian(const Graph& g) {
  const int n = g.num_nodes();
  DenseMatrix l(n, n);
  std::vector<double> inv_sqrt(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const double deg = static_cast<double>(g.degree(i));
    if (deg > 0.0) {
      inv_sqrt[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(deg);
      l(i, i) = 1.0;  // D^-1/2 D D^-1/2 on non-isolated nodes
    }
  }
  for (auto [u, v] : g.edges()) {
    const double w = inv_sqrt[static_cast<std::size_t>(u)] * inv_sqrt[static_cast<std::size_t>(v)];
    l(u, v) -= w;
    l(v, u) -= w;
  }
  return l;
}

std::vector<double> eigenvalue_histogram(const DenseMatrix& l, int bins, double lambda_max) {
  if (bins < 2) throw std::invalid_argument("eigenvalue_histogram: bins must be >= 2");
  if (!(lambda_max > 0.0)) throw std::invalid_argument("eigenvalue_histogram: lambda_max must be positive");

  const std::vector<double> vals = symmetric_eigenvalues(l);
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double v : vals) {
    double pos = v / lambda_max * bins;
    // Eigenvalues that land on a bin edge (e.g. 1.0 from twin nodes) carry
    // solver noise of ~1e-10; snap them so binning is labeling-invariant.
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) < 1e-8) pos = nearest;
    const int b = std::clamp(static_cast<int>(std::floor(pos)), 0, bins - 1);
    counts[static_cast<std::size_t>(b)] += 1.0;
  }

  constexpr double kSmoothing = 1e-6;
  const double denom = static_cast<double>(vals.size()) + kSmoothing * bins;
  for (double& c : counts) c = (c + kSmoothing) / denom;
  return counts;
}

DenseMatrix spectral_kl_heatmap(const std::vector<std::vector<double>>& histograms) {
  const int k = static_cast<int>(histograms.size());
  for (const auto& h : histograms) {
    if (h.size() != histograms.front().size()) {
      throw DimensionError("spectral_kl_heatmap: histogram bin counts differ");
    }
  }
  DenseMatrix out(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;  // diagonal exactly 0
      double kl = 0.0;
      for (std::size_t b = 0; b < histograms[static_cast<std::size_t>(i)].size(); ++b) {
        const double p = histograms[static_cast<std::size_t>(i)][b];
        const double q = histograms[static_cast<std::size_t>(j)][b];
        kl += p * (std::log(std::max(p, kLogClamp)) - std::log(std::max(q, kLogClamp)));
      }
      out(i, j) = kl;
    }
  }
  return out;
}

}  // namespace s2fgl
