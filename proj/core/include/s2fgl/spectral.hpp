#pragma once

#include <vector>

#include "s2fgl/autodiff.hpp"
#include "s2fgl/graph.hpp"
#include "s2fgl/matrix.hpp"

namespace s2fgl {

// Sparse cosine self-similarity graph: top k_sim neighbors per row,
// symmetrized by elementwise max, negatives clamped to 0, zero diagonal.
struct SimilarityGraph {
  DenseMatrix s_prime;
  int k_sim = 0;
};

// k_eig extreme eigenpairs of a symmetric matrix. Vectors are unit-norm with
// a deterministic sign (largest-magnitude entry positive). low_vals ascend,
// high_vals descend.
struct SpectralBasis {
  std::vector<double> low_vals;
  std::vector<double> high_vals;
  std::vector<std::vector<double>> low_vecs;
  std::vector<std::vector<double>> high_vecs;
};

SimilarityGraph sparse_self_similarity(const DenseMatrix& features, int k_sim);

// L' = D' - S' for the similarity graph: symmetric, PSD, zero row sums.
DenseMatrix laplacian(const SimilarityGraph& sg);

// Full symmetric eigendecomposition by cyclic Jacobi rotations
// (off-diagonal threshold 1e-10), then the k_eig smallest and largest pairs.
SpectralBasis extreme_eigenpairs(const DenseMatrix& l, int k_eig);

// All eigenvalues, ascending (same Jacobi sweep; used by the diagnostics).
std::vector<double> symmetric_eigenvalues(const DenseMatrix& m);

// Rank-one frequency projection (u u^T) H computed as u (u^T H); u must be
// unit-norm within 1e-8 and is a frozen constant on the tape.
ad::Value project(ad::Tape& tape, ad::Value features, const std::vector<double>& u);
DenseMatrix project(const DenseMatrix& features, const std::vector<double>& u);

// Symmetric-normalized structural Laplacian D^-1/2 (D - A) D^-1/2 with zero
// rows for isolated nodes; eigenvalues live in [0, 2].
DenseMatrix sym_normalized_laplacian(const Graph& g);

// Histogram of the eigenvalues of `l` over [0, lambda_max], Laplace-smoothed
// with eps = 1e-6 and renormalized. Out-of-range values clamp into the
// boundary bins.
std::vector<double> eigenvalue_histogram(const DenseMatrix& l, int bins, double lambda_max = 2.0);

// Entry (i, j) = KL(hist_i || hist_j); diagonal exactly 0.
DenseMatrix spectral_kl_heatmap(const std::vector<std::vector<double>>& histograms);

}  // namespace s2fgl
