#pragma once

#include <string>
#include <vector>

#include "s2fgl/autodiff.hpp"
#include "s2fgl/matrix.hpp"
#include "s2fgl/rng.hpp"
#include "s2fgl/spectral.hpp"

namespace s2fgl {

// Per-class mean embeddings over a client's selected labeled nodes.
struct LocalPrototypes {
  int num_classes = 0;
  int dim = 0;
  std::vector<bool> present;   // size num_classes
  DenseMatrix prototypes;      // num_classes x dim, absent rows zero
  std::vector<int> counts;     // contributing node counts, 0 when absent
};

// Global anchor matrix: anchors_per_class entries per class, stacked
// class-major then anchor-minor: row(c, k) = c * anchors_per_class + k.
struct PrototypeRepository {
  int num_classes = 0;
  int anchors_per_class = 0;
  int dim = 0;
  std::vector<bool> present;  // per anchor row
  DenseMatrix anchors;        // (num_classes * anchors_per_class) x dim

  bool any_present() const;
  // Rows flagged present, stacked in order; row_map (optional) receives the
  // original row index of each kept row.
  DenseMatrix present_rows(std::vector<int>* row_map = nullptr) const;

  void save_csv(const std::string& path) const;
  static PrototypeRepository load_csv(const std::string& path);
};

struct LossWeights {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

// Mean embedding per class over `selected` nodes; nodes with label < 0 are
// skipped. Classes with no contributing node are flagged absent.
LocalPrototypes local_prototypes(const DenseMatrix& hidden, const std::vector<int>& labels,
                                 const std::vector<int>& selected, int num_classes);

// For each (class, anchor): sample ceil(fraction * clients-with-class)
// clients without replacement (independently per anchor) and take the
// count-weighted mean of their prototypes.
PrototypeRepository aggregate_global_repository(const std::vector<LocalPrototypes>& all_locals,
                                                double fraction, Rng& rng,
                                                int anchors_per_class = 4);

// Federated knowledge distillation: KL between softmaxed anchor-similarity
// profiles of local features (gradient side) and frozen global features.
ad::Value fkd_loss(ad::Tape& tape, ad::Value local_hidden, const DenseMatrix& global_hidden,
                   const PrototypeRepository& repo, const std::vector<int>& nodes,
                   double temperature = 1.0);

// Frequency alignment: MSE between local and global features projected onto
// the extreme eigenvectors of their respective similarity-graph Laplacians.
// Gradients flow only through local_hidden inside the projections; both
// bases are frozen. Returns a constant 0 (with a warning) when the client is
// smaller than 2*k_eig nodes.
ad::Value fgma_loss(ad::Tape& tape, ad::Value local_hidden, const DenseMatrix& global_hidden,
                    int k_sim, int k_eig);

// Same loss with externally supplied frozen bases (the runtime caches the
// global basis per round; tests freeze bases across finite differences).
ad::Value fgma_loss_with_bases(ad::Tape& tape, ad::Value local_hidden,
                               const SpectralBasis& local_basis,
                               const DenseMatrix& global_hidden,
                               const SpectralBasis& global_basis);

// ce + lambda1 * fkd + lambda2 * fgma.
ad::Value total_loss(ad::Tape& tape, ad::Value ce, ad::Value fkd, ad::Value fgma,
                     const LossWeights& w);

}  // namespace s2fgl
