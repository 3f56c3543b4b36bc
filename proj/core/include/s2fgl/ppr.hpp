#pragma once

#include <cstdint>
#include <vector>

#include "s2fgl/graph.hpp"
#include "s2fgl/matrix.hpp"

namespace s2fgl {

// Personalized PageRank matrix P = alpha * (I - (1-alpha) W)^-1 with
// W = D^-1 A (row-stochastic random walk; degree-0 rows of W stay zero).
// With self-loops, A and D are taken from A' = A + I.
struct PprMatrix {
  DenseMatrix values;
  double damping_alpha = 0.85;
};

struct CentralityScores {
  std::vector<double> structural;       // max_v P~_{u,v} * tau_v
  std::vector<double> label_influence;  // sum over labeled v of P~(L)_{v,u}
  std::vector<double> salc;             // structural + label_influence
  std::vector<double> prior_tau;
};

// Direct dense solve; alpha = 1 is accepted as the limit P = I.
PprMatrix ppr(const Graph& g, double damping_alpha, bool self_loops);

// Power iteration X <- alpha*I + (1-alpha) W X until the update falls below
// tol in the infinity norm. Throws ConvergenceError with the residual if the
// iteration cap is reached.
PprMatrix ppr_iterative(const Graph& g, double damping_alpha, bool self_loops, double tol,
                        int max_iterations = 100000);

// Direct solve up to the node-count threshold, iterative above it.
PprMatrix ppr_auto(const Graph& g, double damping_alpha, bool self_loops,
                   int direct_threshold = 3000, double tol = 1e-8);

// Structure Inertia Score: sum over all nodes of the strongest PPR influence
// received from any training node.
double sis(const PprMatrix& p, const std::vector<int>& train_mask);

// Per-client SIS on each induced subgraph using that client's train nodes,
// summed over clients. Clients without train nodes contribute 0 (warning).
double sis_partitioned(const Graph& g, const PartitionPlan& plan, const SplitMasks& masks,
                       double damping_alpha);

// Structure-Aware Label Centrality. The structural term uses the standard
// PPR (no self-loops); the label term uses column sums of the self-loop
// variant restricted to labeled rows.
CentralityScores salc(const Graph& g, const std::vector<int>& train_mask, double damping_alpha,
                      const std::vector<double>& tau);

// K = max(1, floor(k_fraction * N)) highest-SALC nodes; ties by lower id.
std::vector<int> select_top_k(const CentralityScores& scores, double k_fraction);

}  // namespace s2fgl
