#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "s2fgl/matrix.hpp"

namespace s2fgl {

// Undirected simple graph with node features and (possibly partial) labels.
// Immutable after construction; label -1 means unlabeled. Self-loops are
// never stored; consumers that need A+I add them explicitly.
class Graph {
 public:
  Graph() = default;
  Graph(int n, std::vector<std::pair<int, int>> edges, DenseMatrix features,
        std::vector<int> labels, int num_classes);

  int num_nodes() const { return n_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int feature_dim() const { return features_.cols(); }
  int num_classes() const { return num_classes_; }

  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const DenseMatrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<std::vector<int>>& adjacency() const { return adj_; }
  int degree(int u) const { return static_cast<int>(adj_[static_cast<std::size_t>(u)].size()); }

 private:
  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;  // canonical u < v
  DenseMatrix features_;
  std::vector<int> labels_;
  int num_classes_ = 0;
  std::vector<std::vector<int>> adj_;
};

// Disjoint train/val/test node subsets (sorted ids).
struct SplitMasks {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

// node -> client assignment; every client nonempty.
struct PartitionPlan {
  std::vector<int> assignment;
  int num_clients = 0;

  std::vector<std::vector<int>> client_nodes() const;
};

struct InducedSubgraph {
  Graph graph;
  std::vector<int> parent_ids;   // new id -> old id (ascending)
  std::vector<int> local_ids;    // old id -> new id, -1 if absent
};

// Text format: header "N d C"; N lines "label f_1 ... f_d" (-1 = unlabeled);
// an "EDGES" sentinel; one "u v" pair per line, 0-indexed.
Graph load_graph(const std::string& path);

// Stochastic block model with class-mean Gaussian features (one mean drawn
// per block, unit noise) and labels equal to block ids.
Graph sbm_generate(const std::vector<int>& block_sizes, double p_in, double p_out,
                   int feature_dim, std::uint64_t seed);

// Keeps only intra-subset edges (cross-subset edges are lost, which is
// exactly how subgraph federation loses label paths). Ids are re-indexed
// densely in ascending parent order.
InducedSubgraph induced_subgraph(const Graph& g, const std::vector<int>& nodes);

// Per-class shuffled assignment; val/test get the floor share, remainders go
// to train. Classes with fewer than 3 nodes go entirely to train (warning).
SplitMasks stratified_split(const Graph& g, const std::array<double, 3>& ratios,
                            std::uint64_t seed);

// D^{-1/2} (A [+ I]) D^{-1/2}; rows of isolated nodes without a self-loop
// stay zero.
DenseMatrix normalized_adjacency(const Graph& g, bool add_self_loops);

}  // namespace s2fgl
