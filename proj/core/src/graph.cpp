#include "s2fgl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "s2fgl/errors.hpp"
#include "s2fgl/rng.hpp"
#include "s2fgl/warnings.hpp"

namespace s2fgl {

Graph::Graph(int n, std::vector<std::pair<int, int>> edges, DenseMatrix features,
             std::vector<int> labels, int num_classes)
    : n_(n), features_(std::move(features)), labels_(std::move(labels)),
      num_classes_(num_classes) {
  if (n < 0) throw DimensionError("negative node count");
  if (features_.rows() != n) throw DimensionError("feature rows must equal node count");
  if (static_cast<int>(labels_.size()) != n) throw DimensionError("labels size must equal node count");
  for (int y : labels_) {
    if (y < -1 || y >= num_classes_) throw DimensionError("label out of range");
  }

  edges_.reserve(edges.size());
  std::set<std::pair<int, int>> seen;
  for (auto [u, v] : edges) {
    if (u < 0 || u >= n || v < 0 || v >= n) {
      throw DimensionError("edge endpoint out of range: (" + std::to_string(u) + "," +
                           std::to_string(v) + ")");
    }
    if (u == v) throw DimensionError("self-loop not allowed: node " + std::to_string(u));
    auto e = std::minmax(u, v);
    if (!seen.insert({e.first, e.second}).second) {
      throw DimensionError("duplicate edge: (" + std::to_string(e.first) + "," +
                           std::to_string(e.second) + ")");
    }
    edges_.emplace_back(e.first, e.second);
  }
  std::sort(edges_.begin(), edges_.end());

  adj_.resize(static_cast<std::size_t>(n));
  for (auto [u, v] : edges_) {
    adj_[static_cast<std::size_t>(u)].push_back(v);
    adj_[static_cast<std::size_t>(v)].push_back(u);
  }
  for (auto& nbrs : adj_) std::sort(nbrs.begin(), nbrs.end());
}

std::vector<std::vector<int>> PartitionPlan::client_nodes() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(num_clients));
  for (int u = 0; u < static_cast<int>(assignment.size()); ++u) {
    out[static_cast<std::size_t>(assignment[static_cast<std::size_t>(u)])].push_back(u);
  }
  return out;
}

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

Graph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");

  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };

  if (!next_line()) parse_fail(path, line_no, "missing header");
  int n = 0, d = 0, c = 0;
  {
    std::istringstream hs(line);
    if (!(hs >> n >> d >> c)) parse_fail(path, line_no, "header must be 'N d C'");
    if (n < 0 || d < 0 || c < 0) parse_fail(path, line_no, "negative header value");
  }

  DenseMatrix features(n, d);
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    if (!next_line()) parse_fail(path, line_no, "unexpected end of file in node section");
    std::istringstream ls(line);
    int label = 0;
    if (!(ls >> label)) parse_fail(path, line_no, "expected node label");
    if (label < -1 || label >= c) parse_fail(path, line_no, "label out of range [-1," + std::to_string(c) + ")");
    labels[static_cast<std::size_t>(i)] = label;
    for (int j = 0; j < d; ++j) {
      double v = 0.0;
      if (!(ls >> v)) parse_fail(path, line_no, "expected " + std::to_string(d) + " features");
      features(i, j) = v;
    }
    double extra;
    if (ls >> extra) parse_fail(path, line_no, "too many feature values");
  }

  if (!next_line() || line != "EDGES") parse_fail(path, line_no, "expected EDGES sentinel");

  std::vector<std::pair<int, int>> edges;
  while (next_line()) {
    std::istringstream es(line);
    int u = 0, v = 0;
    if (!(es >> u >> v)) parse_fail(path, line_no, "expected edge 'u v'");
    if (u < 0 || u >= n || v < 0 || v >= n) {
      parse_fail(path, line_no, "edge endpoint out of range");
    }
    if (u == v) parse_fail(path, line_no, "self-loop not allowed");
    edges.emplace_back(u, v);
  }

  try {
    return Graph(n, std::move(edges), std::move(features), std::move(labels), c);
  } catch (const DimensionError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

Graph sbm_generate(const std::vector<int>& block_sizes, double p_in, double p_out,
                   int feature_dim, std::uint64_t seed) {
  if (block_sizes.empty()) throw std::invalid_argument("sbm_generate: no blocks");
  for (int b : block_sizes) {
    if (b <= 0) throw std::invalid_argument("sbm_generate: empty block");
  }
  if (p_in < 0.0 || p_in > 1.0 || p_out < 0.0 || p_out > 1.0) {
    throw std::invalid_argument("sbm_generate: probabilities must be in [0,1]");
  }
  if (feature_dim <= 0) throw std::invalid_argument("sbm_generate: feature_dim must be positive");

  const int num_blocks = static_cast<int>(block_sizes.size());
  int n = 0;
  std::vector<int> block_of;
  for (int b = 0; b < num_blocks; ++b) {
    for (int i = 0; i < block_sizes[static_cast<std::size_t>(b)]; ++i) block_of.push_back(b);
    n += block_sizes[static_cast<std::size_t>(b)];
  }

  Rng rng(seed);

  // Block means with entries ~ N(0, 2^2/d) so inter-class separation stays
  // moderate relative to the unit feature noise regardless of dimension.
  const double mean_scale = 1.2 / std::sqrt(static_cast<double>(feature_dim));
  DenseMatrix means(num_blocks, feature_dim);
  for (int b = 0; b < num_blocks; ++b) {
    for (int j = 0; j < feature_dim; ++j) means(b, j) = mean_scale * rng.normal();
  }

  DenseMatrix features(n, feature_dim);
  for (int i = 0; i < n; ++i) {
    const int b = block_of[static_cast<std::size_t>(i)];
    for (int j = 0; j < feature_dim; ++j) features(i, j) = means(b, j) + rng.normal();
  }

  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      const double p =
          block_of[static_cast<std::size_t>(u)] == block_of[static_cast<std::size_t>(v)] ? p_in
                                                                                         : p_out;
      if (p > 0.0 && rng.bernoulli(p)) edges.emplace_back(u, v);
    }
  }

  std::vector<int> labels(block_of.begin(), block_of.end());
  return Graph(n, std::move(edges), std::move(features), std::move(labels), num_blocks);
}

InducedSubgraph induced_subgraph(const Graph& g, const std::vector<int>& nodes) {
  if (nodes.empty()) throw std::invalid_argument("induced_subgraph: empty node subset");
  std::vector<int> parents = nodes;
  std::sort(parents.begin(), parents.end());
  parents.erase(std::unique(parents.begin(), parents.end()), parents.end());

  std::vector<int> local(static_cast<std::size_t>(g.num_nodes()), -1);
  for (int i = 0; i < static_cast<int>(parents.size()); ++i) {
    const int p = parents[static_cast<std::size_t>(i)];
    if (p < 0 || p >= g.num_nodes()) throw std::invalid_argument("induced_subgraph: node out of range");
    local[static_cast<std::size_t>(p)] = i;
  }

  const int m = static_cast<int>(parents.size());
  DenseMatrix features(m, g.feature_dim());
  std::vector<int> labels(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const int p = parents[static_cast<std::size_t>(i)];
    for (int j = 0; j < g.feature_dim(); ++j) features(i, j) = g.features()(p, j);
    labels[static_cast<std::size_t>(i)] = g.labels()[static_cast<std::size_t>(p)];
  }

  std::vector<std::pair<int, int>> edges;
  for (auto [u, v] : g.edges()) {
    const int lu = local[static_cast<std::size_t>(u)];
    const int lv = local[static_cast<std::size_t>(v)];
    if (lu >= 0 && lv >= 0) edges.emplace_back(lu, lv);
  }

  InducedSubgraph out;
  out.graph = Graph(m, std::move(edges), std::move(features), std::move(labels), g.num_classes());
  out.parent_ids = std::move(parents);
  out.local_ids = std::move(local);
  return out;
}

SplitMasks stratified_split(const Graph& g, const std::array<double, 3>& ratios,
                            std::uint64_t seed) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("stratified_split: ratios must sum to 1");
  }

  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(g.num_classes()));
  for (int u = 0; u < g.num_nodes(); ++u) {
    const int y = g.labels()[static_cast<std::size_t>(u)];
    if (y >= 0) by_class[static_cast<std::size_t>(y)].push_back(u);
  }

  Rng rng(seed);
  SplitMasks masks;
  for (int c = 0; c < g.num_classes(); ++c) {
    auto& nodes = by_class[static_cast<std::size_t>(c)];
    if (nodes.empty()) continue;
    if (static_cast<int>(nodes.size()) < 3) {
      warn("stratified_split: class " + std::to_string(c) + " has fewer than 3 nodes; all to train");
      for (int u : nodes) masks.train.push_back(u);
      continue;
    }
    rng.shuffle(nodes);
    const int nc = static_cast<int>(nodes.size());
    const int n_val = static_cast<int>(std::floor(ratios[1] * nc));
    const int n_test = static_cast<int>(std::floor(ratios[2] * nc));
    const int n_train = nc - n_val - n_test;
    for (int i = 0; i < nc; ++i) {
      const int u = nodes[static_cast<std::size_t>(i)];
      if (i < n_train) {
        masks.train.push_back(u);
      } else if (i < n_train + n_val) {
        masks.val.push_back(u);
      } else {
        masks.test.push_back(u);
      }
    }
  }
  std::sort(masks.train.begin(), masks.train.end());
  std::sort(masks.val.begin(), masks.val.end());
  std::sort(masks.test.begin(), masks.test.end());
  return masks;
}

DenseMatrix normalized_adjacency(const Graph& g, bool add_self_loops) {
  const int n = g.num_nodes();
  DenseMatrix a(n, n);
  for (auto [u, v] : g.edges()) {
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  if (add_self_loops) {
    for (int i = 0; i < n; ++i) a(i, i) = 1.0;
  }
  std::vector<double> inv_sqrt(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int j = 0; j < n; ++j) deg += a(i, j);
    if (deg > 0.0) inv_sqrt[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(deg);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      a(i, j) *= inv_sqrt[static_cast<std::size_t>(i)] * inv_sqrt[static_cast<std::size_t>(j)];
    }
  }
  return a;
}

}  // namespace s2fgl
