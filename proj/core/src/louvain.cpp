#include "s2fgl/louvain.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "s2fgl/rng.hpp"

namespace s2fgl {

namespace {

struct WeightedGraph {
  int n = 0;
  std::vector<std::vector<std::pair<int, double>>> adj;  // neighbor != self
  std::vector<double> self_weight;                       // self-loop weight, counted once
  std::vector<double> strength;                          // sum of incident weights + 2*self
  double total_weight = 0.0;                             // m: edges once + self-loops once

  static WeightedGraph from_adjacency(const std::vector<std::vector<int>>& in_adj) {
    WeightedGraph g;
    g.n = static_cast<int>(in_adj.size());
    g.adj.resize(in_adj.size());
    g.self_weight.assign(in_adj.size(), 0.0);
    g.strength.assign(in_adj.size(), 0.0);
    for (int u = 0; u < g.n; ++u) {
      for (int v : in_adj[static_cast<std::size_t>(u)]) {
        g.adj[static_cast<std::size_t>(u)].push_back({v, 1.0});
      }
      g.strength[static_cast<std::size_t>(u)] =
          static_cast<double>(in_adj[static_cast<std::size_t>(u)].size());
      g.total_weight += g.strength[static_cast<std::size_t>(u)];
    }
    g.total_weight /= 2.0;
    return g;
  }
};

// One local-moving pass; returns the community assignment and whether any
// node moved. Node visitation order is a seeded permutation, fixed per pass.
bool one_level(const WeightedGraph& g, Rng& rng, std::vector<int>& comm) {
  comm.resize(static_cast<std::size_t>(g.n));
  std::iota(comm.begin(), comm.end(), 0);
  std::vector<double> tot(g.strength.begin(), g.strength.end());

  if (g.total_weight <= 0.0) return false;  // edgeless: nothing to optimize
  const double m = g.total_weight;

  std::vector<int> order(static_cast<std::size_t>(g.n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  bool any_improvement = false;
  int pass = 0;
  while (pass++ < 128) {
    int moves = 0;
    for (int u : order) {
      const int old_comm = comm[static_cast<std::size_t>(u)];
      const double ku = g.strength[static_cast<std::size_t>(u)];
      tot[static_cast<std::size_t>(old_comm)] -= ku;

      // Edge weight from u into each adjacent community.
      std::map<int, double> links;
      links[old_comm] += 0.0;
      for (auto [v, w] : g.adj[static_cast<std::size_t>(u)]) {
        if (v == u) continue;
        links[comm[static_cast<std::size_t>(v)]] += w;
      }

      int best_comm = old_comm;
      double best_gain = links[old_comm] - ku * tot[static_cast<std::size_t>(old_comm)] / (2.0 * m);
      for (const auto& [c, k_uc] : links) {
        if (c == old_comm) continue;
        const double gain = k_uc - ku * tot[static_cast<std::size_t>(c)] / (2.0 * m);
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_comm = c;
        }
      }

      tot[static_cast<std::size_t>(best_comm)] += ku;
      comm[static_cast<std::size_t>(u)] = best_comm;
      if (best_comm != old_comm) ++moves;
    }
    if (moves == 0) break;
    any_improvement = true;
  }
  return any_improvement;
}

// Renumbers community labels to 0..k-1 in order of first appearance.
int renumber(std::vector<int>& comm) {
  std::map<int, int> remap;
  for (int& c : comm) {
    auto [it, inserted] = remap.insert({c, static_cast<int>(remap.size())});
    c = it->second;
  }
  return static_cast<int>(remap.size());
}

WeightedGraph aggregate(const WeightedGraph& g, const std::vector<int>& comm, int num_comms) {
  WeightedGraph out;
  out.n = num_comms;
  out.adj.resize(static_cast<std::size_t>(num_comms));
  out.self_weight.assign(static_cast<std::size_t>(num_comms), 0.0);
  out.strength.assign(static_cast<std::size_t>(num_comms), 0.0);

  std::vector<std::map<int, double>> links(static_cast<std::size_t>(num_comms));
  for (int u = 0; u < g.n; ++u) {
    const int cu = comm[static_cast<std::size_t>(u)];
    out.self_weight[static_cast<std::size_t>(cu)] += g.self_weight[static_cast<std::size_t>(u)];
    for (auto [v, w] : g.adj[static_cast<std::size_t>(u)]) {
      const int cv = comm[static_cast<std::size_t>(v)];
      if (cu == cv) {
        // Each intra edge is seen from both endpoints; count once.
        if (u < v) out.self_weight[static_cast<std::size_t>(cu)] += w;
      } else {
        links[static_cast<std::size_t>(cu)][cv] += w;
      }
    }
  }
  for (int c = 0; c < num_comms; ++c) {
    double s = 2.0 * out.self_weight[static_cast<std::size_t>(c)];
    for (const auto& [d, w] : links[static_cast<std::size_t>(c)]) {
      out.adj[static_cast<std::size_t>(c)].push_back({d, w});
      s += w;
    }
    out.strength[static_cast<std::size_t>(c)] = s;
    out.total_weight += s;
  }
  out.total_weight /= 2.0;
  return out;
}

// Full multi-level Louvain over a plain adjacency list.
std::vector<int> louvain_communities(const std::vector<std::vector<int>>& adj,
                                     std::uint64_t seed) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> node_to_comm(static_cast<std::size_t>(n));
  std::iota(node_to_comm.begin(), node_to_comm.end(), 0);

  WeightedGraph level = WeightedGraph::from_adjacency(adj);
  Rng rng(seed);
  int level_index = 0;
  while (level_index++ < 64) {
    std::vector<int> comm;
    const bool improved = one_level(level, rng, comm);
    const int k = renumber(comm);
    for (int& c : node_to_comm) c = comm[static_cast<std::size_t>(c)];
    if (!improved || k == level.n) break;
    level = aggregate(level, comm, k);
  }
  renumber(node_to_comm);
  return node_to_comm;
}

std::vector<std::vector<int>> group_by_community(const std::vector<int>& assignment) {
  int k = 0;
  for (int c : assignment) k = std::max(k, c + 1);
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(k));
  for (int u = 0; u < static_cast<int>(assignment.size()); ++u) {
    groups[static_cast<std::size_t>(assignment[static_cast<std::size_t>(u)])].push_back(u);
  }
  return groups;
}

}  // namespace

PartitionPlan louvain_partition(const Graph& g, int target_clients, std::uint64_t seed) {
  const int n = g.num_nodes();
  if (target_clients < 1) throw std::invalid_argument("louvain_partition: target_clients < 1");
  if (target_clients > n) {
    throw std::invalid_argument("louvain_partition: target_clients (" +
                                std::to_string(target_clients) + ") exceeds node count (" +
                                std::to_string(n) + ")");
  }

  std::vector<std::vector<int>> communities =
      group_by_community(louvain_communities(g.adjacency(), seed));

  // Split the largest community (ties by smallest member id) until we have at
  // least target_clients parts. Re-running Louvain on the community usually
  // splits it; a deterministic bisection by node id is the fallback.
  std::uint64_t split_round = 0;
  auto largest = [&]() {
    std::size_t best = 0;
    for (std::size_t i = 1; i < communities.size(); ++i) {
      const auto& a = communities[i];
      const auto& b = communities[best];
      if (a.size() > b.size() || (a.size() == b.size() && a.front() < b.front())) best = i;
    }
    return best;
  };
  while (static_cast<int>(communities.size()) < target_clients) {
    const std::size_t idx = largest();
    std::vector<int> members = communities[idx];
    std::sort(members.begin(), members.end());

    std::vector<int> local(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < static_cast<int>(members.size()); ++i) {
      local[static_cast<std::size_t>(members[static_cast<std::size_t>(i)])] = i;
    }
    std::vector<std::vector<int>> sub_adj(members.size());
    for (auto [u, v] : g.edges()) {
      const int lu = local[static_cast<std::size_t>(u)];
      const int lv = local[static_cast<std::size_t>(v)];
      if (lu >= 0 && lv >= 0) {
        sub_adj[static_cast<std::size_t>(lu)].push_back(lv);
        sub_adj[static_cast<std::size_t>(lv)].push_back(lu);
      }
    }

    std::vector<std::vector<int>> parts = group_by_community(
        louvain_communities(sub_adj, derive_seed(seed, seed_stream::kLouvain, ++split_round)));
    if (parts.size() <= 1) {
      const std::size_t half = members.size() / 2;
      parts = {std::vector<int>(), std::vector<int>()};
      for (std::size_t i = 0; i < members.size(); ++i) {
        parts[i < half ? 0 : 1].push_back(static_cast<int>(i));
      }
    }

    communities.erase(communities.begin() + static_cast<std::ptrdiff_t>(idx));
    for (auto& part : parts) {
      std::vector<int> mapped;
      mapped.reserve(part.size());
      for (int i : part) mapped.push_back(members[static_cast<std::size_t>(i)]);
      communities.push_back(std::move(mapped));
    }
  }

  // Merge the two smallest communities (ties by smallest member id) until the
  // count matches.
  while (static_cast<int>(communities.size()) > target_clients) {
    for (auto& c : communities) std::sort(c.begin(), c.end());
    auto order = [](const std::vector<int>& a, const std::vector<int>& b) {
      return a.size() < b.size() || (a.size() == b.size() && a.front() < b.front());
    };
    std::size_t s1 = 0;
    for (std::size_t i = 1; i < communities.size(); ++i) {
      if (order(communities[i], communities[s1])) s1 = i;
    }
    std::size_t s2 = s1 == 0 ? 1 : 0;
    for (std::size_t i = 0; i < communities.size(); ++i) {
      if (i == s1) continue;
      if (order(communities[i], communities[s2])) s2 = i;
    }
    communities[s1].insert(communities[s1].end(), communities[s2].begin(), communities[s2].end());
    communities.erase(communities.begin() + static_cast<std::ptrdiff_t>(s2));
  }

  // Deterministic client ids: order communities by smallest member node.
  for (auto& c : communities) std::sort(c.begin(), c.end());
  std::sort(communities.begin(), communities.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });

  PartitionPlan plan;
  plan.num_clients = static_cast<int>(communities.size());
  plan.assignment.assign(static_cast<std::size_t>(n), -1);
  for (int c = 0; c < plan.num_clients; ++c) {
    for (int u : communities[static_cast<std::size_t>(c)]) {
      plan.assignment[static_cast<std::size_t>(u)] = c;
    }
  }
  return plan;
}

}  // namespace s2fgl
