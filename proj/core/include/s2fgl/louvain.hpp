#pragma once

#include <cstdint>

#include "s2fgl/graph.hpp"

namespace s2fgl {

// Modularity-greedy Louvain partition, post-processed to exactly
// target_clients parts: surplus communities are merged smallest-first,
// missing ones are created by re-running Louvain on the largest community
// (bisecting by node id when it refuses to split). Deterministic under a
// fixed seed; client ids are ordered by smallest member node.
PartitionPlan louvain_partition(const Graph& g, int target_clients, std::uint64_t seed);

}  // namespace s2fgl
