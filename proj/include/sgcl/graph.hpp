#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgcl/force.hpp"
#include "sgcl/scene.hpp"

namespace sgcl {

struct GraphConfig {
    BannerConfig banner;
    bool prune_far = false;       // keep only "near" pairs when set
    double near_fraction = 0.25;  // threshold used by prune_far
    int max_paths_per_k = 10000;  // enumeration cap, truncation by sampling
};

struct GraphNode {
    int object_id = 0;
    int label_id = 0;
    int attribute_id = 0;
};

struct GraphEdge {
    int i = 0;  // i < j
    int j = 0;
    ForceBanner banner;
};

struct SceneGraph {
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;
    // adjacency[v] = (neighbor, edge index), neighbors ascending
    std::vector<std::vector<std::pair<int, int>>> adjacency;

    int edge_index(int i, int j) const;  // -1 when absent
};

// Complete graph (or near-pruned) with a symmetric force banner per edge.
// When cache_dir is nonempty, banners are loaded from/saved to
// <cache_dir>/<scene_id>.sfbc keyed by the banner config hash.
SceneGraph build_graph(const Scene& scene, const GraphConfig& cfg,
                       const std::string& cache_dir = "");

// Simple path with exactly `hops` edges, stored in canonical orientation
// (first node id < last node id).
struct HopPath {
    std::vector<int> node_sequence;  // hops + 1 node ids
    std::vector<int> edge_sequence;  // hops edge indices
    int hops = 0;

    bool operator==(const HopPath&) const = default;
};

// Every simple path with exactly k edges, one record per undirected path,
// sorted lexicographically by node_sequence. k >= 2 required. If the count
// exceeds max_paths the result is a deterministic uniform subsample.
std::vector<HopPath> enumerate_paths(const SceneGraph& g, int k,
                                     int max_paths = 10000);

// Uniform sample without replacement from enumerate_paths, in enumeration
// order; the full set when budget covers it. Throws "no paths" when none
// exist so callers can skip the scene for that k.
std::vector<HopPath> sample_paths(const SceneGraph& g, int k, int budget,
                                  uint64_t seed);

}  // namespace sgcl
