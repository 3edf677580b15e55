#include "sgcl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "sgcl/rng.hpp"

namespace sgcl {

int SceneGraph::edge_index(int i, int j) const {
    if (i > j) std::swap(i, j);
    for (const auto& [nb, ei] : adjacency[i])
        if (nb == j) return ei;
    return -1;
}

SceneGraph build_graph(const Scene& scene, const GraphConfig& cfg,
                       const std::string& cache_dir) {
    cfg.banner.validate();
    SceneGraph g;
    const int n = static_cast<int>(scene.objects.size());
    g.nodes.reserve(n);
    for (const auto& o : scene.objects)
        g.nodes.push_back({o.object_id, o.label_id, o.attribute_id});
    g.adjacency.assign(n, {});

    const double diag = std::hypot(static_cast<double>(scene.grid_width),
                                   static_cast<double>(scene.grid_height));

    // Which pairs get an edge (complete graph unless prune_far).
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (cfg.prune_far) {
                const auto& a = scene.objects[i].centroid;
                const auto& b = scene.objects[j].centroid;
                if (std::hypot(b.x - a.x, b.y - a.y) >= cfg.near_fraction * diag) continue;
            }
            pairs.emplace_back(i, j);
        }
    }

    const uint64_t cfg_hash = cfg.banner.hash();
    std::string cache_path;
    std::vector<BannerCacheEntry> cached;
    if (!cache_dir.empty()) {
        cache_path = (std::filesystem::path(cache_dir) / (scene.scene_id + ".sfbc")).string();
        cached = load_banner_cache(cache_path, cfg_hash);
    }
    auto find_cached = [&](int i, int j) -> const ForceBanner* {
        for (const auto& e : cached)
            if (e.i == i && e.j == j) return &e.banner;
        return nullptr;
    };

    bool cache_complete = !cached.empty();
    for (const auto& [i, j] : pairs) {
        GraphEdge e;
        e.i = i;
        e.j = j;
        if (const ForceBanner* b = find_cached(i, j)) {
            e.banner = *b;
        } else {
            e.banner = symmetric_force_banner(scene.objects[i].mask,
                                              scene.objects[j].mask, cfg.banner);
            cache_complete = false;
        }
        int ei = static_cast<int>(g.edges.size());
        g.adjacency[i].emplace_back(j, ei);
        g.adjacency[j].emplace_back(i, ei);
        g.edges.push_back(std::move(e));
    }

    if (!cache_path.empty() && !cache_complete) {
        std::error_code ec;
        std::filesystem::create_directories(cache_dir, ec);
        std::vector<BannerCacheEntry> entries;
        entries.reserve(g.edges.size());
        for (const auto& e : g.edges) entries.push_back({e.i, e.j, e.banner});
        save_banner_cache(cache_path, cfg_hash, entries);
    }

    for (auto& adj : g.adjacency)
        std::sort(adj.begin(), adj.end());
    return g;
}

namespace {

void dfs_paths(const SceneGraph& g, int k, std::vector<int>& nodes,
               std::vector<int>& edges, std::vector<uint8_t>& visited,
               std::vector<HopPath>& out) {
    if (static_cast<int>(edges.size()) == k) {
        if (nodes.front() < nodes.back())
            out.push_back({nodes, edges, k});
        return;
    }
    const int v = nodes.back();
    for (const auto& [nb, ei] : g.adjacency[v]) {
        if (visited[nb]) continue;
        visited[nb] = 1;
        nodes.push_back(nb);
        edges.push_back(ei);
        dfs_paths(g, k, nodes, edges, visited, out);
        edges.pop_back();
        nodes.pop_back();
        visited[nb] = 0;
    }
}

}  // namespace

std::vector<HopPath> enumerate_paths(const SceneGraph& g, int k, int max_paths) {
    if (k < 2) fail_usage("path hop count must be >= 2");
    if (max_paths < 1) fail_usage("max_paths must be positive");
    const int n = static_cast<int>(g.nodes.size());

    std::vector<HopPath> out;
    if (k > n - 1) return out;

    std::vector<uint8_t> visited(n, 0);
    std::vector<int> nodes, edges;
    // Starts ascending + neighbors ascending => lexicographic emission order.
    for (int s = 0; s < n; ++s) {
        visited[s] = 1;
        nodes.push_back(s);
        dfs_paths(g, k, nodes, edges, visited, out);
        nodes.pop_back();
        visited[s] = 0;
    }

    if (static_cast<int>(out.size()) > max_paths) {
        // Deterministic truncation by sampling, seeded from the cap context.
        Rng rng(substream_seed(0x70617468ull, "path_cap/" + std::to_string(k) + "/" +
                                                  std::to_string(n)));
        auto keep = rng.sample_indices(out.size(), static_cast<size_t>(max_paths));
        std::vector<HopPath> trimmed;
        trimmed.reserve(keep.size());
        for (size_t idx : keep) trimmed.push_back(std::move(out[idx]));
        out = std::move(trimmed);
    }
    return out;
}

std::vector<HopPath> sample_paths(const SceneGraph& g, int k, int budget,
                                  uint64_t seed) {
    if (budget < 1) fail_usage("path budget must be >= 1");
    std::vector<HopPath> all = enumerate_paths(g, k);
    if (all.empty()) fail_data("no paths");
    if (budget >= static_cast<int>(all.size())) return all;

    Rng rng(seed);
    auto keep = rng.sample_indices(all.size(), static_cast<size_t>(budget));
    std::vector<HopPath> out;
    out.reserve(keep.size());
    for (size_t idx : keep) out.push_back(std::move(all[idx]));
    return out;
}

}  // namespace sgcl
