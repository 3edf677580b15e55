#include "sgcl/encoders.hpp"

#include <algorithm>

#include "sgcl/hash.hpp"

namespace sgcl {

void EncoderConfig::validate() const {
    if (embed_dim <= 0 || gnn_layers <= 0 || f_hidden <= 0 || projection_dim <= 0)
        fail_usage("encoder dimensions must be positive");
    if (temperature <= 0.0) fail_usage("temperature must be positive");
    if (crop_size < 4 || crop_size % 4 != 0)
        fail_usage("crop_size must be a positive multiple of 4");
    if (conv1_channels <= 0 || conv2_channels <= 0 || label_embed_dim <= 0)
        fail_usage("visual encoder dimensions must be positive");
    if (label_count <= 0 || attribute_count <= 0)
        fail_usage("vocabulary sizes must be positive");
    if (theta_bins <= 0 || level_count <= 0)
        fail_usage("banner dimensions must be positive");
}

uint64_t EncoderConfig::hash() const {
    Fnv1a64 h;
    h.update("encoder:");
    auto add = [&](int64_t v) { h.update(&v, sizeof(v)); };
    add(embed_dim);
    add(gnn_layers);
    add(f_hidden);
    add(projection_dim);
    add(static_cast<int64_t>(temperature * 1e9));
    add(learnable_temperature ? 1 : 0);
    add(crop_size);
    add(conv1_channels);
    add(conv2_channels);
    add(label_embed_dim);
    add(label_count);
    add(attribute_count);
    add(theta_bins);
    add(level_count);
    return h.digest();
}

std::vector<float> crop_mask(const BinaryMask& mask, int crop_size) {
    int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.get(x, y)) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    if (x1 < 0) fail_data("degenerate mask");

    const int bw = x1 - x0 + 1, bh = y1 - y0 + 1;
    std::vector<float> out(static_cast<size_t>(crop_size) * crop_size, 0.0f);
    for (int y = 0; y < crop_size; ++y) {
        int sy = y0 + std::min(bh - 1, (y * bh) / crop_size);
        for (int x = 0; x < crop_size; ++x) {
            int sx = x0 + std::min(bw - 1, (x * bw) / crop_size);
            out[static_cast<size_t>(y) * crop_size + x] = mask.get(sx, sy) ? 1.0f : 0.0f;
        }
    }
    return out;
}

SceneInputs make_scene_inputs(const Scene& scene, const SceneGraph& graph,
                              const EncoderConfig& cfg) {
    cfg.validate();
    SceneInputs in;
    in.scene_id = scene.scene_id;
    in.n_objects = static_cast<int>(scene.objects.size());
    in.crops.reserve(in.n_objects);
    for (const auto& o : scene.objects) {
        if (o.label_id >= cfg.label_count)
            fail_data("scene label id exceeds configured vocabulary in " + scene.scene_id);
        if (o.attribute_id >= cfg.attribute_count)
            fail_data("scene attribute id exceeds configured vocabulary in " + scene.scene_id);
        in.crops.push_back(crop_mask(o.mask, cfg.crop_size));
        in.label_ids.push_back(o.label_id);
        in.attribute_ids.push_back(o.attribute_id);
    }
    in.edges.reserve(graph.edges.size());
    for (const auto& e : graph.edges) {
        if (e.banner.theta_bins != cfg.theta_bins ||
            static_cast<int>(e.banner.levels.size()) != cfg.level_count)
            fail_data("banner dimensions disagree with encoder config in " + scene.scene_id);
        in.edges.emplace_back(e.i, e.j);
        in.banner_flat.push_back(flatten_banner(e.banner));
        in.dir_targets.push_back(dominant_direction(e.banner));
    }
    in.adjacency = graph.adjacency;
    return in;
}

}  // namespace sgcl
