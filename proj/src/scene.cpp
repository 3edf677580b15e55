#include "sgcl/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sgcl/rng.hpp"

namespace sgcl {

const char* relation_name(Relation r) {
    switch (r) {
        case Relation::left_of:     return "left_of";
        case Relation::right_of:    return "right_of";
        case Relation::above:       return "above";
        case Relation::below:       return "below";
        case Relation::overlapping: return "overlapping";
        case Relation::near:        return "near";
        case Relation::far:         return "far";
    }
    return "?";
}

std::optional<Relation> relation_from_name(const std::string& name) {
    for (int i = 0; i < kRelationCount; ++i) {
        Relation r = static_cast<Relation>(i);
        if (name == relation_name(r)) return r;
    }
    return std::nullopt;
}

void SceneGenConfig::validate() const {
    if (grid_width <= 0 || grid_height <= 0) fail_usage("grid dimensions must be positive");
    if (min_objects < 1 || max_objects < min_objects)
        fail_usage("object count range invalid");
    if (label_count < 1 || attribute_count < 1)
        fail_usage("label/attribute vocabulary must be nonempty");
    if (min_pixels < 1) fail_usage("min_pixels must be positive");
    if (placement_retries < 1) fail_usage("placement_retries must be positive");
    if (near_fraction <= 0.0 || near_fraction >= 1.0) fail_usage("near_fraction must be in (0,1)");
    if (axis_dominance < 1.0) fail_usage("axis_dominance must be >= 1");
}

std::vector<Relation> relation_oracle(const SceneObject& a, const SceneObject& b,
                                      const SceneGenConfig& rules) {
    if (a.mask.width != b.mask.width || a.mask.height != b.mask.height)
        fail_data("masks on different grids");

    const double dx = b.centroid.x - a.centroid.x;
    const double dy = b.centroid.y - a.centroid.y;

    std::vector<Relation> out;
    // Axis relation only when the axis dominates by the configured ratio and
    // the delta is nonzero, so at most one of the four directions fires.
    if (dx != 0.0 && std::abs(dx) >= rules.axis_dominance * std::abs(dy)) {
        out.push_back(dx > 0.0 ? Relation::left_of : Relation::right_of);
    } else if (dy != 0.0 && std::abs(dy) >= rules.axis_dominance * std::abs(dx)) {
        // y grows downward: b below a means dy > 0, i.e. a is above b.
        out.push_back(dy > 0.0 ? Relation::above : Relation::below);
    }

    if (masks_intersect(a.mask, b.mask)) out.push_back(Relation::overlapping);

    const double diag = std::hypot(static_cast<double>(rules.grid_width),
                                   static_cast<double>(rules.grid_height));
    const double dist = std::hypot(dx, dy);
    out.push_back(dist < rules.near_fraction * diag ? Relation::near : Relation::far);

    std::sort(out.begin(), out.end(),
              [](Relation l, Relation r) { return static_cast<int>(l) < static_cast<int>(r); });
    return out;
}

void populate_oracle_relations(Scene& scene, const SceneGenConfig& rules) {
    scene.oracle_relations.clear();
    const int n = static_cast<int>(scene.objects.size());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            for (Relation r : relation_oracle(scene.objects[i], scene.objects[j], rules)) {
                scene.oracle_relations.push_back({i, static_cast<int>(r), j});
            }
        }
    }
}

namespace {

// Shape rasterizers draw into a grid-sized mask at the given top-left corner.

void draw_rectangle(BinaryMask& m, int x0, int y0, int w, int h) {
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x)
            m.set(x, y);
}

void draw_disk(BinaryMask& m, int cx, int cy, int r) {
    for (int y = cy - r; y <= cy + r; ++y)
        for (int x = cx - r; x <= cx + r; ++x) {
            int ddx = x - cx, ddy = y - cy;
            if (ddx * ddx + ddy * ddy <= r * r) m.set(x, y);
        }
}

// Right triangle with legs (a, b); `orient` picks which corner holds the
// right angle (0..3).
void draw_triangle(BinaryMask& m, int x0, int y0, int a, int b, int orient) {
    for (int y = 0; y < b; ++y)
        for (int x = 0; x < a; ++x) {
            // Inside the right triangle anchored at the origin corner.
            bool inside = x * b + y * a <= a * b - 1;
            if (!inside) continue;
            int px = (orient == 1 || orient == 3) ? (a - 1 - x) : x;
            int py = (orient == 2 || orient == 3) ? (b - 1 - y) : y;
            m.set(x0 + px, y0 + py);
        }
}

}  // namespace

Scene generate_scene(uint64_t scene_seed, const std::string& scene_id,
                     const SceneGenConfig& config) {
    config.validate();
    Rng rng(scene_seed);

    Scene scene;
    scene.scene_id = scene_id;
    scene.grid_width = config.grid_width;
    scene.grid_height = config.grid_height;

    const int n_objects = rng.uniform_int(config.min_objects, config.max_objects);
    const int need_pixels = std::max(config.min_pixels, 9);

    for (int obj = 0; obj < n_objects; ++obj) {
        bool placed = false;
        for (int attempt = 0; attempt < config.placement_retries && !placed; ++attempt) {
            BinaryMask m = BinaryMask::zeros(config.grid_width, config.grid_height);
            const int shape = rng.uniform_int(0, 2);
            switch (shape) {
                case 0: {  // rectangle
                    int max_w = std::min(12, config.grid_width);
                    int max_h = std::min(12, config.grid_height);
                    if (max_w < 3 || max_h < 3) continue;
                    int w = rng.uniform_int(3, max_w);
                    int h = rng.uniform_int(3, max_h);
                    if (w > config.grid_width || h > config.grid_height) continue;
                    int x0 = rng.uniform_int(0, config.grid_width - w);
                    int y0 = rng.uniform_int(0, config.grid_height - h);
                    draw_rectangle(m, x0, y0, w, h);
                    break;
                }
                case 1: {  // disk
                    int max_r = std::min(5, (std::min(config.grid_width, config.grid_height) - 1) / 2);
                    if (max_r < 2) continue;
                    int r = rng.uniform_int(2, max_r);
                    int cx = rng.uniform_int(r, config.grid_width - 1 - r);
                    int cy = rng.uniform_int(r, config.grid_height - 1 - r);
                    draw_disk(m, cx, cy, r);
                    break;
                }
                default: {  // triangle
                    int max_a = std::min(10, config.grid_width);
                    int max_b = std::min(10, config.grid_height);
                    if (max_a < 5 || max_b < 5) continue;
                    int a = rng.uniform_int(5, max_a);
                    int b = rng.uniform_int(5, max_b);
                    int x0 = rng.uniform_int(0, config.grid_width - a);
                    int y0 = rng.uniform_int(0, config.grid_height - b);
                    int orient = rng.uniform_int(0, 3);
                    draw_triangle(m, x0, y0, a, b, orient);
                    break;
                }
            }
            if (m.pixel_count() < static_cast<size_t>(need_pixels)) continue;

            SceneObject o;
            o.object_id = obj;
            o.label_id = rng.uniform_int(0, config.label_count - 1);
            o.attribute_id = rng.uniform_int(0, config.attribute_count - 1);
            o.mask = std::move(m);
            o.centroid = centroid(o.mask);
            scene.objects.push_back(std::move(o));
            placed = true;
        }
        if (!placed) fail_data("placement exhausted for scene " + scene_id);
    }

    populate_oracle_relations(scene, config);
    return scene;
}

std::string make_scene_id(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "scene_%06d", index);
    return std::string(buf);
}

uint64_t scene_seed_for(uint64_t corpus_seed, const std::string& scene_id) {
    return substream_seed(corpus_seed, "datagen/" + scene_id);
}

}  // namespace sgcl
