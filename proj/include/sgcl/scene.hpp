#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgcl/mask.hpp"

namespace sgcl {

enum class Relation : int {
    left_of = 0,
    right_of = 1,
    above = 2,
    below = 3,
    overlapping = 4,
    near = 5,
    far = 6,
};

constexpr int kRelationCount = 7;

const char* relation_name(Relation r);
std::optional<Relation> relation_from_name(const std::string& name);

struct SceneObject {
    int object_id = 0;
    int label_id = 0;
    int attribute_id = 0;
    BinaryMask mask;
    Point2d centroid;  // derived, recomputable from mask
};

// (subject, relation, object): "subject is <relation> object".
struct RelationTriple {
    int subject_id = 0;
    int relation_id = 0;
    int object_id = 0;

    auto operator<=>(const RelationTriple&) const = default;
};

struct Scene {
    std::string scene_id;
    int grid_width = 0;
    int grid_height = 0;
    std::vector<SceneObject> objects;
    std::vector<RelationTriple> oracle_relations;  // every ordered pair
};

struct SceneGenConfig {
    int grid_width = 64;
    int grid_height = 64;
    int min_objects = 3;
    int max_objects = 6;
    int label_count = 6;
    int attribute_count = 4;
    int min_pixels = 9;
    int placement_retries = 64;
    // Relation oracle rules, frozen here so generation and evaluation agree.
    double near_fraction = 0.25;   // near iff centroid dist < fraction * diag
    double axis_dominance = 1.5;   // |major delta| >= ratio * |minor delta|

    void validate() const;
};

// Geometric ground-truth relations of `a` with respect to `b`, viewer-centric
// with y growing downward ("above" means smaller y). Horizontal/vertical
// relations require the dominant axis to win by `axis_dominance` and a
// nonzero delta; left/right and above/below are therefore exclusive per axis.
// Exactly one of {near, far} is always present.
std::vector<Relation> relation_oracle(const SceneObject& a, const SceneObject& b,
                                      const SceneGenConfig& rules);

// Fills scene.oracle_relations for every ordered object pair.
void populate_oracle_relations(Scene& scene, const SceneGenConfig& rules);

// Deterministic synthetic scene: shapes from {rectangle, disk, triangle}
// placed uniformly, each object >= max(9, config.min_pixels) set pixels.
// Throws "placement exhausted" when the retry budget runs out.
Scene generate_scene(uint64_t scene_seed, const std::string& scene_id,
                     const SceneGenConfig& config);

std::string make_scene_id(int index);

// Root-seed helper: the seed a given scene of a corpus is generated from.
uint64_t scene_seed_for(uint64_t corpus_seed, const std::string& scene_id);

}  // namespace sgcl
