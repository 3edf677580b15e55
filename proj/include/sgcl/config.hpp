#pragma once

#include <cstdint>
#include <string>

#include "sgcl/evaluation.hpp"
#include "sgcl/training.hpp"

namespace sgcl {

// Whole-toolkit configuration, one source of truth for every default.
// Loaded from sectioned key=value text; unknown sections or keys are hard
// errors so typos cannot silently fall back to defaults.
struct AppConfig {
    SceneGenConfig gen;
    BannerConfig banner;
    bool prune_far = false;
    int max_paths_per_k = 10000;
    EncoderConfig encoder;
    TrainConfig train;
    EvalConfig eval;

    GraphConfig graph_config() const {
        GraphConfig g;
        g.banner = banner;
        g.prune_far = prune_far;
        g.near_fraction = gen.near_fraction;
        g.max_paths_per_k = max_paths_per_k;
        return g;
    }

    // Encoder config with corpus/banner-derived dimensions filled in.
    EncoderConfig encoder_for(const SceneGenConfig& corpus_gen) const {
        return finalize_encoder_config(encoder, corpus_gen, banner);
    }

    void validate() const;
};

AppConfig default_config();

// Parses the sectioned key=value format ('#' comments, [section] headers).
AppConfig parse_config_text(const std::string& text);
AppConfig load_config_file(const std::string& path);

// Canonical serialization: every key with its final value, fixed order.
// Hash of this string is the config hash recorded in run manifests.
std::string serialize_config(const AppConfig& cfg);
uint64_t config_hash(const AppConfig& cfg);

}  // namespace sgcl
