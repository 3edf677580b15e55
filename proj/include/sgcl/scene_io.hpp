#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgcl/scene.hpp"

namespace sgcl {

// On-disk layout: one directory per scene holding manifest.json plus one
// RLE-encoded mask file per object (mask_<object_id>.rle).
void save_scene(const std::string& scene_dir, const Scene& scene);
Scene load_scene(const std::string& scene_dir);

struct CorpusManifest {
    uint64_t seed = 0;
    SceneGenConfig config;
    std::vector<std::string> scene_ids;
    uint64_t corpus_hash = 0;
    std::string tool_version;
};

// Corpus layout: <dir>/corpus_manifest.json + <dir>/scenes/<scene_id>/...
void write_corpus_manifest(const std::string& corpus_dir, const CorpusManifest& m);
CorpusManifest read_corpus_manifest(const std::string& corpus_dir);

// Hash over every scene's manifest and mask bytes in scene-id order;
// independent of generation thread count.
uint64_t compute_corpus_hash(const std::string& corpus_dir,
                             const std::vector<std::string>& scene_ids);

struct Corpus {
    CorpusManifest manifest;
    std::vector<Scene> scenes;  // scene-id order
};

// Loads and verifies the stored corpus hash (throws a data error on drift).
Corpus load_corpus(const std::string& corpus_dir);

// Generates `count` scenes from `seed` and writes the corpus. Returns the
// manifest (with hash). `threads` > 1 parallelizes scene generation; output
// bytes are identical for any thread count.
CorpusManifest generate_corpus(const std::string& corpus_dir, uint64_t seed,
                               int count, const SceneGenConfig& config,
                               int threads = 1);

}  // namespace sgcl
