#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sgcl {

// Written atomically at the end of every CLI run.
struct RunManifest {
    std::string command;
    std::string config_snapshot;  // canonical serialized config
    uint64_t config_hash = 0;
    std::string corpus_hash;      // hex, empty when no corpus involved
    uint64_t seed = 0;
    std::string started;          // ISO 8601 UTC
    std::string finished;
    std::vector<std::string> outputs;
};

std::string iso8601_utc_now();

void write_run_manifest(const std::string& path, const RunManifest& m);

}  // namespace sgcl
