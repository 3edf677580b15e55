#include "sgcl/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sgcl/error.hpp"
#include "sgcl/hash.hpp"
#include "sgcl/version.hpp"

namespace sgcl {

std::string iso8601_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buf);
}

void write_run_manifest(const std::string& path, const RunManifest& m) {
    nlohmann::json j{{"command", m.command},
                     {"config_hash", hex64(m.config_hash)},
                     {"config", m.config_snapshot},
                     {"corpus_hash", m.corpus_hash},
                     {"seed", m.seed},
                     {"tool", kToolName},
                     {"tool_version", kToolVersion},
                     {"started", m.started},
                     {"finished", m.finished},
                     {"outputs", m.outputs}};
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) fail_data("cannot write run manifest: " + path);
        out << j.dump(2) << "\n";
        if (!out) fail_data("write failure on run manifest: " + path);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace sgcl
