#include "sgcl/scene_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "sgcl/hash.hpp"
#include "sgcl/rng.hpp"

namespace sgcl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail_data("cannot write: " + tmp);
        out << content;
        if (!out) fail_data("write failure: " + tmp);
    }
    fs::rename(tmp, path);
}

void write_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail_data("cannot write: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) fail_data("write failure: " + path);
}

std::vector<uint8_t> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_data("cannot read: " + path);
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>());
}

std::string read_text(const std::string& path) {
    auto b = read_bytes(path);
    return std::string(b.begin(), b.end());
}

std::string mask_filename(int object_id) {
    return "mask_" + std::to_string(object_id) + ".rle";
}

json gen_config_to_json(const SceneGenConfig& c) {
    return json{{"grid_width", c.grid_width},
                {"grid_height", c.grid_height},
                {"min_objects", c.min_objects},
                {"max_objects", c.max_objects},
                {"label_count", c.label_count},
                {"attribute_count", c.attribute_count},
                {"min_pixels", c.min_pixels},
                {"placement_retries", c.placement_retries},
                {"near_fraction", c.near_fraction},
                {"axis_dominance", c.axis_dominance}};
}

SceneGenConfig gen_config_from_json(const json& j) {
    SceneGenConfig c;
    c.grid_width = j.at("grid_width").get<int>();
    c.grid_height = j.at("grid_height").get<int>();
    c.min_objects = j.at("min_objects").get<int>();
    c.max_objects = j.at("max_objects").get<int>();
    c.label_count = j.at("label_count").get<int>();
    c.attribute_count = j.at("attribute_count").get<int>();
    c.min_pixels = j.at("min_pixels").get<int>();
    c.placement_retries = j.at("placement_retries").get<int>();
    c.near_fraction = j.at("near_fraction").get<double>();
    c.axis_dominance = j.at("axis_dominance").get<double>();
    return c;
}

}  // namespace

void save_scene(const std::string& scene_dir, const Scene& scene) {
    fs::create_directories(scene_dir);

    json objects = json::array();
    for (const auto& o : scene.objects) {
        objects.push_back(json{{"object_id", o.object_id},
                               {"label_id", o.label_id},
                               {"attribute_id", o.attribute_id},
                               {"mask_file", mask_filename(o.object_id)},
                               {"centroid", {o.centroid.x, o.centroid.y}},
                               {"pixel_count", o.mask.pixel_count()}});
    }
    json relations = json::array();
    for (const auto& t : scene.oracle_relations)
        relations.push_back({t.subject_id, t.relation_id, t.object_id});

    json manifest{{"scene_id", scene.scene_id},
                  {"grid", {{"width", scene.grid_width}, {"height", scene.grid_height}}},
                  {"objects", objects},
                  {"oracle_relations", relations}};

    write_text_atomic((fs::path(scene_dir) / "manifest.json").string(),
                      manifest.dump(2) + "\n");
    for (const auto& o : scene.objects)
        write_bytes((fs::path(scene_dir) / mask_filename(o.object_id)).string(),
                    rle_encode(o.mask));
}

Scene load_scene(const std::string& scene_dir) {
    json manifest;
    try {
        manifest = json::parse(read_text((fs::path(scene_dir) / "manifest.json").string()));
    } catch (const json::exception& e) {
        fail_data("bad scene manifest in " + scene_dir + ": " + e.what());
    }

    Scene scene;
    try {
        scene.scene_id = manifest.at("scene_id").get<std::string>();
        scene.grid_width = manifest.at("grid").at("width").get<int>();
        scene.grid_height = manifest.at("grid").at("height").get<int>();
        for (const auto& jo : manifest.at("objects")) {
            SceneObject o;
            o.object_id = jo.at("object_id").get<int>();
            o.label_id = jo.at("label_id").get<int>();
            o.attribute_id = jo.at("attribute_id").get<int>();
            auto mask_path = fs::path(scene_dir) / jo.at("mask_file").get<std::string>();
            o.mask = rle_decode(read_bytes(mask_path.string()));
            if (o.mask.width != scene.grid_width || o.mask.height != scene.grid_height)
                fail_data("mask grid mismatch in " + scene_dir);
            o.centroid = centroid(o.mask);
            // centroid is derived; stored copy is informational only, but a
            // large drift means the mask bytes do not match the manifest.
            auto jc = jo.at("centroid");
            if (std::abs(jc.at(0).get<double>() - o.centroid.x) > 1e-9 ||
                std::abs(jc.at(1).get<double>() - o.centroid.y) > 1e-9)
                fail_data("stored centroid disagrees with mask in " + scene_dir);
            scene.objects.push_back(std::move(o));
        }
        for (const auto& jt : manifest.at("oracle_relations")) {
            RelationTriple t{jt.at(0).get<int>(), jt.at(1).get<int>(), jt.at(2).get<int>()};
            const int n = static_cast<int>(scene.objects.size());
            if (t.subject_id < 0 || t.subject_id >= n || t.object_id < 0 || t.object_id >= n ||
                t.relation_id < 0 || t.relation_id >= kRelationCount)
                fail_data("oracle relation references invalid ids in " + scene_dir);
            scene.oracle_relations.push_back(t);
        }
    } catch (const json::exception& e) {
        fail_data("bad scene manifest in " + scene_dir + ": " + e.what());
    }
    for (size_t i = 0; i < scene.objects.size(); ++i)
        if (scene.objects[i].object_id != static_cast<int>(i))
            fail_data("object ids must form 0..n-1 in " + scene_dir);
    return scene;
}

uint64_t compute_corpus_hash(const std::string& corpus_dir,
                             const std::vector<std::string>& scene_ids) {
    Fnv1a64 h;
    for (const auto& id : scene_ids) {
        fs::path dir = fs::path(corpus_dir) / "scenes" / id;
        h.update(id);
        h.update("/manifest.json");
        hash_file(h, (dir / "manifest.json").string());
        // Mask files in object-id order, recovered from the manifest.
        json manifest = json::parse(read_text((dir / "manifest.json").string()));
        for (const auto& jo : manifest.at("objects")) {
            std::string mf = jo.at("mask_file").get<std::string>();
            h.update(mf);
            hash_file(h, (dir / mf).string());
        }
    }
    return h.digest();
}

void write_corpus_manifest(const std::string& corpus_dir, const CorpusManifest& m) {
    json j{{"format", "sgcl-corpus-v1"},
           {"seed", m.seed},
           {"config", gen_config_to_json(m.config)},
           {"scene_count", m.scene_ids.size()},
           {"scene_ids", m.scene_ids},
           {"corpus_hash", hex64(m.corpus_hash)},
           {"tool_version", m.tool_version.empty() ? kToolVersion : m.tool_version}};
    write_text_atomic((fs::path(corpus_dir) / "corpus_manifest.json").string(),
                      j.dump(2) + "\n");
}

CorpusManifest read_corpus_manifest(const std::string& corpus_dir) {
    const std::string path = (fs::path(corpus_dir) / "corpus_manifest.json").string();
    if (!fs::exists(path)) fail_data("not a corpus directory (missing corpus_manifest.json): " + corpus_dir);
    CorpusManifest m;
    try {
        json j = json::parse(read_text(path));
        if (j.at("format").get<std::string>() != "sgcl-corpus-v1")
            fail_data("unsupported corpus format in " + corpus_dir);
        m.seed = j.at("seed").get<uint64_t>();
        m.config = gen_config_from_json(j.at("config"));
        m.scene_ids = j.at("scene_ids").get<std::vector<std::string>>();
        m.corpus_hash = parse_hex64(j.at("corpus_hash").get<std::string>());
        m.tool_version = j.at("tool_version").get<std::string>();
    } catch (const json::exception& e) {
        fail_data("bad corpus manifest: " + std::string(e.what()));
    }
    return m;
}

Corpus load_corpus(const std::string& corpus_dir) {
    Corpus corpus;
    corpus.manifest = read_corpus_manifest(corpus_dir);
    uint64_t actual = compute_corpus_hash(corpus_dir, corpus.manifest.scene_ids);
    if (actual != corpus.manifest.corpus_hash)
        fail_data("corpus hash mismatch (expected " + hex64(corpus.manifest.corpus_hash) +
                  ", found " + hex64(actual) + ")");
    corpus.scenes.reserve(corpus.manifest.scene_ids.size());
    for (const auto& id : corpus.manifest.scene_ids)
        corpus.scenes.push_back(load_scene((fs::path(corpus_dir) / "scenes" / id).string()));
    return corpus;
}

CorpusManifest generate_corpus(const std::string& corpus_dir, uint64_t seed,
                               int count, const SceneGenConfig& config,
                               int threads) {
    if (count < 0) fail_usage("scene count must be >= 0");
    config.validate();
    fs::create_directories(fs::path(corpus_dir) / "scenes");

    std::vector<std::string> ids(count);
    for (int i = 0; i < count; ++i) ids[i] = make_scene_id(i);

    // Scene generation is pure per (seed, id); parallel workers produce
    // byte-identical output.
    std::exception_ptr first_error;
    std::mutex err_mu;
    auto worker = [&](int begin, int end) {
        try {
            for (int i = begin; i < end; ++i) {
                Scene s = generate_scene(scene_seed_for(seed, ids[i]), ids[i], config);
                save_scene((fs::path(corpus_dir) / "scenes" / ids[i]).string(), s);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(err_mu);
            if (!first_error) first_error = std::current_exception();
        }
    };

    threads = std::max(1, threads);
    if (threads == 1 || count < 2) {
        worker(0, count);
    } else {
        std::vector<std::thread> pool;
        int per = (count + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            int b = t * per, e = std::min(count, b + per);
            if (b >= e) break;
            pool.emplace_back(worker, b, e);
        }
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    CorpusManifest m;
    m.seed = seed;
    m.config = config;
    m.scene_ids = std::move(ids);
    m.corpus_hash = compute_corpus_hash(corpus_dir, m.scene_ids);
    m.tool_version = kToolVersion;
    write_corpus_manifest(corpus_dir, m);
    return m;
}

}  // namespace sgcl
