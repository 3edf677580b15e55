// sgcl: spatial scene-graph contrastive learning toolkit.
// Subcommands: gen-data, sfb, graph-dump, train, eval-cbgr, probe-srr, export.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "sgcl/checkpoint.hpp"
#include "sgcl/config.hpp"
#include "sgcl/evaluation.hpp"
#include "sgcl/manifest.hpp"
#include "sgcl/version.hpp"

namespace fs = std::filesystem;
using namespace sgcl;

namespace {

struct GlobalOpts {
    int threads = 1;
    bool quiet = false;
};

void apply_env_overrides(GlobalOpts& g) {
    if (const char* t = std::getenv("SGCL_THREADS")) g.threads = std::max(1, std::atoi(t));
    if (const char* v = std::getenv("SGCL_VERBOSE")) g.quiet = std::string(v) == "0";
}

AppConfig load_config_or_default(const std::string& path) {
    return path.empty() ? default_config() : load_config_file(path);
}

void finish_manifest(const std::string& out_dir, RunManifest m) {
    m.finished = iso8601_utc_now();
    write_run_manifest((fs::path(out_dir) / "run_manifest.json").string(), m);
}

RunManifest begin_manifest(const std::string& command, const AppConfig& cfg) {
    RunManifest m;
    m.command = command;
    m.config_snapshot = serialize_config(cfg);
    m.config_hash = config_hash(cfg);
    m.seed = cfg.train.seed;
    m.started = iso8601_utc_now();
    return m;
}

void require_empty_or_force(const std::string& out_dir, bool force) {
    if (!fs::exists(out_dir)) return;
    if (!fs::is_directory(out_dir)) fail_usage("output path is not a directory: " + out_dir);
    if (!fs::is_empty(out_dir) && !force)
        fail_usage("output directory not empty (use --force): " + out_dir);
}

// Shared state for eval-style commands: corpus, per-scene data, trained and
// random-init models reconstructed from the checkpoint + config.
struct EvalContext {
    Corpus corpus;
    std::vector<SceneData> data;
    EncoderConfig enc_cfg;
    model::Net trained;
    model::Net random_init;
    uint64_t model_hash = 0;
    std::vector<size_t> train_idx, val_idx;
};

EvalContext make_eval_context(const std::string& corpus_dir, const std::string& ckpt,
                              const AppConfig& cfg) {
    EvalContext ctx;
    ctx.corpus = load_corpus(corpus_dir);
    ctx.enc_cfg = cfg.encoder_for(ctx.corpus.manifest.config);
    ctx.model_hash = model_config_hash(ctx.enc_cfg, cfg.banner);

    CheckpointMeta meta = read_checkpoint_meta(ckpt);
    if (meta.config_hash != ctx.model_hash)
        fail_data("checkpoint was built for a different model/banner config: " + ckpt);

    ctx.data = prepare_scene_data(ctx.corpus, cfg.graph_config(), ctx.enc_cfg,
                                  cfg.train.banner_cache);
    ctx.trained = model::build_net<float>(ctx.enc_cfg);
    load_checkpoint(ckpt, ctx.trained.params, nullptr);
    ctx.random_init = model::build_net<float>(ctx.enc_cfg);
    model::init_net(ctx.random_init, cfg.train.seed);

    auto split = split_corpus(ctx.data.size(), cfg.train.val_fraction, cfg.train.seed);
    ctx.train_idx = std::move(split.first);
    ctx.val_idx = std::move(split.second);
    return ctx;
}

int run(int argc, char** argv) {
    CLI::App app{"spatial scene-graph contrastive learning toolkit"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    GlobalOpts g;
    apply_env_overrides(g);
    app.add_option("--threads", g.threads, "worker threads (data generation only)")
        ->check(CLI::PositiveNumber);
    app.add_flag("--quiet", g.quiet, "suppress progress output");
    app.require_subcommand(1);

    // ---- gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic scene corpus");
    struct {
        uint64_t seed = 7;
        int count = 100;
        std::string out;
        std::string config;
        int grid = 0;
        int objects_min = 0, objects_max = 0;
        bool force = false;
    } go;
    gen->add_option("--seed", go.seed, "corpus seed");
    gen->add_option("--count", go.count, "number of scenes")->check(CLI::NonNegativeNumber);
    gen->add_option("--out", go.out, "output corpus directory")->required();
    gen->add_option("--config", go.config, "config file");
    gen->add_option("--grid", go.grid, "square grid side (overrides config)");
    gen->add_option("--objects-min", go.objects_min, "min objects per scene");
    gen->add_option("--objects-max", go.objects_max, "max objects per scene");
    gen->add_flag("--force", go.force, "write into a non-empty directory");

    // ---- sfb
    auto* sfb = app.add_subcommand("sfb", "dump the symmetric force banner of an object pair");
    struct {
        std::string scene;
        int i = 0, j = 1;
        int theta_bins = 0;
        std::string levels;
        std::string cache;
    } so;
    sfb->add_option("--scene", so.scene, "scene directory")->required();
    sfb->add_option("--i", so.i, "first object id")->required();
    sfb->add_option("--j", so.j, "second object id")->required();
    sfb->add_option("--theta-bins", so.theta_bins, "angular bins (default 64)");
    sfb->add_option("--levels", so.levels, "force levels, e.g. 0,2");
    sfb->add_option("--cache", so.cache, "banner cache directory");

    // ---- graph-dump
    auto* gdump = app.add_subcommand("graph-dump", "dump a scene graph as text");
    struct {
        std::string scene;
        std::string config;
    } gdo;
    gdump->add_option("--scene", gdo.scene, "scene directory")->required();
    gdump->add_option("--config", gdo.config, "config file");

    // ---- train
    auto* train = app.add_subcommand("train", "train the encoders on a corpus");
    struct {
        std::string corpus;
        std::string config;
        std::string out;
        bool force = false;
    } to;
    train->add_option("--corpus", to.corpus, "corpus directory")->required();
    train->add_option("--config", to.config, "config file");
    train->add_option("--out", to.out, "output directory")->required();
    train->add_flag("--force", to.force, "write into a non-empty directory");

    // ---- eval-cbgr / probe-srr / export
    auto* cbgr = app.add_subcommand("eval-cbgr", "content-based graph retrieval evaluation");
    auto* srr = app.add_subcommand("probe-srr", "linear-probe spatial relation recognition");
    auto* expo = app.add_subcommand("export", "export embeddings to a binary table");
    struct {
        std::string corpus, config, checkpoint, out, mode = "object";
    } eo[3];
    CLI::App* evs[3] = {cbgr, srr, expo};
    for (int i = 0; i < 3; ++i) {
        evs[i]->add_option("--corpus", eo[i].corpus, "corpus directory")->required();
        evs[i]->add_option("--config", eo[i].config, "config file");
        evs[i]->add_option("--checkpoint", eo[i].checkpoint, "trained checkpoint")->required();
        evs[i]->add_option("--out", eo[i].out, "output directory")->required();
    }
    expo->add_option("--mode", eo[2].mode, "object|path|graph");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::fprintf(stderr, "error[usage]: %s\n", e.what());
        return 2;
    }

    if (gen->parsed()) {
        AppConfig cfg = load_config_or_default(go.config);
        if (go.grid > 0) {
            cfg.gen.grid_width = go.grid;
            cfg.gen.grid_height = go.grid;
        }
        if (go.objects_min > 0) cfg.gen.min_objects = go.objects_min;
        if (go.objects_max > 0) cfg.gen.max_objects = go.objects_max;
        cfg.train.seed = go.seed;
        cfg.eval.seed = go.seed;
        cfg.gen.validate();
        require_empty_or_force(go.out, go.force);
        RunManifest m = begin_manifest("gen-data", cfg);
        m.seed = go.seed;
        CorpusManifest cm = generate_corpus(go.out, go.seed, go.count, cfg.gen, g.threads);
        m.corpus_hash = hex64(cm.corpus_hash);
        m.outputs = {"corpus_manifest.json", "scenes/"};
        finish_manifest(go.out, m);
        if (!g.quiet)
            std::printf("corpus %s: %d scenes, hash %s\n", go.out.c_str(), go.count,
                        hex64(cm.corpus_hash).c_str());
        return 0;
    }

    if (sfb->parsed()) {
        Scene scene = load_scene(so.scene);
        BannerConfig bc;
        if (so.theta_bins > 0) bc.theta_bins = so.theta_bins;
        if (!so.levels.empty()) {
            bc.levels.clear();
            std::stringstream ss(so.levels);
            std::string item;
            while (std::getline(ss, item, ','))
                if (!item.empty()) bc.levels.push_back(std::atoi(item.c_str()));
        }
        bc.validate();
        const int n = static_cast<int>(scene.objects.size());
        if (so.i < 0 || so.i >= n || so.j < 0 || so.j >= n || so.i == so.j)
            fail_usage("object ids out of range for scene with " + std::to_string(n) +
                       " objects");

        ForceBanner banner;
        bool from_cache = false;
        std::string cache_path;
        if (!so.cache.empty()) {
            cache_path = (fs::path(so.cache) / (scene.scene_id + ".sfbc")).string();
            int a = std::min(so.i, so.j), b = std::max(so.i, so.j);
            for (auto& e : load_banner_cache(cache_path, bc.hash()))
                if (e.i == a && e.j == b) {
                    banner = std::move(e.banner);
                    from_cache = true;
                    break;
                }
        }
        if (!from_cache) {
            int a = std::min(so.i, so.j), b = std::max(so.i, so.j);
            banner = symmetric_force_banner(scene.objects[a].mask, scene.objects[b].mask, bc);
            if (!cache_path.empty()) {
                fs::create_directories(so.cache);
                std::vector<BannerCacheEntry> entries = {{a, b, banner}};
                // merge with whatever is already cached for this scene
                for (auto& e : load_banner_cache(cache_path, bc.hash()))
                    if (!(e.i == a && e.j == b)) entries.push_back(std::move(e));
                save_banner_cache(cache_path, bc.hash(), entries);
            }
        }
        std::printf("# scene=%s i=%d j=%d theta_bins=%d\n", scene.scene_id.c_str(), so.i,
                    so.j, banner.theta_bins);
        std::printf("theta_bin r value\n");
        for (int t = 0; t < banner.theta_bins; ++t)
            for (size_t li = 0; li < banner.levels.size(); ++li)
                std::printf("%d %d %.12g\n", t, banner.levels[li],
                            banner.at(t, static_cast<int>(li)));
        return 0;
    }

    if (gdump->parsed()) {
        AppConfig cfg = load_config_or_default(gdo.config);
        Scene scene = load_scene(gdo.scene);
        SceneGraph graph = build_graph(scene, cfg.graph_config());
        std::printf("scene %s: %zu nodes, %zu edges\n", scene.scene_id.c_str(),
                    graph.nodes.size(), graph.edges.size());
        for (const auto& n : graph.nodes)
            std::printf("node %d label=%d attribute=%d\n", n.object_id, n.label_id,
                        n.attribute_id);
        for (const auto& e : graph.edges)
            std::printf("edge %d-%d dominant_bin=%d\n", e.i, e.j,
                        dominant_direction(e.banner));
        return 0;
    }

    if (train->parsed()) {
        AppConfig cfg = load_config_or_default(to.config);
        cfg.validate();
        require_empty_or_force(to.out, to.force);
        Corpus corpus = load_corpus(to.corpus);
        EncoderConfig enc = cfg.encoder_for(corpus.manifest.config);
        RunManifest m = begin_manifest("train", cfg);
        m.corpus_hash = hex64(corpus.manifest.corpus_hash);
        if (!g.quiet)
            std::printf("preparing %zu scenes (graphs + descriptors)...\n",
                        corpus.scenes.size());
        auto data = prepare_scene_data(corpus, cfg.graph_config(), enc,
                                       cfg.train.banner_cache);
        TrainResult res = train_model(data, enc, cfg.banner, cfg.train, to.out, !g.quiet);
        m.outputs = {"loss_table.csv"};
        for (const auto& p : res.checkpoint_paths)
            m.outputs.push_back(fs::path(p).filename().string());
        finish_manifest(to.out, m);
        return 0;
    }

    if (cbgr->parsed()) {
        AppConfig cfg = load_config_or_default(eo[0].config);
        cfg.validate();
        EvalContext ctx = make_eval_context(eo[0].corpus, eo[0].checkpoint, cfg);
        RunManifest m = begin_manifest("eval-cbgr", cfg);
        m.corpus_hash = hex64(ctx.corpus.manifest.corpus_hash);
        CbgrReport report = evaluate_cbgr(ctx.corpus, ctx.data, ctx.val_idx, ctx.trained,
                                          ctx.random_init, cfg.eval);
        fs::create_directories(eo[0].out);
        write_cbgr_report(eo[0].out, report);
        m.outputs = {"cbgr_report.csv", "cbgr_summary.json"};
        finish_manifest(eo[0].out, m);
        for (const auto& me : report.methods)
            std::printf("mean_ndcg5 %s %.6f\n", me.method.c_str(), me.mean_ndcg);
        return 0;
    }

    if (srr->parsed()) {
        AppConfig cfg = load_config_or_default(eo[1].config);
        cfg.validate();
        EvalContext ctx = make_eval_context(eo[1].corpus, eo[1].checkpoint, cfg);
        RunManifest m = begin_manifest("probe-srr", cfg);
        m.corpus_hash = hex64(ctx.corpus.manifest.corpus_hash);
        SrrReport report = linear_probe_srr(ctx.corpus, ctx.data, ctx.train_idx,
                                            ctx.val_idx, ctx.trained, ctx.random_init,
                                            cfg.eval);
        fs::create_directories(eo[1].out);
        write_srr_report(eo[1].out, report);
        m.outputs = {"srr_report.csv", "srr_summary.json"};
        finish_manifest(eo[1].out, m);
        for (const auto& me : report.methods)
            std::printf("probe_top1 %s %.6f\n", me.method.c_str(), me.overall_top1);
        std::printf("majority_baseline %.6f\n", report.majority_accuracy);
        return 0;
    }

    if (expo->parsed()) {
        AppConfig cfg = load_config_or_default(eo[2].config);
        cfg.validate();
        EvalContext ctx = make_eval_context(eo[2].corpus, eo[2].checkpoint, cfg);
        ExportMode mode = export_mode_from_name(eo[2].mode);
        RunManifest m = begin_manifest("export", cfg);
        m.corpus_hash = hex64(ctx.corpus.manifest.corpus_hash);
        fs::create_directories(eo[2].out);
        const std::string table =
            (fs::path(eo[2].out) / ("embeddings_" + eo[2].mode + ".bin")).string();
        export_embeddings(ctx.corpus, ctx.data, ctx.trained, mode, cfg.eval, table,
                          ctx.model_hash);
        m.outputs = {fs::path(table).filename().string(),
                     fs::path(table).filename().string() + ".manifest.json"};
        finish_manifest(eo[2].out, m);
        if (!g.quiet) std::printf("exported %s\n", table.c_str());
        return 0;
    }

    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::fprintf(stderr, "error[%s]: %s\n", e.kind_name(), e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error[internal]: %s\n", e.what());
        return 1;
    }
}
