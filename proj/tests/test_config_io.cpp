#include <doctest.h>

#include <fstream>

#include "sgcl/config.hpp"
#include "sgcl/manifest.hpp"
#include "testutil.hpp"

using namespace sgcl;

TEST_CASE("config defaults match the documented recipe") {
    AppConfig cfg = default_config();
    CHECK(cfg.gen.grid_width == 64);
    CHECK(cfg.gen.min_objects == 3);
    CHECK(cfg.gen.max_objects == 6);
    CHECK(cfg.banner.theta_bins == 64);
    CHECK(cfg.banner.levels == std::vector<int>{0, 2});
    CHECK(cfg.encoder.embed_dim == 64);
    CHECK(cfg.encoder.gnn_layers == 2);
    CHECK(cfg.encoder.temperature == doctest::Approx(0.07));
    CHECK(cfg.train.epochs == 10);
    CHECK(cfg.train.batch_size == 32);
    CHECK(cfg.train.lr == doctest::Approx(3e-4));
    CHECK(cfg.train.label_smoothing == doctest::Approx(0.3));
    CHECK(cfg.train.k_set == std::vector<int>{2, 3});
    CHECK(cfg.train.weight_decay == doctest::Approx(0.01));
    CHECK(cfg.eval.top_k == 5);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config parsing: overrides, comments, unknown keys") {
    const std::string text =
        "# spatial toolkit settings\n"
        "[train]\n"
        "epochs = 3\n"
        "lr = 0.0005\n"
        "k_set = 2\n"
        "\n"
        "[banner]\n"
        "theta_bins = 32\n"
        "levels = 0,1,2\n";
    AppConfig cfg = parse_config_text(text);
    CHECK(cfg.train.epochs == 3);
    CHECK(cfg.train.lr == doctest::Approx(5e-4));
    CHECK(cfg.train.k_set == std::vector<int>{2});
    CHECK(cfg.banner.theta_bins == 32);
    CHECK(cfg.banner.levels == std::vector<int>{0, 1, 2});
    // untouched keys keep defaults
    CHECK(cfg.train.batch_size == 32);

    CHECK_THROWS_WITH_AS(parse_config_text("[train]\nepochz = 3\n"),
                         "unknown config key: train.epochz", Error);
    CHECK_THROWS_AS(parse_config_text("[nope]\nepochs = 3\n"), Error);
    CHECK_THROWS_AS(parse_config_text("epochs = 3\n"), Error);
    CHECK_THROWS_AS(parse_config_text("[train]\nepochs == 3x\n"), Error);
    CHECK_THROWS_AS(parse_config_text("[train]\nepochs = many\n"), Error);
}

TEST_CASE("config hash tracks content, not formatting") {
    AppConfig a = parse_config_text("[train]\nepochs = 3\n");
    AppConfig b = parse_config_text("# comment\n[train]\n  epochs   =  3\n");
    AppConfig c = parse_config_text("[train]\nepochs = 4\n");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(c));

    // canonical serialization re-parses to the same hash
    AppConfig rt = parse_config_text(serialize_config(a));
    CHECK(config_hash(rt) == config_hash(a));
}

TEST_CASE("eval seed follows the run seed") {
    AppConfig cfg = parse_config_text("[train]\nseed = 123\n");
    CHECK(cfg.train.seed == 123);
    CHECK(cfg.eval.seed == 123);
}

TEST_CASE("run manifest is written atomically with recomputable hashes") {
    std::string dir = testutil::fresh_dir("manifest");
    AppConfig cfg = default_config();
    RunManifest m;
    m.command = "train";
    m.config_snapshot = serialize_config(cfg);
    m.config_hash = config_hash(cfg);
    m.corpus_hash = "00ff";
    m.seed = 7;
    m.started = iso8601_utc_now();
    m.finished = iso8601_utc_now();
    m.outputs = {"loss_table.csv"};
    write_run_manifest(dir + "/run_manifest.json", m);

    std::ifstream in(dir + "/run_manifest.json");
    REQUIRE(in.good());
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(body.find("\"command\": \"train\"") != std::string::npos);
    CHECK(body.find(hex64(m.config_hash)) != std::string::npos);
    // the recorded snapshot hashes back to the recorded hash
    CHECK(fnv1a64(m.config_snapshot) == m.config_hash);
}
