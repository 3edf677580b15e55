#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sgcl/checkpoint.hpp"
#include "sgcl/training.hpp"
#include "testutil.hpp"

using namespace sgcl;
namespace fs = std::filesystem;

namespace {

struct TinySetup {
    Corpus corpus;
    EncoderConfig enc;
    BannerConfig banner;
    TrainConfig tc;
    std::vector<SceneData> data;
};

TinySetup tiny_setup(const std::string& dir_name, int scenes, uint64_t seed) {
    TinySetup s;
    SceneGenConfig g;
    g.label_count = 4;
    g.attribute_count = 3;
    std::string dir = testutil::fresh_dir(dir_name);
    generate_corpus(dir, seed, scenes, g, 1);
    s.corpus = load_corpus(dir);

    s.banner.theta_bins = 8;
    s.enc.embed_dim = 12;
    s.enc.gnn_layers = 2;
    s.enc.f_hidden = 16;
    s.enc.projection_dim = 8;
    s.enc.crop_size = 8;
    s.enc.conv1_channels = 3;
    s.enc.conv2_channels = 4;
    s.enc.label_embed_dim = 4;
    s.enc = finalize_encoder_config(s.enc, g, s.banner);

    GraphConfig gc;
    gc.banner = s.banner;
    s.data = prepare_scene_data(s.corpus, gc, s.enc);

    s.tc.epochs = 2;
    s.tc.batch_size = 4;
    s.tc.path_budget = 2;
    s.tc.seed = seed;
    return s;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("split_corpus is deterministic and sized correctly") {
    auto [tr1, va1] = split_corpus(2000, 0.10, 7);
    auto [tr2, va2] = split_corpus(2000, 0.10, 7);
    CHECK(tr1 == tr2);
    CHECK(va1 == va2);
    CHECK(va1.size() == 200);
    CHECK(tr1.size() == 1800);

    auto [tr3, va3] = split_corpus(2000, 0.10, 8);
    CHECK(tr1 != tr3);

    auto [tr4, va4] = split_corpus(1, 0.10, 7);
    CHECK(tr4.size() == 1);
    CHECK(va4.empty());
}

TEST_CASE("epochs=0 leaves an initial checkpoint and an empty loss table") {
    auto s = tiny_setup("train_e0", 6, 3);
    s.tc.epochs = 0;
    std::string out = testutil::fresh_dir("train_e0_out");
    TrainResult res = train_model(s.data, s.enc, s.banner, s.tc, out, false);
    CHECK(res.rows.empty());
    CHECK(res.checkpoint_paths.size() == 1);
    CHECK(fs::exists(out + "/ckpt_epoch_000.bin"));
    std::string table = slurp(out + "/loss_table.csv");
    CHECK(table.find("epoch,train_node") == 0);
    CHECK(table.find('\n') == table.size() - 1);  // header only
}

TEST_CASE("training is deterministic and logs a reconstructible total") {
    auto s1 = tiny_setup("train_det_a", 8, 17);
    auto s2 = tiny_setup("train_det_b", 8, 17);
    std::string o1 = testutil::fresh_dir("train_det_a_out");
    std::string o2 = testutil::fresh_dir("train_det_b_out");
    TrainResult r1 = train_model(s1.data, s1.enc, s1.banner, s1.tc, o1, false);
    TrainResult r2 = train_model(s2.data, s2.enc, s2.banner, s2.tc, o2, false);

    REQUIRE(r1.rows.size() == 2);
    REQUIRE(r2.rows.size() == 2);
    CHECK(slurp(o1 + "/loss_table.csv") == slurp(o2 + "/loss_table.csv"));
    CHECK(slurp(o1 + "/ckpt_epoch_002.bin") == slurp(o2 + "/ckpt_epoch_002.bin"));

    for (const auto& row : r1.rows) {
        for (const auto* b : {&row.train, &row.val}) {
            double manual = 0.0;
            for (int c = 0; c < 6; ++c)
                if (b->present[c]) manual += b->components[c];  // all weights 1.0
            CHECK(b->total == doctest::Approx(manual).epsilon(1e-9));
        }
    }

    // checkpoints reload into a matching net
    auto net = model::build_net<float>(s1.enc);
    CheckpointMeta meta =
        load_checkpoint(o1 + "/ckpt_epoch_002.bin", net.params, nullptr);
    CHECK(meta.config_hash == r1.model_hash);
    for (size_t i = 0; i < net.params.size(); ++i)
        CHECK(net.params[i].value.data == r1.net.params[i].value.data);
}

TEST_CASE("a couple of epochs reduce the training loss on a small corpus") {
    auto s = tiny_setup("train_down", 16, 23);
    s.tc.epochs = 3;
    s.tc.lr = 1e-3;
    std::string out = testutil::fresh_dir("train_down_out");
    TrainResult res = train_model(s.data, s.enc, s.banner, s.tc, out, false);
    REQUIRE(res.rows.size() == 3);
    CHECK(res.rows.back().train.total < res.rows.front().train.total);
}

TEST_CASE("train config validation") {
    TrainConfig tc;
    tc.lr = 5e-3;
    CHECK_THROWS_AS(tc.validate(), Error);
    tc = TrainConfig{};
    tc.label_smoothing = 1.0;
    CHECK_THROWS_AS(tc.validate(), Error);
    tc = TrainConfig{};
    tc.k_set = {1};
    CHECK_THROWS_AS(tc.validate(), Error);
    tc = TrainConfig{};
    CHECK_NOTHROW(tc.validate());
}
