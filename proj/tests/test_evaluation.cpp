#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sgcl/evaluation.hpp"
#include "testutil.hpp"

using namespace sgcl;

TEST_CASE("ndcg formula anchors") {
    SUBCASE("ideal ordering scores 1") {
        CHECK(ndcg_at_k({3, 2, 1}, {3, 2, 1}, 5) == doctest::Approx(1.0));
    }
    SUBCASE("all-zero relevances use the IDCG=0 convention") {
        CHECK(ndcg_at_k({0, 0, 0}, {0, 0, 0}, 5) == 0.0);
    }
    SUBCASE("worked example: ranked [3,2,3,0,1] vs ideal [3,3,2,1,0]") {
        // direct evaluation of the DCG formula
        const double dcg = 3.0 / std::log2(2.0) + 2.0 / std::log2(3.0) +
                           3.0 / std::log2(4.0) + 0.0 / std::log2(5.0) +
                           1.0 / std::log2(6.0);
        const double idcg = 3.0 / std::log2(2.0) + 3.0 / std::log2(3.0) +
                            2.0 / std::log2(4.0) + 1.0 / std::log2(5.0) + 0.0;
        const double want = dcg / idcg;
        CHECK(want == doctest::Approx(0.9724).epsilon(1e-4));
        CHECK(ndcg_at_k({3, 2, 3, 0, 1}, {3, 3, 2, 1, 0}, 5) ==
              doctest::Approx(want).epsilon(1e-6));
    }
    SUBCASE("range and truncation") {
        CHECK(ndcg_at_k({0, 3}, {3, 0}, 1) == 0.0);
        CHECK(ndcg_at_k({3}, {3, 3, 3}, 5) <= 1.0);
        CHECK_THROWS_AS(ndcg_at_k({-1.0}, {1.0}, 5), Error);
    }
}

TEST_CASE("ndcg swap monotonicity on 1000 random cases") {
    Rng rng(1000);
    int checked = 0;
    while (checked < 1000) {
        const int n = rng.uniform_int(2, 10);
        std::vector<double> rel(n), ideal;
        for (auto& v : rel) v = rng.uniform_int(0, 3);
        ideal = rel;
        const int i = rng.uniform_int(0, n - 2);
        const int j = rng.uniform_int(i + 1, n - 1);
        if (rel[i] >= rel[j]) continue;  // need a strictly better item later
        const double before = ndcg_at_k(rel, ideal, 5);
        std::swap(rel[i], rel[j]);  // pull the better item earlier
        const double after = ndcg_at_k(rel, ideal, 5);
        CHECK(after >= before - 1e-12);
        CHECK(after >= 0.0);
        CHECK(after <= 1.0 + 1e-12);
        ++checked;
    }
}

TEST_CASE("retrieve: ordering, ties, exclusion") {
    RetrievalIndex index;
    auto unit = [](std::vector<float> v) {
        double n = 0;
        for (float x : v) n += static_cast<double>(x) * x;
        n = std::sqrt(n);
        for (auto& x : v) x = static_cast<float>(x / n);
        return v;
    };
    index.scene_ids = {"a", "b", "c", "d"};
    index.embeddings = {unit({1, 0}), unit({0.9f, 0.1f}), unit({0, 1}), unit({1, 0})};

    SUBCASE("query equal to a candidate ranks it first") {
        auto r = retrieve(index, unit({0, 1}), "zz", 2);
        REQUIRE(r.size() == 2);
        CHECK(r[0].scene_id == "c");
    }
    SUBCASE("ties broken by ascending scene id, query excluded") {
        auto r = retrieve(index, unit({1, 0}), "a", 4);
        REQUIRE(r.size() == 3);
        CHECK(r[0].scene_id == "d");  // exact match; "a" excluded
        CHECK(r[1].scene_id == "b");
    }
    SUBCASE("single-candidate index returns it") {
        RetrievalIndex one;
        one.scene_ids = {"only"};
        one.embeddings = {unit({1, 0})};
        auto r = retrieve(one, unit({0, 1}), "q", 5);
        REQUIRE(r.size() == 1);
        CHECK(r[0].scene_id == "only");
    }
    SUBCASE("empty index is an error") {
        RetrievalIndex empty;
        CHECK_THROWS_WITH_AS(retrieve(empty, {1.0f}, "q", 5), "empty index", Error);
    }
    SUBCASE("matches a full-scan argsort oracle on random data") {
        Rng rng(66);
        RetrievalIndex big;
        for (int i = 0; i < 50; ++i) {
            big.scene_ids.push_back("s" + std::to_string(i / 10) + std::to_string(i % 10));
            std::vector<float> v(8);
            for (auto& x : v) x = static_cast<float>(rng.uniform_real(-1, 1));
            big.embeddings.push_back(unit(v));
        }
        std::vector<float> q(8);
        for (auto& x : q) x = static_cast<float>(rng.uniform_real(-1, 1));
        q = unit(q);
        auto got = retrieve(big, q, big.scene_ids[7], 5);
        // oracle: score everything, stable sort by (-sim, id)
        std::vector<std::pair<double, std::string>> scored;
        for (size_t i = 0; i < big.scene_ids.size(); ++i) {
            if (big.scene_ids[i] == big.scene_ids[7]) continue;
            double dot = 0;
            for (int d = 0; d < 8; ++d)
                dot += static_cast<double>(big.embeddings[i][d]) * q[d];
            scored.emplace_back(-dot, big.scene_ids[i]);
        }
        std::sort(scored.begin(), scored.end());
        for (int i = 0; i < 5; ++i) CHECK(got[i].scene_id == scored[i].second);
    }
}

namespace {

struct EvalSetup {
    Corpus corpus;
    std::vector<SceneData> data;
    EncoderConfig enc;
    model::Net trained;
    model::Net random_init;
    EvalConfig cfg;
    std::vector<size_t> all, train_idx, test_idx;
};

EvalSetup eval_setup(const std::string& name, int scenes, uint64_t seed) {
    EvalSetup s;
    SceneGenConfig g;
    g.label_count = 4;
    g.attribute_count = 3;
    std::string dir = testutil::fresh_dir(name);
    generate_corpus(dir, seed, scenes, g, 1);
    s.corpus = load_corpus(dir);

    BannerConfig banner;
    banner.theta_bins = 8;
    s.enc.embed_dim = 12;
    s.enc.gnn_layers = 2;
    s.enc.f_hidden = 16;
    s.enc.projection_dim = 8;
    s.enc.crop_size = 8;
    s.enc.conv1_channels = 3;
    s.enc.conv2_channels = 4;
    s.enc.label_embed_dim = 4;
    s.enc = finalize_encoder_config(s.enc, g, banner);

    GraphConfig gc;
    gc.banner = banner;
    s.data = prepare_scene_data(s.corpus, gc, s.enc);

    s.trained = model::build_net<float>(s.enc);
    model::init_net(s.trained, seed + 1);
    s.random_init = model::build_net<float>(s.enc);
    model::init_net(s.random_init, seed + 2);

    s.cfg.eval_seeds = 2;
    s.cfg.probe_seeds = 2;
    s.cfg.probe_epochs = 40;
    s.cfg.seed = seed;
    for (size_t i = 0; i < s.data.size(); ++i) s.all.push_back(i);
    auto split = split_corpus(s.data.size(), 0.25, seed);
    s.train_idx = split.first;
    s.test_idx = split.second;
    return s;
}

}  // namespace

TEST_CASE("relevance oracle grades") {
    auto s = eval_setup("eval_rel", 8, 5);
    RelevanceOracle oracle = RelevanceOracle::build(s.corpus, s.all);
    for (size_t i = 0; i < s.all.size(); ++i) {
        CHECK(oracle.jaccard(i, i) == doctest::Approx(1.0));
        CHECK(oracle.grade(i, i, s.cfg.relevance_thresholds) == 3);
        for (size_t j = 0; j < s.all.size(); ++j) {
            CHECK(oracle.jaccard(i, j) == doctest::Approx(oracle.jaccard(j, i)));
            int g = oracle.grade(i, j, s.cfg.relevance_thresholds);
            CHECK(g >= 0);
            CHECK(g <= 3);
        }
    }
}

TEST_CASE("cbgr evaluation runs and reports three methods") {
    auto s = eval_setup("eval_cbgr", 10, 12);
    CbgrReport report =
        evaluate_cbgr(s.corpus, s.data, s.all, s.trained, s.random_init, s.cfg);
    REQUIRE(report.methods.size() == 3);
    for (const auto& m : report.methods) {
        CHECK(m.mean_ndcg >= 0.0);
        CHECK(m.mean_ndcg <= 1.0);
        CHECK(m.per_seed.size() == 2);
        CHECK(m.per_query.size() == report.query_ids.size());
    }
    // deterministic
    CbgrReport again =
        evaluate_cbgr(s.corpus, s.data, s.all, s.trained, s.random_init, s.cfg);
    for (size_t i = 0; i < 3; ++i)
        CHECK(report.methods[i].mean_ndcg == again.methods[i].mean_ndcg);

    std::vector<size_t> too_few = {0, 1, 2};
    CHECK_THROWS_AS(
        evaluate_cbgr(s.corpus, s.data, too_few, s.trained, s.random_init, s.cfg), Error);

    std::string out = testutil::fresh_dir("eval_cbgr_out");
    write_cbgr_report(out, report);
    CHECK(std::ifstream(out + "/cbgr_report.csv").good());
    CHECK(std::ifstream(out + "/cbgr_summary.json").good());
}

TEST_CASE("random embeddings score near the permutation-oracle expectation") {
    // Monte-Carlo estimate of E[NDCG@5] under uniformly random rankings,
    // compared against retrieval with random unit embeddings.
    auto s = eval_setup("eval_mc", 24, 31);
    RelevanceOracle oracle = RelevanceOracle::build(s.corpus, s.all);

    Rng rng(999);
    const int n = static_cast<int>(s.all.size());
    double mc = 0.0;
    int mc_runs = 4000;
    for (int run = 0; run < mc_runs; ++run) {
        int q = rng.uniform_int(0, n - 1);
        std::vector<int> cands;
        for (int c = 0; c < n; ++c)
            if (c != q) cands.push_back(c);
        rng.shuffle(cands);
        std::vector<double> rel, ideal;
        for (size_t i = 0; i < cands.size(); ++i) {
            double g = oracle.grade(q, cands[i], s.cfg.relevance_thresholds);
            if (i < 5) rel.push_back(g);
            ideal.push_back(g);
        }
        mc += ndcg_at_k(rel, std::move(ideal), 5);
    }
    mc /= mc_runs;

    double emp = 0.0;
    const int emp_runs = 40;
    for (int run = 0; run < emp_runs; ++run) {
        RetrievalIndex index;
        for (int i = 0; i < n; ++i) {
            std::vector<double> v(16);
            for (auto& x : v) x = rng.uniform_real(-1.0, 1.0);
            index.scene_ids.push_back(s.corpus.scenes[s.all[i]].scene_id);
            std::vector<float> vf(v.begin(), v.end());
            double nn = 0;
            for (float x : vf) nn += static_cast<double>(x) * x;
            nn = std::sqrt(nn);
            for (auto& x : vf) x = static_cast<float>(x / nn);
            index.embeddings.push_back(vf);
        }
        for (int q = 0; q < n; ++q) {
            auto ranked = retrieve(index, index.embeddings[q], index.scene_ids[q], 5);
            std::vector<double> rel, ideal;
            for (const auto& r : ranked) {
                size_t cpos = 0;
                for (int c = 0; c < n; ++c)
                    if (index.scene_ids[c] == r.scene_id) cpos = c;
                rel.push_back(oracle.grade(q, cpos, s.cfg.relevance_thresholds));
            }
            for (int c = 0; c < n; ++c)
                if (c != q) ideal.push_back(oracle.grade(q, c, s.cfg.relevance_thresholds));
            emp += ndcg_at_k(rel, std::move(ideal), 5);
        }
    }
    emp /= emp_runs * n;
    CHECK(std::abs(emp - mc) < 0.02);
}

TEST_CASE("linear probe: separable features, leakage sanity, majority baseline") {
    auto s = eval_setup("eval_probe", 14, 44);

    SrrReport report = linear_probe_srr(s.corpus, s.data, s.train_idx, s.test_idx,
                                        s.trained, s.random_init, s.cfg);
    REQUIRE(report.methods.size() == 2);
    for (const auto& m : report.methods) {
        CHECK(m.overall_top1 >= 0.0);
        CHECK(m.overall_top1 <= 1.0);
        CHECK(m.overall_top2 >= m.overall_top1 - 1e-12);
        CHECK(m.per_seed_top1.size() == 2);
    }
    CHECK(report.majority_accuracy > 0.0);

    std::string out = testutil::fresh_dir("eval_probe_out");
    write_srr_report(out, report);
    CHECK(std::ifstream(out + "/srr_report.csv").good());
    CHECK(std::ifstream(out + "/srr_summary.json").good());
}

TEST_CASE("export: modes, re-export determinism, graph = normalized mean of paths") {
    auto s = eval_setup("eval_export", 8, 71);
    std::string dir = testutil::fresh_dir("eval_export_out");
    uint64_t mh = 0x1234;

    // object mode: one row per object, unit norm
    export_embeddings(s.corpus, s.data, s.trained, ExportMode::object, s.cfg,
                      dir + "/obj.bin", mh);
    auto objs = read_embedding_table(dir + "/obj.bin");
    size_t expect = 0;
    for (const auto& sc : s.corpus.scenes) expect += sc.objects.size();
    CHECK(objs.size() == expect);
    for (const auto& r : objs) {
        double n = 0;
        for (float v : r.vector) n += static_cast<double>(v) * v;
        CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-4);
    }

    // re-export bit-identical
    export_embeddings(s.corpus, s.data, s.trained, ExportMode::object, s.cfg,
                      dir + "/obj2.bin", mh);
    std::ifstream f1(dir + "/obj.bin", std::ios::binary), f2(dir + "/obj2.bin", std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);

    // graph rows equal the normalized mean of that scene's path rows
    export_embeddings(s.corpus, s.data, s.trained, ExportMode::path, s.cfg,
                      dir + "/path.bin", mh);
    export_embeddings(s.corpus, s.data, s.trained, ExportMode::graph, s.cfg,
                      dir + "/graph.bin", mh);
    auto paths = read_embedding_table(dir + "/path.bin");
    auto graphs = read_embedding_table(dir + "/graph.bin");
    REQUIRE(!graphs.empty());
    for (const auto& gr : graphs) {
        std::vector<double> mean(gr.vector.size(), 0.0);
        int count = 0;
        for (const auto& pr : paths) {
            if (pr.scene_id != gr.scene_id) continue;
            for (size_t i = 0; i < mean.size(); ++i) mean[i] += pr.vector[i];
            ++count;
        }
        REQUIRE(count > 0);
        double n = 0;
        for (auto& v : mean) {
            v /= count;
        }
        for (double v : mean) n += v * v;
        n = std::sqrt(n) + 1e-8;
        for (size_t i = 0; i < mean.size(); ++i)
            CHECK(std::abs(gr.vector[i] - mean[i] / n) < 1e-5);
    }
}
