#include <doctest.h>

#include <cmath>
#include <fstream>

#include "sgcl/checkpoint.hpp"
#include "testutil.hpp"

using namespace sgcl;

TEST_CASE("adamw single-step hand checks") {
    SUBCASE("zero grad, zero decay: parameters unchanged") {
        ad::ParamStore ps;
        auto& p = ps.create("p", {2});
        p.value.data = {1.5f, -0.5f};
        ad::AdamWConfig cfg;
        cfg.lr = 0.1;
        cfg.weight_decay = 0.0;
        ad::AdamW opt(cfg);
        opt.step(ps);
        CHECK(p.value.data == std::vector<float>{1.5f, -0.5f});
    }

    SUBCASE("p=1, g=1, lr=0.1, wd=0: first step lands at 0.9") {
        // Hand evaluation at t=1: m_hat = v_hat = 1, so p <- 1 - 0.1/(1+eps).
        ad::ParamStore ps;
        auto& p = ps.create("p", {1});
        p.value.data = {1.0f};
        p.value.grad = {1.0f};
        ad::AdamWConfig cfg;
        cfg.lr = 0.1;
        cfg.weight_decay = 0.0;
        ad::AdamW opt(cfg);
        opt.step(ps);
        CHECK(std::abs(p.value.data[0] - 0.9) < 1e-6);
    }

    SUBCASE("decay-only path: p scaled by (1 - lr*wd)") {
        ad::ParamStore ps;
        auto& p = ps.create("p", {1});
        p.value.data = {1.0f};
        ad::AdamWConfig cfg;
        cfg.lr = 0.1;
        cfg.weight_decay = 0.01;
        ad::AdamW opt(cfg);
        opt.step(ps);
        CHECK(p.value.data[0] == doctest::Approx(1.0 * (1.0 - 0.001)).epsilon(1e-6));
    }

    SUBCASE("non-finite gradient names the parameter") {
        ad::ParamStore ps;
        auto& p = ps.create("layer.weight", {1});
        p.value.grad = {std::numeric_limits<float>::infinity()};
        ad::AdamW opt;
        CHECK_THROWS_WITH_AS(opt.step(ps),
                             "diverged: non-finite gradient in layer.weight", Error);
    }
}

TEST_CASE("adamw trajectory matches a straight-line reference") {
    // Independent reimplementation of the update rule, double precision.
    ad::ParamStore ps;
    auto& p = ps.create("w", {3});
    p.value.data = {0.5f, -1.0f, 2.0f};
    ad::AdamWConfig cfg;
    cfg.lr = 0.01;
    cfg.weight_decay = 0.04;
    ad::AdamW opt(cfg);

    std::vector<double> w = {0.5, -1.0, 2.0}, m(3, 0.0), v(3, 0.0);
    Rng rng(3);
    for (int step = 1; step <= 25; ++step) {
        std::vector<double> g(3);
        for (int i = 0; i < 3; ++i) {
            g[i] = rng.uniform_real(-1.0, 1.0);
            p.value.grad[i] = static_cast<float>(g[i]);
        }
        opt.step(ps);
        for (int i = 0; i < 3; ++i) {
            w[i] -= cfg.lr * cfg.weight_decay * w[i];
            m[i] = static_cast<float>(cfg.beta1 * m[i] + (1 - cfg.beta1) * g[i]);
            v[i] = static_cast<float>(cfg.beta2 * v[i] + (1 - cfg.beta2) * g[i] * g[i]);
            double mh = m[i] / (1 - std::pow(cfg.beta1, step));
            double vh = v[i] / (1 - std::pow(cfg.beta2, step));
            w[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
            CHECK(std::abs(w[i] - p.value.data[i]) < 1e-6);
            w[i] = p.value.data[i];  // resync f32 rounding
        }
    }
}

TEST_CASE("xavier init is seeded and layout-aware") {
    ad::ParamStore a, b;
    a.create("w", {8, 4});
    a.create("b", {8});
    b.create("w", {8, 4});
    b.create("b", {8});
    ad::init_xavier_uniform(a, 42);
    ad::init_xavier_uniform(b, 42);
    CHECK(a.at("w").value.data == b.at("w").value.data);
    // biases zero, weights bounded by the xavier limit
    for (float v : a.at("b").value.data) CHECK(v == 0.0f);
    const double limit = std::sqrt(6.0 / (8 + 4));
    for (float v : a.at("w").value.data) {
        CHECK(v <= limit);
        CHECK(v >= -limit);
    }
    ad::ParamStore c;
    c.create("w", {8, 4});
    ad::init_xavier_uniform(c, 43);
    CHECK(a.at("w").value.data != c.at("w").value.data);
}

TEST_CASE("checkpoint round trip is bit exact") {
    ad::ParamStore ps;
    ps.create("alpha", {3, 2});
    ps.create("beta", {4});
    ad::init_xavier_uniform(ps, 9);
    ps.at("beta").value.data = {0.1f, -0.2f, 0.3f, -0.4f};
    ad::AdamW opt;
    opt.ensure_state(ps);
    // dirty the moments so round-tripping covers them
    ps.at("alpha").value.grad.assign(6, 0.5f);
    ps.at("beta").value.grad.assign(4, -0.25f);
    opt.step(ps);

    std::string dir = testutil::fresh_dir("ckpt");
    std::string p1 = dir + "/a.bin";
    save_checkpoint(p1, ps, &opt, 0xABCDEF0123456789ull);

    ad::ParamStore loaded;
    loaded.create("alpha", {3, 2});
    loaded.create("beta", {4});
    ad::AdamW opt2;
    CheckpointMeta meta = load_checkpoint(p1, loaded, &opt2);
    CHECK(meta.config_hash == 0xABCDEF0123456789ull);
    CHECK(meta.step == 1);
    CHECK(meta.has_optimizer_state);
    CHECK(opt2.step_count() == 1);
    CHECK(loaded.at("alpha").value.data == ps.at("alpha").value.data);
    CHECK(loaded.at("beta").value.data == ps.at("beta").value.data);

    // save the reloaded state: files must be byte-identical
    std::string p2 = dir + "/b.bin";
    save_checkpoint(p2, loaded, &opt2, 0xABCDEF0123456789ull);
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    CHECK(!s1.empty());
}

TEST_CASE("checkpoint mismatch errors") {
    ad::ParamStore ps;
    ps.create("w", {2, 2});
    std::string dir = testutil::fresh_dir("ckpt_err");
    save_checkpoint(dir + "/c.bin", ps, nullptr, 1);

    ad::ParamStore wrong_shape;
    wrong_shape.create("w", {2, 3});
    CHECK_THROWS_AS(load_checkpoint(dir + "/c.bin", wrong_shape, nullptr), Error);

    ad::ParamStore missing;
    missing.create("w2", {2, 2});
    CHECK_THROWS_AS(load_checkpoint(dir + "/c.bin", missing, nullptr), Error);

    CHECK_THROWS_AS(read_checkpoint_meta(dir + "/nope.bin"), Error);
}
