#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sgcl/force.hpp"
#include "sgcl/scene.hpp"
#include "testutil.hpp"

using namespace sgcl;

namespace {

BinaryMask pixels(int w, int h, std::initializer_list<std::pair<int, int>> pts) {
    BinaryMask m = BinaryMask::zeros(w, h);
    for (auto [x, y] : pts) m.set(x, y);
    return m;
}

double total_mass(const ForceHistogram& hist, int level_idx) {
    double acc = 0.0;
    for (int t = 0; t < hist.theta_bins; ++t) acc += hist.at(t, level_idx);
    return acc;
}

}  // namespace

TEST_CASE("single-pair histograms") {
    BannerConfig cfg;
    cfg.theta_bins = 8;
    cfg.levels = {0, 2};
    auto a = pixels(8, 8, {{0, 0}});
    auto b = pixels(8, 8, {{3, 0}});

    auto h = force_histogram(a, b, cfg);
    // b - a = (3,0): angle 0, bin 0. r=0 weight 1.0; r=2 weight 1/9.
    CHECK(h.at(0, 0) == doctest::Approx(1.0));
    CHECK(h.at(0, 1) == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
    for (int t = 1; t < 8; ++t) {
        CHECK(h.at(t, 0) == 0.0);
        CHECK(h.at(t, 1) == 0.0);
    }

    auto hb = brute_force_histogram(a, b, cfg);
    for (size_t i = 0; i < h.values.size(); ++i)
        CHECK(h.values[i] == doctest::Approx(hb.values[i]).epsilon(1e-12));
}

TEST_CASE("force histogram errors") {
    BannerConfig cfg;
    auto a = pixels(8, 8, {{1, 1}});
    BinaryMask empty = BinaryMask::zeros(8, 8);
    CHECK_THROWS_WITH_AS(force_histogram(a, empty, cfg), "degenerate mask", Error);
    CHECK_THROWS_WITH_AS(force_histogram(empty, a, cfg), "degenerate mask", Error);
    // coincident single-pixel masks: no usable pair at r>0
    CHECK_THROWS_WITH_AS(force_histogram(a, a, cfg), "zero-distance pair", Error);
    // with r=0 only, the pair is skipped and the histogram is all zeros
    BannerConfig r0;
    r0.levels = {0};
    auto h = force_histogram(a, a, r0);
    CHECK(total_mass(h, 0) == 0.0);
}

TEST_CASE("normalization: disjoint translates carry unit mass at r=0") {
    BannerConfig cfg;
    cfg.theta_bins = 16;
    cfg.levels = {0};
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
        BinaryMask a = testutil::random_mask(rng, 20, 10, 25);
        // same shape shifted fully below itself: every pixel pair is distinct
        BinaryMask a2 = BinaryMask::zeros(20, 40), b2 = BinaryMask::zeros(20, 40);
        for (auto [x, y] : set_pixels(a)) a2.set(x, y);
        for (auto [x, y] : set_pixels(a)) b2.set(x, y + 11);
        auto h = brute_force_histogram(a2, b2, cfg);
        CHECK(total_mass(h, 0) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("fast path equals brute force oracle") {
    Rng rng(2024);
    for (int t = 0; t < 60; ++t) {
        BannerConfig cfg;
        cfg.theta_bins = (t % 2 == 0) ? 64 : 8;
        cfg.levels = (t % 3 == 0) ? std::vector<int>{0, 1, 2} : std::vector<int>{0, 2};
        const int w = rng.uniform_int(4, 64), h = rng.uniform_int(4, 64);
        BinaryMask a = testutil::random_mask(rng, w, h, 40);
        BinaryMask b = testutil::random_mask(rng, w, h, 40);
        auto fast = force_histogram(a, b, cfg);
        auto brute = brute_force_histogram(a, b, cfg);
        for (size_t i = 0; i < fast.values.size(); ++i) {
            const double denom = std::max(std::abs(brute.values[i]), 1e-300);
            if (brute.values[i] == 0.0)
                CHECK(fast.values[i] == 0.0);
            else
                CHECK(std::abs(fast.values[i] - brute.values[i]) / denom < 1e-6);
        }
    }
}

TEST_CASE("symmetric banner: averaged directions and bit-exact swap") {
    BannerConfig cfg;
    cfg.theta_bins = 8;
    cfg.levels = {0};
    auto a = pixels(8, 8, {{0, 0}});
    auto b = pixels(8, 8, {{3, 0}});
    auto banner = symmetric_force_banner(a, b, cfg);
    CHECK(banner.at(0, 0) == doctest::Approx(0.5));
    CHECK(banner.at(4, 0) == doctest::Approx(0.5));  // 180 degrees

    Rng rng(77);
    for (int t = 0; t < 30; ++t) {
        BannerConfig c2;
        BinaryMask ma = testutil::random_mask(rng, 32, 32, 30);
        BinaryMask mb = testutil::random_mask(rng, 32, 32, 30);
        auto ab = symmetric_force_banner(ma, mb, c2);
        auto ba = symmetric_force_banner(mb, ma, c2);
        CHECK(ab.values == ba.values);  // bit-identical
    }
}

TEST_CASE("translation invariance") {
    BannerConfig cfg;
    Rng rng(31);
    for (int t = 0; t < 20; ++t) {
        BinaryMask a = testutil::random_mask(rng, 20, 20, 25);
        BinaryMask b = testutil::random_mask(rng, 20, 20, 25);
        // embed into a larger grid and shift both by the same offset
        auto embed = [&](const BinaryMask& m, int dx, int dy) {
            BinaryMask out = BinaryMask::zeros(40, 40);
            for (auto [x, y] : set_pixels(m)) out.set(x + dx, y + dy);
            return out;
        };
        int dx = rng.uniform_int(0, 19), dy = rng.uniform_int(0, 19);
        auto h0 = force_histogram(embed(a, 0, 0), embed(b, 0, 0), cfg);
        auto h1 = force_histogram(embed(a, dx, dy), embed(b, dx, dy), cfg);
        for (size_t i = 0; i < h0.values.size(); ++i)
            CHECK(std::abs(h0.values[i] - h1.values[i]) < 1e-9);
    }
}

TEST_CASE("left-right mirror permutes theta bins as t -> (B/2 - t) mod B") {
    BannerConfig cfg;  // 64 bins (multiple of 8: pixel angles avoid boundaries)
    Rng rng(404);
    for (int t = 0; t < 20; ++t) {
        BinaryMask a = testutil::random_mask(rng, 24, 24, 25);
        BinaryMask b = testutil::random_mask(rng, 24, 24, 25);
        auto orig = symmetric_force_banner(a, b, cfg);
        auto mirr = symmetric_force_banner(testutil::mirror_lr(a), testutil::mirror_lr(b), cfg);
        const int B = cfg.theta_bins;
        const int L = static_cast<int>(cfg.levels.size());
        for (int bin = 0; bin < B; ++bin) {
            int mapped = ((B / 2 - bin) % B + B) % B;
            for (int li = 0; li < L; ++li)
                CHECK(std::abs(orig.at(bin, li) - mirr.at(mapped, li)) < 1e-9);
        }
    }
}

TEST_CASE("directed duality: both orientations carry equal total force") {
    BannerConfig cfg;
    Rng rng(11);
    for (int t = 0; t < 20; ++t) {
        BinaryMask a = testutil::random_mask(rng, 24, 24, 30);
        BinaryMask b = testutil::random_mask(rng, 24, 24, 30);
        auto ab = force_histogram(a, b, cfg);
        auto ba = force_histogram(b, a, cfg);
        for (size_t li = 0; li < cfg.levels.size(); ++li)
            CHECK(std::abs(total_mass(ab, static_cast<int>(li)) -
                           total_mass(ba, static_cast<int>(li))) < 1e-9);
    }
}

TEST_CASE("r=0 histogram is stable under 2x dilation") {
    // Discretization noise scales with angular resolution and inversely with
    // pair separation: per-pair stability within 0.05 L1 holds for
    // non-adjacent blob pairs, and at the default 64-bin resolution the mean
    // over scene pairs stays within the same bound.
    SceneGenConfig g;
    std::vector<std::pair<BinaryMask, BinaryMask>> pairs;
    for (int s = 0; s < 12; ++s) {
        Scene sc = generate_scene(6000 + s, "dil", g);
        for (size_t i = 0; i < sc.objects.size(); ++i)
            for (size_t j = i + 1; j < sc.objects.size(); ++j) {
                const auto& a = sc.objects[i];
                const auto& b = sc.objects[j];
                if (std::hypot(a.centroid.x - b.centroid.x,
                               a.centroid.y - b.centroid.y) < 16.0)
                    continue;
                pairs.emplace_back(a.mask, b.mask);
            }
    }
    REQUIRE(pairs.size() >= 20);

    auto l1_after_dilation = [](const BinaryMask& a, const BinaryMask& b,
                                const BannerConfig& cfg) {
        auto h = force_histogram(a, b, cfg);
        auto hd = force_histogram(testutil::dilate2x(a), testutil::dilate2x(b), cfg);
        double l1 = 0.0;
        for (size_t i = 0; i < h.values.size(); ++i)
            l1 += std::abs(h.values[i] - hd.values[i]);
        return l1;
    };

    BannerConfig coarse;
    coarse.theta_bins = 16;
    coarse.levels = {0};
    for (const auto& [a, b] : pairs) CHECK(l1_after_dilation(a, b, coarse) < 0.05);

    BannerConfig fine;  // default 64 bins
    fine.levels = {0};
    double mean = 0.0;
    for (const auto& [a, b] : pairs) mean += l1_after_dilation(a, b, fine);
    mean /= static_cast<double>(pairs.size());
    CHECK(mean < 0.05);
}

TEST_CASE("dominant direction") {
    BannerConfig cfg;
    cfg.theta_bins = 8;
    cfg.levels = {0};
    auto a = pixels(8, 8, {{0, 0}});
    auto b = pixels(8, 8, {{3, 0}});
    auto banner = symmetric_force_banner(a, b, cfg);
    // bins 0 and 4 tie at 0.5; ties resolve to the lowest index
    CHECK(dominant_direction(banner) == 0);

    ForceBanner unique;
    unique.theta_bins = 8;
    unique.levels = {0};
    unique.values.assign(8, 0.1);
    unique.values[3] = 0.9;
    CHECK(dominant_direction(unique) == 3);

    // random banners match an exhaustive scan
    Rng rng(88);
    for (int t = 0; t < 50; ++t) {
        ForceBanner r;
        r.theta_bins = 16;
        r.levels = {0};
        r.values.resize(16);
        for (auto& v : r.values) v = rng.uniform_real();
        int best = 0;
        for (int i = 1; i < 16; ++i)
            if (r.values[i] > r.values[best]) best = i;
        CHECK(dominant_direction(r) == best);
    }

    ForceBanner zero;
    zero.theta_bins = 8;
    zero.levels = {0};
    zero.values.assign(8, 0.0);
    CHECK_THROWS_WITH_AS(dominant_direction(zero), "undefined direction", Error);
}

TEST_CASE("banner cache round trip and invalidation") {
    BannerConfig cfg;
    Rng rng(9);
    BinaryMask a = testutil::random_mask(rng, 16, 16, 20);
    BinaryMask b = testutil::random_mask(rng, 16, 16, 20);
    auto banner = symmetric_force_banner(a, b, cfg);

    std::string dir = testutil::fresh_dir("banner_cache");
    std::string path = dir + "/scene_x.sfbc";
    save_banner_cache(path, cfg.hash(), {{0, 1, banner}});

    auto loaded = load_banner_cache(path, cfg.hash());
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].i == 0);
    CHECK(loaded[0].j == 1);
    CHECK(loaded[0].banner.values == banner.values);

    // a different banner config must miss
    BannerConfig other;
    other.theta_bins = 32;
    CHECK(load_banner_cache(path, other.hash()).empty());
    CHECK(load_banner_cache(dir + "/absent.sfbc", cfg.hash()).empty());
}
