#include <doctest.h>

#include <algorithm>
#include <set>

#include "sgcl/scene.hpp"
#include "sgcl/scene_io.hpp"
#include "testutil.hpp"

using namespace sgcl;

namespace {

SceneObject make_object(int id, BinaryMask mask) {
    SceneObject o;
    o.object_id = id;
    o.mask = std::move(mask);
    o.centroid = centroid(o.mask);
    return o;
}

BinaryMask disk_at(int w, int h, int cx, int cy, int r) {
    BinaryMask m = BinaryMask::zeros(w, h);
    for (int y = cy - r; y <= cy + r; ++y)
        for (int x = cx - r; x <= cx + r; ++x)
            if (m.in_bounds(x, y) && (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r)
                m.set(x, y);
    return m;
}

std::set<Relation> oracle_set(const SceneObject& a, const SceneObject& b,
                              const SceneGenConfig& cfg) {
    auto v = relation_oracle(a, b, cfg);
    return std::set<Relation>(v.begin(), v.end());
}

}  // namespace

TEST_CASE("centroid basics") {
    BinaryMask m = BinaryMask::zeros(8, 8);
    m.set(3, 5);
    auto c = centroid(m);
    CHECK(c.x == doctest::Approx(3.0));
    CHECK(c.y == doctest::Approx(5.0));

    BinaryMask block = BinaryMask::zeros(4, 4);
    block.set(0, 0);
    block.set(1, 0);
    block.set(0, 1);
    block.set(1, 1);
    c = centroid(block);
    CHECK(c.x == doctest::Approx(0.5));
    CHECK(c.y == doctest::Approx(0.5));

    BinaryMask ell = BinaryMask::zeros(4, 4);
    ell.set(0, 0);
    ell.set(1, 0);
    ell.set(0, 1);
    c = centroid(ell);
    CHECK(c.x == doctest::Approx(1.0 / 3.0));
    CHECK(c.y == doctest::Approx(1.0 / 3.0));

    BinaryMask empty = BinaryMask::zeros(4, 4);
    CHECK_THROWS_WITH_AS(centroid(empty), "degenerate mask", Error);
}

TEST_CASE("rle round trip") {
    Rng rng(123);
    for (int t = 0; t < 50; ++t) {
        BinaryMask m = testutil::random_mask(rng, rng.uniform_int(1, 40),
                                             rng.uniform_int(1, 40), 60);
        CHECK(rle_decode(rle_encode(m)) == m);
    }
    // all-zero and all-one grids
    BinaryMask z = BinaryMask::zeros(7, 3);
    CHECK(rle_decode(rle_encode(z)) == z);
    std::fill(z.bits.begin(), z.bits.end(), 1);
    CHECK(rle_decode(rle_encode(z)) == z);
}

TEST_CASE("relation oracle worked examples") {
    SceneGenConfig cfg;  // 64x64 grid, near < 0.25 * 90.51 = 22.63

    SUBCASE("horizontal far pair") {
        auto a = make_object(0, disk_at(64, 64, 10, 32, 3));
        auto b = make_object(1, disk_at(64, 64, 50, 32, 3));
        CHECK(oracle_set(a, b, cfg) == std::set<Relation>{Relation::left_of, Relation::far});
        CHECK(oracle_set(b, a, cfg) == std::set<Relation>{Relation::right_of, Relation::far});
    }

    SUBCASE("identical masks") {
        auto a = make_object(0, disk_at(64, 64, 20, 20, 3));
        auto b = make_object(1, disk_at(64, 64, 20, 20, 3));
        CHECK(oracle_set(a, b, cfg) ==
              std::set<Relation>{Relation::overlapping, Relation::near});
    }

    SUBCASE("vertical axis convention: y grows downward") {
        // a at (30,30), b at (30,10): b sits above a, so a is BELOW b; the
        // centroid distance 20 < 22.63 makes the pair near. Freezes the
        // y-axis sign convention.
        auto a = make_object(0, disk_at(64, 64, 30, 30, 2));
        auto b = make_object(1, disk_at(64, 64, 30, 10, 2));
        CHECK(oracle_set(a, b, cfg) == std::set<Relation>{Relation::below, Relation::near});
        CHECK(oracle_set(b, a, cfg) == std::set<Relation>{Relation::above, Relation::near});
    }

    SUBCASE("diagonal pair gets no axis relation") {
        auto a = make_object(0, disk_at(64, 64, 20, 20, 2));
        auto b = make_object(1, disk_at(64, 64, 30, 29, 2));
        auto rel = oracle_set(a, b, cfg);
        CHECK(rel.count(Relation::left_of) == 0);
        CHECK(rel.count(Relation::above) == 0);
        CHECK(rel.count(Relation::near) == 1);
    }
}

TEST_CASE("relation oracle properties") {
    SceneGenConfig cfg;
    Rng rng(99);
    for (int t = 0; t < 200; ++t) {
        auto a = make_object(0, disk_at(64, 64, rng.uniform_int(3, 60), rng.uniform_int(3, 60),
                                        rng.uniform_int(2, 3)));
        auto b = make_object(1, disk_at(64, 64, rng.uniform_int(3, 60), rng.uniform_int(3, 60),
                                        rng.uniform_int(2, 3)));
        auto ab = oracle_set(a, b, cfg);
        auto ba = oracle_set(b, a, cfg);

        // antisymmetry of axis relations
        CHECK(ab.count(Relation::left_of) == ba.count(Relation::right_of));
        CHECK(ab.count(Relation::above) == ba.count(Relation::below));
        // symmetry of overlap and proximity
        CHECK(ab.count(Relation::overlapping) == ba.count(Relation::overlapping));
        CHECK(ab.count(Relation::near) == ba.count(Relation::near));
        // exactly one of near/far
        CHECK(ab.count(Relation::near) + ab.count(Relation::far) == 1);
        // at most one axis relation
        CHECK(ab.count(Relation::left_of) + ab.count(Relation::right_of) +
                  ab.count(Relation::above) + ab.count(Relation::below) <=
              1);
    }
}

TEST_CASE("generate_scene determinism and postconditions") {
    SceneGenConfig cfg;
    Scene s1 = generate_scene(12345, "scene_x", cfg);
    Scene s2 = generate_scene(12345, "scene_x", cfg);
    REQUIRE(s1.objects.size() == s2.objects.size());
    for (size_t i = 0; i < s1.objects.size(); ++i) {
        CHECK(s1.objects[i].mask == s2.objects[i].mask);
        CHECK(s1.objects[i].label_id == s2.objects[i].label_id);
    }
    CHECK(s1.oracle_relations == s2.oracle_relations);

    CHECK(s1.objects.size() >= 3);
    CHECK(s1.objects.size() <= 6);
    for (const auto& o : s1.objects) CHECK(o.mask.pixel_count() >= 9);
    for (size_t i = 0; i < s1.objects.size(); ++i)
        CHECK(s1.objects[i].object_id == static_cast<int>(i));
    for (const auto& t : s1.oracle_relations) {
        CHECK(t.subject_id >= 0);
        CHECK(t.subject_id < static_cast<int>(s1.objects.size()));
        CHECK(t.object_id < static_cast<int>(s1.objects.size()));
    }
}

TEST_CASE("single-object scene has no relations") {
    SceneGenConfig cfg;
    cfg.min_objects = 1;
    cfg.max_objects = 1;
    Scene s = generate_scene(7, "scene_one", cfg);
    CHECK(s.objects.size() == 1);
    CHECK(s.oracle_relations.empty());
}

TEST_CASE("placement exhausted on impossible grids") {
    SceneGenConfig cfg;
    cfg.grid_width = 2;
    cfg.grid_height = 2;
    CHECK_THROWS_AS(generate_scene(1, "scene_tiny", cfg), Error);
}

TEST_CASE("scene save/load round trip") {
    SceneGenConfig cfg;
    Scene s = generate_scene(42, "scene_rt", cfg);
    std::string dir = testutil::fresh_dir("scene_rt");
    save_scene(dir, s);
    Scene loaded = load_scene(dir);
    CHECK(loaded.scene_id == s.scene_id);
    REQUIRE(loaded.objects.size() == s.objects.size());
    for (size_t i = 0; i < s.objects.size(); ++i) {
        CHECK(loaded.objects[i].mask == s.objects[i].mask);
        CHECK(loaded.objects[i].label_id == s.objects[i].label_id);
        CHECK(loaded.objects[i].attribute_id == s.objects[i].attribute_id);
    }
    CHECK(loaded.oracle_relations == s.oracle_relations);
}

TEST_CASE("corpus generation is thread-count invariant") {
    SceneGenConfig cfg;
    std::string d1 = testutil::fresh_dir("corpus_t1");
    std::string d4 = testutil::fresh_dir("corpus_t4");
    auto m1 = generate_corpus(d1, 7, 12, cfg, 1);
    auto m4 = generate_corpus(d4, 7, 12, cfg, 4);
    CHECK(m1.corpus_hash == m4.corpus_hash);
    // regenerating any scene from (seed, scene_id) reproduces identical bits
    Corpus c = load_corpus(d1);
    for (int i : {0, 5, 11}) {
        Scene regen = generate_scene(scene_seed_for(7, c.manifest.scene_ids[i]),
                                     c.manifest.scene_ids[i], cfg);
        REQUIRE(regen.objects.size() == c.scenes[i].objects.size());
        for (size_t o = 0; o < regen.objects.size(); ++o)
            CHECK(regen.objects[o].mask == c.scenes[i].objects[o].mask);
    }
}
