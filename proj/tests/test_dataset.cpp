#include <doctest.h>

#include <set>

#include "core/dataset.hpp"
#include "core/errors.hpp"
#include "core/io_util.hpp"
#include "support/linear_probe.hpp"
#include "support/test_util.hpp"

using namespace uclearn;
using uclearn::testing::TempDir;

TEST_CASE("synth_blobs sample count and labels") {
    SynthParams p;
    p.num_categories = 10;
    p.per_category = 20;
    p.side = 16;
    p.seed = 0;
    const auto ds = synth_blobs(p);
    CHECK(ds.size() == 200);
    CHECK(ds.num_categories == 10);
    std::set<int> labels;
    for (const auto& s : ds.samples) labels.insert(s.label);
    CHECK(labels.size() == 10);
    CHECK(*labels.begin() == 0);
    CHECK(*labels.rbegin() == 9);
    validate_dataset(ds);
}

TEST_CASE("synth_blobs is deterministic") {
    SynthParams p;
    p.num_categories = 2;
    p.per_category = 1;
    p.side = 8;
    p.seed = 7;
    const auto a = synth_blobs(p);
    const auto b = synth_blobs(p);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.samples[i].id == b.samples[i].id);
        CHECK(a.samples[i].pixels.data == b.samples[i].pixels.data);
    }
}

TEST_CASE("synth_blobs train and test splits draw distinct noise") {
    SynthParams p;
    p.num_categories = 3;
    p.per_category = 4;
    p.side = 8;
    p.seed = 1;
    const auto train = synth_blobs(p);
    const auto test = synth_blobs_test(p, 4);
    CHECK(train.size() == test.size());
    CHECK(train.samples[0].pixels.data != test.samples[0].pixels.data);
    std::set<std::string> ids;
    for (const auto& s : train.samples) ids.insert(s.id);
    for (const auto& s : test.samples) CHECK(ids.count(s.id) == 0);
}

// Oracle: a plain least-squares classifier on raw pixels must already solve
// the synthetic task; the dataset is only useful if it is learnable.
TEST_CASE("synth_blobs is linearly learnable" * doctest::timeout(300)) {
    SynthParams p;
    p.num_categories = 10;
    p.per_category = 100;
    p.side = 32;
    p.seed = 0;
    const auto train = synth_blobs(p);
    const auto test = synth_blobs_test(p, 20);
    const auto probe = uclearn::testing::fit_linear_probe(train);
    const double acc = uclearn::testing::probe_accuracy(probe, test);
    CHECK(acc >= 0.70);
}

TEST_CASE("save then load round-trips quantized pixels, labels and ids") {
    SynthParams p;
    p.num_categories = 2;
    p.per_category = 1;
    p.side = 8;
    p.seed = 3;
    auto ds = synth_blobs(p);
    for (auto& s : ds.samples) quantize_image(s.pixels);

    TempDir dir("roundtrip");
    save_dataset(ds, dir.path());
    const auto back = load_dataset(dir.path());
    REQUIRE(back.size() == ds.size());
    CHECK(back.num_categories == ds.num_categories);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.samples[i].id == ds.samples[i].id);
        CHECK(back.samples[i].label == ds.samples[i].label);
        CHECK(back.samples[i].pixels.data == ds.samples[i].pixels.data);
    }
}

TEST_CASE("load rejects a manifest with a missing image file") {
    SynthParams p;
    p.num_categories = 2;
    p.per_category = 2;
    p.side = 8;
    p.seed = 4;
    const auto ds = synth_blobs(p);
    TempDir dir("missing");
    save_dataset(ds, dir.path());
    std::filesystem::remove(dir.path() / "images" / (ds.samples[1].id + ".png"));
    try {
        load_dataset(dir.path());
        FAIL("expected format error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::format);
        CHECK(std::string(e.what()).find(ds.samples[1].id) != std::string::npos);
    }
}

TEST_CASE("load rejects labels outside the declared category count") {
    SynthParams p;
    p.num_categories = 2;
    p.per_category = 1;
    p.side = 8;
    p.seed = 5;
    const auto ds = synth_blobs(p);
    TempDir dir("badlabel");
    save_dataset(ds, dir.path());

    auto manifest = read_text_file(dir.path() / "manifest.json");
    const auto pos = manifest.find("\"num_categories\": 2");
    REQUIRE(pos != std::string::npos);
    manifest.replace(pos, 19, "\"num_categories\": 1");
    atomic_write_file(dir.path() / "manifest.json", manifest);

    CHECK_THROWS_AS(load_dataset(dir.path()), Error);
}

TEST_CASE("load rejects a missing manifest") {
    TempDir dir("nomanifest");
    CHECK_THROWS_AS(load_dataset(dir.path()), Error);
}

TEST_CASE("make_grouping shapes") {
    SUBCASE("n == m is the identity") {
        const auto g = make_grouping(10, 10, 42);
        for (int i = 0; i < 10; ++i) CHECK(g.table[i] == i);
    }
    SUBCASE("n == 1 collapses everything") {
        const auto g = make_grouping(10, 1, 42);
        for (int v : g.table) CHECK(v == 0);
    }
    SUBCASE("37 into 5 gives sizes {8,8,7,7,7}") {
        const auto g = make_grouping(37, 5, 3);
        std::vector<int> sizes(5, 0);
        for (int v : g.table) sizes[v]++;
        std::multiset<int> got(sizes.begin(), sizes.end());
        CHECK(got == std::multiset<int>{7, 7, 7, 8, 8});
    }
    SUBCASE("deterministic under seed, surjective") {
        const auto a = make_grouping(9, 4, 11);
        const auto b = make_grouping(9, 4, 11);
        CHECK(a.table == b.table);
        std::set<int> hit(a.table.begin(), a.table.end());
        CHECK(hit.size() == 4);
    }
    SUBCASE("n > m is rejected") {
        CHECK_THROWS_AS(make_grouping(3, 4, 0), Error);
    }
}

TEST_CASE("relabel maps labels and keeps pixels") {
    SynthParams p;
    p.num_categories = 10;
    p.per_category = 3;
    p.side = 8;
    p.seed = 6;
    const auto ds = synth_blobs(p);

    SUBCASE("identity mapping gives an equal dataset") {
        LabelMapping identity;
        identity.source_categories = 10;
        identity.target_categories = 10;
        for (int i = 0; i < 10; ++i) identity.table.push_back(i);
        const auto out = relabel(ds, identity);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            CHECK(out.samples[i].label == ds.samples[i].label);
            CHECK(out.samples[i].pixels.data == ds.samples[i].pixels.data);
        }
    }

    SUBCASE("mod mapping groups two source labels per target") {
        LabelMapping mod;
        mod.source_categories = 10;
        mod.target_categories = 5;
        for (int i = 0; i < 10; ++i) mod.table.push_back(i % 5);
        const auto out = relabel(ds, mod);
        CHECK(out.num_categories == 5);
        std::vector<int> sources(5, 0);
        for (int i = 0; i < 10; ++i) sources[mod.table[i]]++;
        for (int v : sources) CHECK(v == 2);
    }

    SUBCASE("balanced grouping class sizes differ by at most one") {
        const auto g = make_grouping(10, 3, 1);
        std::vector<int> sizes(3, 0);
        for (int v : g.table) sizes[v]++;
        const auto [mn, mx] = std::minmax_element(sizes.begin(), sizes.end());
        CHECK(*mx - *mn <= 1);
    }

    SUBCASE("non-surjective mapping is rejected") {
        LabelMapping bad;
        bad.source_categories = 10;
        bad.target_categories = 3;
        bad.table.assign(10, 0); // never hits 1 or 2
        CHECK_THROWS_AS(relabel(ds, bad), Error);
    }

    SUBCASE("category-count mismatch is rejected") {
        LabelMapping wrong;
        wrong.source_categories = 4;
        wrong.target_categories = 2;
        wrong.table = {0, 1, 0, 1};
        CHECK_THROWS_AS(relabel(ds, wrong), Error);
    }
}

TEST_CASE("mix_datasets selects per-category sources") {
    SynthParams p;
    p.num_categories = 10;
    p.per_category = 2;
    p.side = 8;
    p.seed = 9;
    const auto clean = synth_blobs(p);
    auto protected_ds = clean;
    for (auto& s : protected_ds.samples) {
        for (auto& v : s.pixels.data) v = clampf(v + 0.03f, 0.0f, 1.0f);
    }

    SUBCASE("all categories clean equals clean") {
        std::set<int> all;
        for (int i = 0; i < 10; ++i) all.insert(i);
        const auto out = mix_datasets(clean, protected_ds, all);
        for (std::size_t i = 0; i < out.size(); ++i) {
            CHECK(out.samples[i].pixels.data == clean.samples[i].pixels.data);
        }
    }
    SUBCASE("no categories clean equals protected") {
        const auto out = mix_datasets(clean, protected_ds, {});
        for (std::size_t i = 0; i < out.size(); ++i) {
            CHECK(out.samples[i].pixels.data == protected_ds.samples[i].pixels.data);
        }
    }
    SUBCASE("first five categories match clean pixel-wise, rest protected") {
        const std::set<int> first{0, 1, 2, 3, 4};
        const auto out = mix_datasets(clean, protected_ds, first);
        int clean_matches = 0, prot_matches = 0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (first.count(out.samples[i].label)) {
                CHECK(out.samples[i].pixels.data == clean.samples[i].pixels.data);
                ++clean_matches;
            } else {
                CHECK(out.samples[i].pixels.data == protected_ds.samples[i].pixels.data);
                ++prot_matches;
            }
        }
        CHECK(clean_matches == 10);
        CHECK(prot_matches == 10);
    }
    SUBCASE("id mismatch is rejected") {
        auto renamed = protected_ds;
        renamed.samples[0].id = "other";
        CHECK_THROWS_AS(mix_datasets(clean, renamed, {}), Error);
    }
}
