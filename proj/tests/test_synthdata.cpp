#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>

#include "chi_square.hpp"
#include "simper/signal.hpp"
#include "simper/synthdata.hpp"

using namespace simper;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& tag) {
    const auto dir = fs::temp_directory_path() / ("simper_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

GenOptions small_opts(const std::string& dir, const std::string& split) {
    GenOptions o;
    o.dir = dir;
    o.split_name = split;
    o.num_frames = 90;
    o.canvas = 12;
    return o;
}

}  // namespace

TEST_CASE("rotating sprites carry their ground-truth frequency") {
    const std::string dir = fresh_dir("gt");
    GenOptions opt = small_opts(dir, "train");
    opt.num_frames = 150;
    opt.canvas = 16;
    auto m = generate_rotating_sprites(20, 0.5, 5.0, 11, opt);
    REQUIRE(m.entries.size() == 20);
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        Clip c = load_sample(m, i);
        const double traced = dominant_frequency(c.max_variance_series());
        const double bin = 30.0 / 150.0;
        CHECK_THAT(traced, Catch::Matchers::WithinAbs(m.entries[i].spec.freq_hz, bin + 0.1));
    }
}

TEST_CASE("generation is deterministic and n=0 gives an empty manifest") {
    const std::string d1 = fresh_dir("det1"), d2 = fresh_dir("det2");
    auto m1 = generate_rotating_sprites(6, 0.5, 5.0, 3, small_opts(d1, "train"));
    auto m2 = generate_rotating_sprites(6, 0.5, 5.0, 3, small_opts(d2, "train"));
    REQUIRE(m1.entries.size() == m2.entries.size());
    for (std::size_t i = 0; i < m1.entries.size(); ++i) {
        CHECK(m1.entries[i].checksum == m2.entries[i].checksum);
        CHECK(m1.entries[i].spec.freq_hz == m2.entries[i].spec.freq_hz);
    }
    CHECK(manifest_checksum(m1) == manifest_checksum(m2));

    auto m3 = generate_rotating_sprites(6, 0.5, 5.0, 4, small_opts(fresh_dir("det3"), "train"));
    CHECK(manifest_checksum(m1) != manifest_checksum(m3));

    auto empty = generate_rotating_sprites(0, 0.5, 5.0, 3, small_opts(fresh_dir("det0"), "train"));
    CHECK(empty.entries.empty());

    CHECK_THROWS_AS(generate_rotating_sprites(2, 0.5, 20.0, 1, small_opts(fresh_dir("nyq"), "t")),
                    aliasing_error);
}

TEST_CASE("manifest round trip and verification") {
    const std::string dir = fresh_dir("manifest");
    auto m = generate_rotating_sprites(4, 0.5, 5.0, 7, small_opts(dir, "train"));
    auto loaded = load_manifest(manifest_path(m));
    CHECK(loaded.entries.size() == 4);
    CHECK(loaded.split_name == "train");
    CHECK(loaded.freq_hi == 5.0);
    CHECK(manifest_checksum(loaded) == manifest_checksum(m));
    CHECK_NOTHROW(verify_manifest(loaded));

    // corrupt one blob: verification must fail
    {
        std::ofstream f(fs::path(dir) / loaded.entries[1].file,
                        std::ios::binary | std::ios::app);
        f << "x";
    }
    CHECK_THROWS_AS(verify_manifest(loaded), io_error);
    CHECK_THROWS_AS(load_manifest(dir + "/nope.json"), io_error);
}

TEST_CASE("sine1d generator") {
    const std::string dir = fresh_dir("sine");
    GenOptions opt = small_opts(dir, "train");
    opt.num_frames = 150;
    auto m = generate_sine1d(12, 1.5, 2.5, 0.0, 5, opt);
    CHECK(m.kind == "sine1d");
    CHECK_FALSE(m.low_snr);
    double lo = 1e9, hi = -1e9;
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        lo = std::min(lo, m.entries[i].spec.freq_hz);
        hi = std::max(hi, m.entries[i].spec.freq_hz);
    }
    CHECK(lo >= 1.5);
    CHECK(hi < 2.5);

    // noise-free 2 Hz fixture
    auto m2 = generate_sine1d(1, 1.999, 2.001, 0.0, 9, small_opts(fresh_dir("sine2"), "t"));
    Clip c = load_sample(m2, 0);
    // 90 frames at 30 Hz: bin width 1/3 Hz, refinement gets close
    CHECK_THAT(dominant_frequency(c.pixel_series(0, 0, 0)),
               Catch::Matchers::WithinAbs(m2.entries[0].spec.freq_hz, 0.05));

    auto noisy = generate_sine1d(2, 1.0, 2.0, 1.0, 9, small_opts(fresh_dir("sine3"), "t"));
    CHECK(noisy.low_snr);  // sigma^2 = 1 > signal power 1/2
}

TEST_CASE("interpolation and extrapolation gap splits") {
    const std::string dir = fresh_dir("gap");
    auto train = generate_sine1d(200, 0.5, 5.0, 0.0, 21, small_opts(dir, "train"));
    auto test = generate_sine1d(200, 0.5, 5.0, 0.0, 22, small_opts(dir, "test"));

    SplitRule rule;
    rule.kind = SplitRule::Kind::InterpolationGap;
    rule.band_lo = 2.0;
    rule.band_hi = 3.0;
    auto pair = build_split(train, test, rule, 1);
    for (const auto& e : pair.train.entries)
        CHECK((e.spec.freq_hz < 2.0 || e.spec.freq_hz > 3.0));
    std::size_t in_band = 0;
    for (const auto& e : pair.test.entries)
        if (e.spec.freq_hz >= 2.0 && e.spec.freq_hz <= 3.0) ++in_band;
    CHECK(in_band >= pair.test.entries.size() / 10);

    SplitRule ex;
    ex.kind = SplitRule::Kind::ExtrapolationGap;
    ex.band_lo = 4.0;
    auto epair = build_split(train, test, ex, 1);
    for (const auto& e : epair.train.entries) CHECK(e.spec.freq_hz < 4.0);
    CHECK(epair.test.entries.size() == 200);

    SplitRule bad;
    bad.kind = SplitRule::Kind::InterpolationGap;
    bad.band_lo = 0.1;  // below the dataset range
    CHECK_THROWS_AS(build_split(train, test, bad, 1), config_error);
}

TEST_CASE("subsample split") {
    const std::string dir = fresh_dir("subsample");
    auto train = generate_sine1d(1000, 0.5, 5.0, 0.0, 31, small_opts(dir, "train"));
    auto test = generate_sine1d(50, 0.5, 5.0, 0.0, 32, small_opts(dir, "test"));
    SplitRule rule;
    rule.kind = SplitRule::Kind::Subsample;
    rule.fraction = 0.05;
    auto pair = build_split(train, test, rule, 7);
    CHECK(pair.train.entries.size() == 50);
    CHECK(pair.test.entries.size() == 50);

    // kept entries form a subset of the pool, in original order
    std::set<std::uint64_t> pool_ids;
    for (const auto& e : train.entries) pool_ids.insert(e.id);
    std::uint64_t prev = 0;
    bool first = true;
    for (const auto& e : pair.train.entries) {
        CHECK(pool_ids.count(e.id) == 1);
        if (!first) CHECK(e.id > prev);
        prev = e.id;
        first = false;
    }

    auto pair2 = build_split(train, test, rule, 7);
    CHECK(pair2.train.entries.size() == 50);
    CHECK(pair2.train.entries[0].id == pair.train.entries[0].id);

    SplitRule bad;
    bad.kind = SplitRule::Kind::Subsample;
    bad.fraction = 0.0;
    CHECK_THROWS_AS(build_split(train, test, bad, 1), config_error);
}

TEST_CASE("spurious split pairs sprites with strata in train and breaks it in test") {
    const std::string dir = fresh_dir("spurious");
    GenOptions opt = small_opts(dir, "train");
    opt.num_frames = 60;
    opt.canvas = 8;
    auto train = generate_rotating_sprites(120, 0.5, 5.0, 41, opt);
    opt.split_name = "test";
    auto test = generate_rotating_sprites(200, 0.5, 5.0, 42, opt);

    SplitRule rule;
    rule.kind = SplitRule::Kind::Spurious;
    auto pair = build_split(train, test, rule, 5);

    // train: sprite id equals the frequency stratum, colored channels
    for (const auto& e : pair.train.entries) {
        const double x = (e.spec.freq_hz - 0.5) / 4.5 * 10.0;
        const int stratum = std::min(9, static_cast<int>(x));
        CHECK(e.spec.sprite_id == stratum);
        CHECK(e.spec.color_id == e.spec.sprite_id);
        CHECK(e.spec.channels == 3);
    }
    CHECK_NOTHROW(verify_manifest(pair.train));

    // test: sprite assignment independent of the stratum (chi-square)
    std::vector<std::vector<std::size_t>> table(10, std::vector<std::size_t>(10, 0));
    for (const auto& e : pair.test.entries) {
        const double x = (e.spec.freq_hz - 0.5) / 4.5 * 10.0;
        const int stratum = std::min(9, static_cast<int>(x));
        table[static_cast<std::size_t>(e.spec.sprite_id)][static_cast<std::size_t>(stratum)] += 1;
    }
    CHECK(testutil::chi_square_independence_p(table) > 0.05);

    // split file sets never intersect
    std::set<std::string> train_files, test_files;
    for (const auto& e : pair.train.entries) train_files.insert(e.file);
    for (const auto& e : pair.test.entries) test_files.insert(e.file);
    for (const auto& f : train_files) CHECK(test_files.count(f) == 0);
}
