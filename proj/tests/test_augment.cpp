#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "simper/augment.hpp"
#include "simper/clip.hpp"
#include "simper/signal.hpp"

using namespace simper;

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// 1-D sinusoid as a 1x1x1-canvas clip.
Clip sine_clip(double freq_hz, double fs, std::size_t frames, double phase = 0.3) {
    Clip c;
    c.frames = frames;
    c.sample_rate_hz = fs;
    c.data.resize(frames);
    for (std::size_t t = 0; t < frames; ++t)
        c.data[t] = std::sin(2.0 * kPi * freq_hz * static_cast<double>(t) / fs + phase);
    return c;
}

// Spatial sinusoid clip: every pixel oscillates at freq_hz with a per-pixel
// phase, so crops keep the temporal frequency.
Clip spatial_sine_clip(double freq_hz, double fs, std::size_t frames, std::size_t hw) {
    Clip c;
    c.frames = frames;
    c.height = c.width = hw;
    c.sample_rate_hz = fs;
    c.data.resize(frames * hw * hw);
    for (std::size_t t = 0; t < frames; ++t)
        for (std::size_t y = 0; y < hw; ++y)
            for (std::size_t x = 0; x < hw; ++x)
                c.at(t, 0, y, x) = std::sin(2.0 * kPi * freq_hz * static_cast<double>(t) / fs +
                                            0.4 * static_cast<double>(y) + 0.7 * static_cast<double>(x));
    return c;
}

double clip_dominant_freq(const Clip& c) { return dominant_frequency(c.max_variance_series()); }

}  // namespace

TEST_CASE("variant views: determinism, ordering, range") {
    Clip x = sine_clip(1.0, 30.0, 150);
    SpeedAugConfig cfg;
    cfg.target_len = 70;

    auto a = variant_views(x, cfg, 42);
    auto b = variant_views(x, cfg, 42);
    CHECK(a.speeds == b.speeds);
    for (std::size_t i = 0; i < a.views.size(); ++i) CHECK(a.views[i].data == b.views[i].data);

    auto c = variant_views(x, cfg, 43);
    CHECK(a.speeds != c.speeds);

    REQUIRE(a.speeds.size() == 10);
    for (std::size_t i = 1; i < a.speeds.size(); ++i) CHECK(a.speeds[i] > a.speeds[i - 1]);
    for (double s : a.speeds) {
        CHECK(s >= cfg.s_min);
        CHECK(s < cfg.s_max);
    }
    for (const auto& v : a.views) CHECK(v.frames == 70);
}

TEST_CASE("variant views obey the frequency scaling law") {
    Clip x = sine_clip(1.0, 30.0, 150);
    auto vs = variant_views_fixed(x, {0.5, 1.0, 2.0}, 75);
    for (std::size_t i = 0; i < 3; ++i) {
        const double bin = 30.0 / 75.0;
        CHECK_THAT(clip_dominant_freq(vs.views[i]),
                   Catch::Matchers::WithinAbs(vs.speeds[i] * 1.0, bin));
    }
    // degenerate near-tie stays strictly increasing after sorting
    auto tie = variant_views_fixed(x, {1.0 + 1e-9, 1.0}, 75);
    CHECK(tie.speeds[0] < tie.speeds[1]);
}

TEST_CASE("variant views validate lengths and Nyquist") {
    Clip x = sine_clip(1.0, 30.0, 100);
    SpeedAugConfig cfg;
    cfg.target_len = 70;  // 70 * 2.0 > 100
    CHECK_THROWS_AS(variant_views(x, cfg, 1), insufficient_length_error);
    cfg.target_len = 40;
    CHECK_THROWS_AS(variant_views(x, cfg, 1, 10.0), aliasing_error);  // 2.0 * 10 >= 15
}

TEST_CASE("invariant view: all-zero config is the identity prefix") {
    Clip x = spatial_sine_clip(1.0, 30.0, 150, 6);
    InvariantAugConfig cfg;
    cfg.p_reverse = 0.0;
    cfg.max_delay = 0;
    cfg.noise_sigma = 0.0;
    cfg.brightness_jitter = 0.0;
    cfg.crop_lo = cfg.crop_hi = 1.0;
    cfg.target_len = 64;
    Clip v = invariant_view(x, cfg, 7);
    REQUIRE(v.frames == 64);
    for (std::size_t i = 0; i < v.data.size(); ++i) CHECK(v.data[i] == x.data[i]);
}

TEST_CASE("invariant view preserves the dominant frequency") {
    Clip x = spatial_sine_clip(2.0, 30.0, 150, 6);
    const double base = clip_dominant_freq(x);

    InvariantAugConfig cfg;
    cfg.target_len = 64;
    cfg.max_delay = 6;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        Clip v = invariant_view(x, cfg, seed);
        REQUIRE(v.frames == 64);
        const double bin = 30.0 / 64.0;
        CHECK_THAT(clip_dominant_freq(v), Catch::Matchers::WithinAbs(base, bin + 0.1));
    }
}

TEST_CASE("reverse leaves the normalized PSD unchanged") {
    Clip x = sine_clip(2.0, 30.0, 150);
    InvariantAugConfig cfg;
    cfg.p_reverse = 1.0;
    cfg.max_delay = 0;
    cfg.noise_sigma = 0.0;
    cfg.brightness_jitter = 0.0;
    cfg.crop_lo = cfg.crop_hi = 1.0;
    cfg.target_len = 150;
    Clip v = invariant_view(x, cfg, 3);

    auto orig = normalize_psd(psd(x.pixel_series(0, 0, 0)));
    auto revd = normalize_psd(psd(v.pixel_series(0, 0, 0)));
    for (std::size_t k = 0; k < orig.size(); ++k)
        CHECK_THAT(orig[k], Catch::Matchers::WithinAbs(revd[k], 1e-9));
}

TEST_CASE("invariant view needs enough frames") {
    Clip x = sine_clip(1.0, 30.0, 60);
    InvariantAugConfig cfg;
    cfg.target_len = 58;
    cfg.max_delay = 6;
    CHECK_THROWS_AS(invariant_view(x, cfg, 1), insufficient_length_error);
}

TEST_CASE("make_training_views pairs share speeds and frequency content") {
    Clip x = spatial_sine_clip(1.2, 30.0, 150, 4);
    SpeedAugConfig sp;
    sp.num_views = 4;
    sp.target_len = 70;
    InvariantAugConfig inv;
    inv.target_len = 64;
    inv.max_delay = 6;

    auto tv = make_training_views(x, sp, inv, 9, 0, 0);
    REQUIRE(tv.set_a.size() == 4);
    REQUIRE(tv.set_b.size() == 4);
    const double bin = 30.0 / 64.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const double fa = clip_dominant_freq(tv.set_a[i]);
        const double fb = clip_dominant_freq(tv.set_b[i]);
        CHECK_THAT(fa, Catch::Matchers::WithinAbs(fb, bin + 0.1));
        CHECK_THAT(fa, Catch::Matchers::WithinAbs(tv.base.speeds[i] * 1.2, bin + 0.1));
    }

    // with all augmentation knobs off, the two sets coincide
    InvariantAugConfig off;
    off.p_reverse = 0.0;
    off.max_delay = 0;
    off.noise_sigma = 0.0;
    off.brightness_jitter = 0.0;
    off.crop_lo = off.crop_hi = 1.0;
    off.target_len = 64;
    auto tv2 = make_training_views(x, sp, off, 9, 0, 0);
    for (std::size_t i = 0; i < 4; ++i) CHECK(tv2.set_a[i].data == tv2.set_b[i].data);

    // bit-identical under the same seeds
    auto tv3 = make_training_views(x, sp, inv, 9, 0, 0);
    CHECK(tv.base.speeds == tv3.base.speeds);
    for (std::size_t i = 0; i < 4; ++i) CHECK(tv.set_a[i].data == tv3.set_a[i].data);
}
