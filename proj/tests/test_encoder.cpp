#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "simper/encoder.hpp"
#include "simper/gradcheck.hpp"
#include "simper/loss.hpp"
#include "simper/rng.hpp"
#include "simper/signal.hpp"
#include "simper/similarity.hpp"

using namespace simper;

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// A bright dot orbiting the canvas center: luminance of any fixed region is
// periodic at the orbit frequency.
Clip orbiting_dot_clip(double freq_hz, double fs, std::size_t frames, std::size_t hw) {
    Clip c;
    c.frames = frames;
    c.height = c.width = hw;
    c.sample_rate_hz = fs;
    c.data.assign(frames * hw * hw, 0.0);
    const double r = static_cast<double>(hw) / 3.0;
    const double mid = static_cast<double>(hw - 1) / 2.0;
    for (std::size_t t = 0; t < frames; ++t) {
        const double ang = 2.0 * kPi * freq_hz * static_cast<double>(t) / fs;
        const double cy = mid + r * std::sin(ang);
        const double cx = mid + r * std::cos(ang);
        for (std::size_t y = 0; y < hw; ++y)
            for (std::size_t x = 0; x < hw; ++x) {
                const double d2 = (static_cast<double>(y) - cy) * (static_cast<double>(y) - cy) +
                                  (static_cast<double>(x) - cx) * (static_cast<double>(x) - cx);
                c.at(t, 0, y, x) = std::exp(-d2 / 2.0);
            }
    }
    return c;
}

Clip random_clip(std::size_t frames, std::size_t hw, Rng& rng) {
    Clip c;
    c.frames = frames;
    c.height = c.width = hw;
    c.sample_rate_hz = 30.0;
    c.data.resize(frames * hw * hw);
    for (double& v : c.data) v = rng.uniform(0.0, 1.0);
    return c;
}

}  // namespace

TEST_CASE("init_params is deterministic, bounded, seed-sensitive") {
    EncoderConfig cfg;
    cfg.frame_input_dim = 16;
    cfg.hidden_dims = {8};
    cfg.feature_channels = 3;
    cfg.temporal_context = 3;

    auto p1 = init_params(cfg, 5);
    auto p2 = init_params(cfg, 5);
    auto p3 = init_params(cfg, 6);
    CHECK(p1.weights[0].values() == p2.weights[0].values());
    CHECK(p1.weights[0].values() != p3.weights[0].values());

    const double bound0 = std::sqrt(6.0 / (48.0 + 8.0));
    for (double w : p1.weights[0].values()) CHECK(std::fabs(w) <= bound0);
    for (double b : p1.biases[0].values()) CHECK(b == 0.0);
}

TEST_CASE("encode keeps the temporal length for k in {1,3,5}") {
    Rng rng(2);
    Clip x = random_clip(20, 4, rng);
    for (std::size_t k : {1u, 3u, 5u}) {
        EncoderConfig cfg;
        cfg.frame_input_dim = 16;
        cfg.hidden_dims = {6};
        cfg.feature_channels = 2;
        cfg.temporal_context = k;
        auto params = init_params(cfg, 1);
        auto f = encode(x, params, cfg);
        CHECK(f.length() == 20);
        CHECK(f.channels() == 2);
        CHECK(f.sample_rate_hz == 30.0);
    }
}

TEST_CASE("output centering zeroes the per-channel temporal mean") {
    Rng rng(3);
    Clip x = random_clip(24, 4, rng);
    EncoderConfig cfg;
    cfg.frame_input_dim = 16;
    cfg.hidden_dims = {6};
    cfg.feature_channels = 3;
    auto params = init_params(cfg, 7);
    auto f = encode(x, params, cfg);
    for (std::size_t c = 0; c < 3; ++c) {
        double m = 0.0;
        for (std::size_t t = 0; t < 24; ++t) m += f.values.values()[t * 3 + c];
        CHECK_THAT(m / 24.0, Catch::Matchers::WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("zero-initialized final layer exercises the degenerate path") {
    Rng rng(4);
    Clip x = random_clip(16, 4, rng);
    EncoderConfig cfg;
    cfg.frame_input_dim = 16;
    cfg.hidden_dims = {6};
    cfg.feature_channels = 2;
    auto params = init_params(cfg, 9);
    std::fill(params.weights.back().mutable_values().begin(),
              params.weights.back().mutable_values().end(), 0.0);
    auto f = encode(x, params, cfg);
    for (double v : f.values.values()) CHECK(v == 0.0);
    CHECK(feature_degenerate(f));
}

TEST_CASE("windowed MLP over an off-center mask recovers the orbit frequency") {
    const double freq = 1.0, fs = 30.0;
    Clip x = orbiting_dot_clip(freq, fs, 150, 8);

    // k=1, one hidden unit whose weights average the left half of the canvas,
    // scaled small so tanh stays near-linear; output layer passes it through.
    EncoderConfig cfg;
    cfg.frame_input_dim = 64;
    cfg.hidden_dims = {1};
    cfg.feature_channels = 1;
    cfg.temporal_context = 1;
    auto params = init_params(cfg, 0);
    auto& w0 = params.weights[0].mutable_values();
    std::fill(w0.begin(), w0.end(), 0.0);
    for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t xp = 0; xp < 4; ++xp) w0[y * 8 + xp] = 0.05 / 32.0;
    params.weights[1].mutable_values()[0] = 1.0;

    auto f = encode(x, params, cfg);
    RealSeries z{std::vector<double>(150), fs};
    for (std::size_t t = 0; t < 150; ++t) z.values[t] = f.values.values()[t];
    CHECK_THAT(dominant_frequency(z), Catch::Matchers::WithinAbs(freq, fs / 150.0 + 0.1));
}

TEST_CASE("temporal equivariance of the window design") {
    Rng rng(5);
    Clip x = random_clip(30, 3, rng);
    const std::size_t d = 4;
    Clip delayed;
    delayed.frames = x.frames - d;
    delayed.height = x.height;
    delayed.width = x.width;
    delayed.sample_rate_hz = x.sample_rate_hz;
    delayed.data.assign(x.data.begin() + d * x.frame_dim(), x.data.end());

    EncoderConfig cfg;
    cfg.frame_input_dim = 9;
    cfg.hidden_dims = {5};
    cfg.feature_channels = 2;
    cfg.temporal_context = 3;
    cfg.center_output = false;  // centering mixes in the (different) means
    auto params = init_params(cfg, 11);

    auto fx = encode(x, params, cfg);
    auto fd = encode(delayed, params, cfg);
    // interior steps: skip the replicated edges of both series
    for (std::size_t t = 1; t + 1 < delayed.frames; ++t)
        for (std::size_t c = 0; c < 2; ++c)
            CHECK_THAT(fd.values.values()[t * 2 + c],
                       Catch::Matchers::WithinAbs(fx.values.values()[(t + d) * 2 + c], 1e-9));
}

TEST_CASE("dimension mismatch is rejected") {
    Rng rng(6);
    Clip x = random_clip(10, 4, rng);
    EncoderConfig cfg;
    cfg.frame_input_dim = 9;  // clip is 16
    cfg.hidden_dims = {4};
    auto params = init_params(cfg, 1);
    CHECK_THROWS_AS(encode(x, params, cfg), dimension_error);
}

TEST_CASE("gradients through encode -> similarity -> loss on a toy input") {
    Rng rng(7);
    Clip x = random_clip(8, 3, rng);
    EncoderConfig cfg;
    cfg.frame_input_dim = 9;
    cfg.hidden_dims = {5};
    cfg.feature_channels = 2;
    cfg.temporal_context = 3;
    auto params = init_params(cfg, 3);
    auto leaves = all_params(params);

    Clip x2 = random_clip(8, 3, rng);
    LossConfig lcfg;
    lcfg.similarity = SimilarityKind::NPsdCos;
    std::vector<double> speeds{1.0, 1.5};

    auto f = [&]() {
        std::vector<FeatureSeries> a{encode(x, params, cfg), encode(x2, params, cfg)};
        std::vector<FeatureSeries> b{encode(x2, params, cfg), encode(x, params, cfg)};
        return simper_loss(a, b, speeds, lcfg);
    };
    CHECK(finite_diff_check(f, leaves, 1e-5) < 1e-4);
}
