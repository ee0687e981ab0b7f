#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "simper/clip.hpp"
#include "simper/errors.hpp"
#include "simper/rng.hpp"
#include "simper/signal.hpp"

namespace simper {

// Periodicity-variant (speed) augmentation settings. Defaults follow the
// source regime: speeds in [0.5, 2], M = 10 views.
struct SpeedAugConfig {
    double s_min = 0.5;
    double s_max = 2.0;
    std::size_t num_views = 10;
    std::size_t target_len = 70;

    void validate(std::size_t raw_len) const {
        if (!(s_min > 0.0 && s_min < s_max)) throw config_error("augment: need 0 < s_min < s_max");
        if (num_views < 2) throw config_error("augment: need at least 2 variant views");
        if (static_cast<double>(target_len) * s_max > static_cast<double>(raw_len))
            throw insufficient_length_error("augment: target_len*s_max exceeds raw length " +
                                            std::to_string(raw_len));
    }
};

// The M speed-augmented views of one sample plus their pseudo speed labels.
struct VariantViewSet {
    std::vector<Clip> views;
    std::vector<double> speeds;  // strictly increasing
};

// Periodicity-invariant augmentation settings (delay, reverse, crop-resize,
// brightness, pixel noise). target_len is the emitted view length.
struct InvariantAugConfig {
    double p_reverse = 0.5;
    std::size_t max_delay = 6;
    double noise_sigma = 0.02;
    double brightness_jitter = 0.1;
    double crop_lo = 0.7;
    double crop_hi = 1.0;
    std::size_t target_len = 64;

    void validate(std::size_t view_len) const {
        if (p_reverse < 0.0 || p_reverse > 1.0) throw config_error("augment: p_reverse outside [0,1]");
        if (noise_sigma < 0.0 || brightness_jitter < 0.0)
            throw config_error("augment: negative jitter magnitude");
        if (!(crop_lo > 0.0 && crop_lo <= crop_hi && crop_hi <= 1.0))
            throw config_error("augment: crop range must satisfy 0 < lo <= hi <= 1");
        if (max_delay + target_len > view_len)
            throw insufficient_length_error("augment: max_delay + target_len exceeds view length " +
                                            std::to_string(view_len));
    }
};

namespace augdetail {

inline Clip resample_clip(const Clip& x, double speed, std::size_t out_len,
                          std::optional<double> f_max) {
    const std::size_t n = x.frames;
    if (static_cast<double>(out_len) * speed > static_cast<double>(n) ||
        static_cast<double>(out_len - 1) * speed > static_cast<double>(n - 1))
        throw insufficient_length_error("resample: clip too short for out_len " +
                                        std::to_string(out_len) + " at speed " + std::to_string(speed));
    if (f_max && speed * (*f_max) >= x.sample_rate_hz / 2.0)
        throw aliasing_error("resample: speed pushes content past Nyquist");
    Clip out;
    out.frames = out_len;
    out.channels = x.channels;
    out.height = x.height;
    out.width = x.width;
    out.sample_rate_hz = x.sample_rate_hz;
    const std::size_t d = x.frame_dim();
    out.data.resize(out_len * d);
    for (std::size_t i = 0; i < out_len; ++i) {
        const double pos = static_cast<double>(i) * speed;
        const std::size_t lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        const double* a = x.data.data() + lo * d;
        double* o = out.data.data() + i * d;
        if (frac == 0.0) {
            std::copy(a, a + d, o);
        } else {
            const double* b = x.data.data() + std::min(lo + 1, n - 1) * d;
            for (std::size_t p = 0; p < d; ++p) o[p] = (1.0 - frac) * a[p] + frac * b[p];
        }
    }
    return out;
}

}  // namespace augdetail

// Draw M speeds stratified-uniform over [s_min, s_max] (one per equal-width
// stratum, jittered inside it) and resample the clip at each. The strata keep
// the speeds strictly increasing and cover the range even for small M.
inline VariantViewSet variant_views(const Clip& x, const SpeedAugConfig& cfg, std::uint64_t rng_seed,
                                    std::optional<double> f_max = std::nullopt) {
    cfg.validate(x.frames);
    Rng rng(rng_seed);
    const double width = (cfg.s_max - cfg.s_min) / static_cast<double>(cfg.num_views);
    VariantViewSet out;
    out.speeds.resize(cfg.num_views);
    for (std::size_t i = 0; i < cfg.num_views; ++i)
        out.speeds[i] = cfg.s_min + width * (static_cast<double>(i) + rng.uniform01());
    out.views.reserve(cfg.num_views);
    for (double s : out.speeds) out.views.push_back(augdetail::resample_clip(x, s, cfg.target_len, f_max));
    return out;
}

// Test hook: build the view set from caller-chosen speeds.
inline VariantViewSet variant_views_fixed(const Clip& x, std::vector<double> speeds,
                                          std::size_t target_len,
                                          std::optional<double> f_max = std::nullopt) {
    std::vector<double> sorted = speeds;
    std::sort(sorted.begin(), sorted.end());
    VariantViewSet out;
    out.speeds = std::move(sorted);
    for (double s : out.speeds) out.views.push_back(augdetail::resample_clip(x, s, target_len, f_max));
    return out;
}

// One invariant view. Draw order is fixed (delay, reverse, crop scale, crop
// offsets, brightness, noise) so a seed identifies the view exactly.
inline Clip invariant_view(const Clip& v, const InvariantAugConfig& cfg, std::uint64_t rng_seed) {
    cfg.validate(v.frames);
    Rng rng(rng_seed);

    const std::size_t delay = static_cast<std::size_t>(rng.uniform_int(cfg.max_delay + 1));
    const bool reverse = rng.uniform01() < cfg.p_reverse;
    const double scale = rng.uniform(cfg.crop_lo, cfg.crop_hi);
    const std::size_t ch = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                        std::llround(scale * static_cast<double>(v.height))));
    const std::size_t cw = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                        std::llround(scale * static_cast<double>(v.width))));
    const std::size_t oy = static_cast<std::size_t>(rng.uniform_int(v.height - ch + 1));
    const std::size_t ox = static_cast<std::size_t>(rng.uniform_int(v.width - cw + 1));
    const double brightness = cfg.brightness_jitter > 0.0
                                  ? rng.uniform(-cfg.brightness_jitter, cfg.brightness_jitter)
                                  : 0.0;

    Clip out;
    out.frames = cfg.target_len;
    out.channels = v.channels;
    out.height = v.height;
    out.width = v.width;
    out.sample_rate_hz = v.sample_rate_hz;
    out.data.resize(out.frames * out.frame_dim());

    for (std::size_t t = 0; t < out.frames; ++t) {
        const std::size_t src_t = delay + (reverse ? cfg.target_len - 1 - t : t);
        for (std::size_t c = 0; c < out.channels; ++c)
            for (std::size_t y = 0; y < out.height; ++y) {
                const std::size_t sy = oy + std::min(ch - 1, (y * ch + ch / 2) / out.height);
                for (std::size_t x = 0; x < out.width; ++x) {
                    const std::size_t sx = ox + std::min(cw - 1, (x * cw + cw / 2) / out.width);
                    out.at(t, c, y, x) = v.at(src_t, c, sy, sx) + brightness;
                }
            }
    }
    if (cfg.noise_sigma > 0.0)
        for (double& p : out.data) p += cfg.noise_sigma * rng.normal();
    return out;
}

// Algorithm step: one variant draw, then two independent invariant passes
// over each view. The pairs share their speed labels by construction.
struct TrainingViews {
    VariantViewSet base;
    std::vector<Clip> set_a;
    std::vector<Clip> set_b;
};

inline TrainingViews make_training_views(const Clip& x, const SpeedAugConfig& speed_cfg,
                                         const InvariantAugConfig& inv_cfg, std::uint64_t global_seed,
                                         std::uint64_t sample_id, std::uint64_t epoch,
                                         std::optional<double> f_max = std::nullopt) {
    TrainingViews tv;
    // Stream tags: the variant draw uses 2^32, invariant views use 2*i (+1
    // for set B); all within one (global, sample, epoch) family.
    tv.base = variant_views(
        x, speed_cfg, Rng::derive_key({global_seed, sample_id, epoch, 0x100000000ULL}), f_max);
    tv.set_a.reserve(tv.base.views.size());
    tv.set_b.reserve(tv.base.views.size());
    for (std::size_t i = 0; i < tv.base.views.size(); ++i) {
        tv.set_a.push_back(invariant_view(
            tv.base.views[i], inv_cfg, Rng::derive_key({global_seed, sample_id, epoch, 2 * i})));
        tv.set_b.push_back(invariant_view(
            tv.base.views[i], inv_cfg, Rng::derive_key({global_seed, sample_id, epoch, 2 * i + 1})));
    }
    return tv;
}

}  // namespace simper
