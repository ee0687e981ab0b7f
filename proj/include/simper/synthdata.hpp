#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "simper/clip.hpp"
#include "simper/detmath.hpp"
#include "simper/errors.hpp"
#include "simper/rng.hpp"

namespace simper {

// One synthetic periodic sample: a procedural sprite rotating about the
// canvas center at freq_hz, or a 1-D sinusoid when canvas is 1x1.
struct SampleSpec {
    double freq_hz = 1.0;
    double phase = 0.0;  // radians in [0, 2*pi)
    int sprite_id = 0;
    int color_id = 0;
    double fs = 30.0;
    std::size_t num_frames = 150;
    std::size_t canvas_h = 16;
    std::size_t canvas_w = 16;
    std::size_t channels = 1;
};

struct ManifestEntry {
    std::uint64_t id = 0;
    std::string file;  // relative to the dataset directory
    SampleSpec spec;
    std::string checksum;  // fnv1a64 of the blob, hex
};

struct DatasetManifest {
    std::string split_name = "train";
    std::string kind = "rotating";  // rotating | sine1d
    std::string generator_version = "1";
    std::uint64_t global_seed = 0;
    double freq_lo = 0.5;
    double freq_hi = 5.0;
    double noise_sigma = 0.0;
    bool low_snr = false;
    std::vector<ManifestEntry> entries;
    std::string dir;  // runtime only, not serialized
};

namespace sprites {

struct Disk {
    double cx, cy, r;
};
struct Capsule {
    double x1, y1, x2, y2, r;
};

struct Sprite {
    std::vector<Disk> disks;
    std::vector<Capsule> capsules;
};

inline bool contains(const Sprite& s, double px, double py) {
    for (const auto& d : s.disks) {
        const double dx = px - d.cx, dy = py - d.cy;
        if (dx * dx + dy * dy <= d.r * d.r) return true;
    }
    for (const auto& c : s.capsules) {
        const double vx = c.x2 - c.x1, vy = c.y2 - c.y1;
        const double wx = px - c.x1, wy = py - c.y1;
        const double len2 = vx * vx + vy * vy;
        double t = len2 > 0.0 ? (wx * vx + wy * vy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double dx = wx - t * vx, dy = wy - t * vy;
        if (dx * dx + dy * dy <= c.r * c.r) return true;
    }
    return false;
}

// Ten appearance classes in sprite-local coordinates (unit circle). Every
// layout is rotationally asymmetric so a fixed pixel sees exactly one pass
// per revolution; that keeps the fundamental at freq_hz dominant.
inline const Sprite& sprite(int id) {
    static const std::vector<Sprite> table = [] {
        std::vector<Sprite> t(10);
        // 0: lollipop arm
        t[0].capsules.push_back({0.05, 0.0, 0.62, 0.0, 0.15});
        t[0].disks.push_back({0.62, 0.0, 0.22});
        // 1: off-center dot
        t[1].disks.push_back({0.5, 0.18, 0.26});
        // 2: L with a heavy head
        t[2].capsules.push_back({0.0, 0.0, 0.58, 0.0, 0.14});
        t[2].capsules.push_back({0.0, 0.0, 0.0, 0.42, 0.14});
        t[2].disks.push_back({0.58, 0.0, 0.18});
        // 3: three unequal arms
        t[3].capsules.push_back({0.0, 0.0, 0.68, 0.0, 0.13});
        t[3].capsules.push_back({0.0, 0.0, 0.0, 0.4, 0.13});
        t[3].capsules.push_back({0.0, 0.0, -0.25, 0.0, 0.13});
        // 4: big and small dots
        t[4].disks.push_back({0.55, 0.1, 0.2});
        t[4].disks.push_back({0.1, -0.45, 0.14});
        // 5: hook
        t[5].capsules.push_back({0.0, -0.3, 0.5, -0.3, 0.13});
        t[5].capsules.push_back({0.5, -0.3, 0.5, 0.35, 0.13});
        t[5].disks.push_back({0.5, 0.35, 0.17});
        // 6: shrinking dot chain
        t[6].disks.push_back({0.2, 0.15, 0.22});
        t[6].disks.push_back({0.5, 0.28, 0.15});
        t[6].disks.push_back({0.72, 0.38, 0.1});
        // 7: slanted bar with a satellite
        t[7].capsules.push_back({-0.15, 0.0, 0.55, 0.25, 0.15});
        t[7].disks.push_back({0.1, -0.5, 0.16});
        // 8: unequal blob pair
        t[8].disks.push_back({0.35, 0.0, 0.3});
        t[8].disks.push_back({-0.3, -0.25, 0.12});
        // 9: zigzag with a head
        t[9].capsules.push_back({-0.1, -0.2, 0.3, 0.1, 0.12});
        t[9].capsules.push_back({0.3, 0.1, 0.65, -0.15, 0.12});
        t[9].disks.push_back({0.65, -0.15, 0.15});
        return t;
    }();
    return table[((id % 10) + 10) % 10];
}

// Distinct tints for the spurious-correlation coloring.
inline const double* color_tint(int color_id) {
    static const double table[10][3] = {
        {1.0, 0.2, 0.2}, {0.2, 1.0, 0.2}, {0.2, 0.2, 1.0}, {1.0, 1.0, 0.25}, {1.0, 0.25, 1.0},
        {0.25, 1.0, 1.0}, {1.0, 0.6, 0.2}, {0.6, 0.3, 1.0}, {0.5, 1.0, 0.5}, {0.9, 0.9, 0.9}};
    return table[((color_id % 10) + 10) % 10];
}

}  // namespace sprites

// Deterministic rasterization: the sprite's vector description is rotated
// per frame, pixels are tested with 2x2 supersampling, and the integer hit
// count (0..4) becomes the coverage. Angles are handled in turns so the same
// bits come out on any platform.
inline Clip render_rotating_sample(const SampleSpec& spec) {
    if (spec.freq_hz <= 0.0 || spec.freq_hz >= spec.fs / 2.0)
        throw aliasing_error("render: freq " + std::to_string(spec.freq_hz) + " violates Nyquist at fs " +
                             std::to_string(spec.fs));
    Clip clip;
    clip.frames = spec.num_frames;
    clip.channels = spec.channels;
    clip.height = spec.canvas_h;
    clip.width = spec.canvas_w;
    clip.sample_rate_hz = spec.fs;
    clip.data.assign(clip.frames * clip.frame_dim(), 0.0);

    const auto& sp = sprites::sprite(spec.sprite_id);
    const double* tint = sprites::color_tint(spec.color_id);
    const double phase_turns = spec.phase / (2.0 * 3.14159265358979323846264338327950288);
    const double half_w = static_cast<double>(spec.canvas_w) / 2.0;
    const double half_h = static_cast<double>(spec.canvas_h) / 2.0;
    const double scale = 1.0 / std::min(half_w, half_h);
    static const double offs[2] = {0.25, 0.75};

    for (std::size_t t = 0; t < clip.frames; ++t) {
        double turns = spec.freq_hz * static_cast<double>(t) / spec.fs + phase_turns;
        turns -= std::floor(turns);
        const double c = detmath::cospi(2.0 * turns);
        const double s = detmath::sinpi(2.0 * turns);
        for (std::size_t y = 0; y < clip.height; ++y)
            for (std::size_t x = 0; x < clip.width; ++x) {
                int hits = 0;
                for (double oy : offs)
                    for (double ox : offs) {
                        const double px = (static_cast<double>(x) + ox - half_w) * scale;
                        const double py = (static_cast<double>(y) + oy - half_h) * scale;
                        // rotate the sample point by -theta into sprite space
                        const double lx = c * px + s * py;
                        const double ly = -s * px + c * py;
                        if (sprites::contains(sp, lx, ly)) ++hits;
                    }
                if (hits == 0) continue;
                const double v = static_cast<double>(hits) / 4.0;
                if (spec.channels == 1) {
                    clip.at(t, 0, y, x) = v;
                } else {
                    for (std::size_t ch = 0; ch < spec.channels; ++ch)
                        clip.at(t, ch, y, x) = v * tint[ch % 3];
                }
            }
    }
    return clip;
}

inline Clip render_sine1d_sample(const SampleSpec& spec, double noise_sigma, std::uint64_t noise_key) {
    if (spec.freq_hz <= 0.0 || spec.freq_hz >= spec.fs / 2.0)
        throw aliasing_error("render: freq violates Nyquist");
    Clip clip;
    clip.frames = spec.num_frames;
    clip.sample_rate_hz = spec.fs;
    clip.data.resize(spec.num_frames);
    const double phase_turns = spec.phase / (2.0 * 3.14159265358979323846264338327950288);
    Rng rng(noise_key);
    for (std::size_t t = 0; t < clip.frames; ++t) {
        double turns = spec.freq_hz * static_cast<double>(t) / spec.fs + phase_turns;
        turns -= std::floor(turns);
        clip.data[t] = detmath::sinpi(2.0 * turns);
        if (noise_sigma > 0.0) clip.data[t] += noise_sigma * rng.normal();
    }
    return clip;
}

inline Clip render_sample(const DatasetManifest& m, const ManifestEntry& e) {
    if (m.kind == "rotating") return render_rotating_sample(e.spec);
    return render_sine1d_sample(e.spec, m.noise_sigma, Rng::derive_key({m.global_seed, e.id, 0x5E1ULL}));
}

// ---------------------------------------------------------------------------
// manifest I/O
// ---------------------------------------------------------------------------

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
    nlohmann::json j;
    j["format"] = "simper-dataset-v1";
    j["split"] = m.split_name;
    j["kind"] = m.kind;
    j["generator_version"] = m.generator_version;
    j["global_seed"] = m.global_seed;
    j["freq_lo"] = m.freq_lo;
    j["freq_hi"] = m.freq_hi;
    j["noise_sigma"] = m.noise_sigma;
    j["low_snr"] = m.low_snr;
    j["samples"] = nlohmann::json::array();
    for (const auto& e : m.entries) {
        nlohmann::json s;
        s["id"] = e.id;
        s["file"] = e.file;
        s["freq_hz"] = e.spec.freq_hz;
        s["phase"] = e.spec.phase;
        s["sprite_id"] = e.spec.sprite_id;
        s["color_id"] = e.spec.color_id;
        s["fs"] = e.spec.fs;
        s["num_frames"] = e.spec.num_frames;
        s["canvas_h"] = e.spec.canvas_h;
        s["canvas_w"] = e.spec.canvas_w;
        s["channels"] = e.spec.channels;
        s["checksum"] = e.checksum;
        j["samples"].push_back(std::move(s));
    }
    return j;
}

inline void save_manifest(const DatasetManifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write manifest " + path);
    out << manifest_to_json(m).dump(1) << "\n";
}

inline DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot read manifest " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw io_error("malformed manifest " + path + ": " + e.what());
    }
    DatasetManifest m;
    m.split_name = j.at("split").get<std::string>();
    m.kind = j.at("kind").get<std::string>();
    m.generator_version = j.at("generator_version").get<std::string>();
    m.global_seed = j.at("global_seed").get<std::uint64_t>();
    m.freq_lo = j.at("freq_lo").get<double>();
    m.freq_hi = j.at("freq_hi").get<double>();
    m.noise_sigma = j.at("noise_sigma").get<double>();
    m.low_snr = j.at("low_snr").get<bool>();
    for (const auto& s : j.at("samples")) {
        ManifestEntry e;
        e.id = s.at("id").get<std::uint64_t>();
        e.file = s.at("file").get<std::string>();
        e.spec.freq_hz = s.at("freq_hz").get<double>();
        e.spec.phase = s.at("phase").get<double>();
        e.spec.sprite_id = s.at("sprite_id").get<int>();
        e.spec.color_id = s.at("color_id").get<int>();
        e.spec.fs = s.at("fs").get<double>();
        e.spec.num_frames = s.at("num_frames").get<std::size_t>();
        e.spec.canvas_h = s.at("canvas_h").get<std::size_t>();
        e.spec.canvas_w = s.at("canvas_w").get<std::size_t>();
        e.spec.channels = s.at("channels").get<std::size_t>();
        e.checksum = s.at("checksum").get<std::string>();
        m.entries.push_back(std::move(e));
    }
    m.dir = std::filesystem::path(path).parent_path().string();
    return m;
}

inline std::string manifest_path(const DatasetManifest& m) {
    return (std::filesystem::path(m.dir) / ("manifest_" + m.split_name + ".json")).string();
}

inline std::uint64_t manifest_checksum(const DatasetManifest& m) {
    const std::string dump = manifest_to_json(m).dump();
    return fnv1a64(dump.data(), dump.size());
}

inline Clip load_sample(const DatasetManifest& m, std::size_t index) {
    const auto& e = m.entries.at(index);
    const std::string path = (std::filesystem::path(m.dir) / e.file).string();
    return load_clip_f32(path, e.spec.num_frames, e.spec.channels, e.spec.canvas_h, e.spec.canvas_w,
                         e.spec.fs);
}

// Checks the manifest invariant: every listed file exists and hashes to its
// recorded checksum.
inline void verify_manifest(const DatasetManifest& m) {
    for (const auto& e : m.entries) {
        const std::string path = (std::filesystem::path(m.dir) / e.file).string();
        if (!std::filesystem::exists(path)) throw io_error("missing sample file " + path);
        std::ostringstream os;
        os << std::hex << clip_file_checksum(path);
        if (os.str() != e.checksum)
            throw io_error("checksum mismatch for " + path + ": got " + os.str() + ", manifest says " +
                           e.checksum);
    }
}

// ---------------------------------------------------------------------------
// generators
// ---------------------------------------------------------------------------

struct GenOptions {
    std::string dir;
    std::string split_name = "train";
    double fs = 30.0;
    std::size_t num_frames = 150;
    std::size_t canvas = 16;
    std::size_t channels = 1;
};

namespace gendetail {

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
}

// Frequencies are drawn stratified-uniform: one draw per equal-width stratum,
// with the stratum order shuffled so frequency is independent of sample index
// (and therefore of the round-robin sprite assignment).
inline std::vector<double> stratified_freqs(std::size_t n, double lo, double hi, Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);
    std::vector<double> freqs(n);
    const double width = (hi - lo) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        freqs[i] = lo + width * (static_cast<double>(order[i]) + rng.uniform01());
    return freqs;
}

inline void write_entry(DatasetManifest& m, const SampleSpec& spec, std::uint64_t id) {
    ManifestEntry e;
    e.id = id;
    e.spec = spec;
    std::ostringstream name;
    name << m.split_name << "_" << id << ".f32";
    e.file = "samples/" + name.str();
    const std::string path = (std::filesystem::path(m.dir) / e.file).string();
    Clip clip = m.kind == "rotating"
                    ? render_rotating_sample(spec)
                    : render_sine1d_sample(spec, m.noise_sigma,
                                           Rng::derive_key({m.global_seed, id, 0x5E1ULL}));
    save_clip_f32(path, clip);
    e.checksum = hex64(clip_file_checksum(path));
    m.entries.push_back(std::move(e));
}

}  // namespace gendetail

inline DatasetManifest generate_rotating_sprites(std::size_t n, double freq_lo, double freq_hi,
                                                 std::uint64_t seed, const GenOptions& opt) {
    if (!(freq_lo > 0.0 && freq_lo < freq_hi && freq_hi < opt.fs / 2.0))
        throw aliasing_error("generate: frequency range must sit inside (0, fs/2)");
    std::filesystem::create_directories(std::filesystem::path(opt.dir) / "samples");
    DatasetManifest m;
    m.split_name = opt.split_name;
    m.kind = "rotating";
    m.global_seed = seed;
    m.freq_lo = freq_lo;
    m.freq_hi = freq_hi;
    m.dir = opt.dir;
    if (n == 0) {
        save_manifest(m, manifest_path(m));
        return m;
    }
    Rng rng(Rng::derive_key({seed, 0xD47AULL}));
    auto freqs = gendetail::stratified_freqs(n, freq_lo, freq_hi, rng);
    for (std::size_t i = 0; i < n; ++i) {
        SampleSpec spec;
        spec.freq_hz = freqs[i];
        spec.phase = rng.uniform(0.0, 2.0 * 3.14159265358979323846264338327950288);
        spec.sprite_id = static_cast<int>(i % 10);
        spec.color_id = 0;
        spec.fs = opt.fs;
        spec.num_frames = opt.num_frames;
        spec.canvas_h = spec.canvas_w = opt.canvas;
        spec.channels = opt.channels;
        gendetail::write_entry(m, spec, i);
    }
    save_manifest(m, manifest_path(m));
    return m;
}

inline DatasetManifest generate_sine1d(std::size_t n, double freq_lo, double freq_hi,
                                       double noise_sigma, std::uint64_t seed, const GenOptions& opt) {
    if (!(freq_lo > 0.0 && freq_lo < freq_hi && freq_hi < opt.fs / 2.0))
        throw aliasing_error("generate: frequency range must sit inside (0, fs/2)");
    if (noise_sigma < 0.0) throw config_error("generate: negative noise sigma");
    std::filesystem::create_directories(std::filesystem::path(opt.dir) / "samples");
    DatasetManifest m;
    m.split_name = opt.split_name;
    m.kind = "sine1d";
    m.global_seed = seed;
    m.freq_lo = freq_lo;
    m.freq_hi = freq_hi;
    m.noise_sigma = noise_sigma;
    m.low_snr = noise_sigma * noise_sigma > 0.5;  // unit-amplitude sine has power 1/2
    m.dir = opt.dir;
    if (n == 0) {
        save_manifest(m, manifest_path(m));
        return m;
    }
    Rng rng(Rng::derive_key({seed, 0xD47AULL}));
    auto freqs = gendetail::stratified_freqs(n, freq_lo, freq_hi, rng);
    for (std::size_t i = 0; i < n; ++i) {
        SampleSpec spec;
        spec.freq_hz = freqs[i];
        spec.phase = rng.uniform(0.0, 2.0 * 3.14159265358979323846264338327950288);
        spec.sprite_id = static_cast<int>(i % 10);
        spec.fs = opt.fs;
        spec.num_frames = opt.num_frames;
        spec.canvas_h = spec.canvas_w = 1;
        spec.channels = 1;
        gendetail::write_entry(m, spec, i);
    }
    save_manifest(m, manifest_path(m));
    return m;
}

// ---------------------------------------------------------------------------
// split construction
// ---------------------------------------------------------------------------

struct SplitRule {
    enum class Kind { Uniform, InterpolationGap, ExtrapolationGap, Spurious, Subsample };
    Kind kind = Kind::Uniform;
    double band_lo = 2.0;
    double band_hi = 3.0;
    double fraction = 1.0;
    std::size_t bindings = 10;  // spurious: number of (sprite, stratum) pairs
};

struct SplitPair {
    DatasetManifest train;
    DatasetManifest test;
};

namespace gendetail {

inline std::size_t freq_stratum(double f, double lo, double hi, std::size_t k) {
    const double x = (f - lo) / (hi - lo) * static_cast<double>(k);
    return std::min<std::size_t>(k - 1, static_cast<std::size_t>(std::max(0.0, x)));
}

// Re-render a manifest's samples as colored 3-channel clips with new sprite
// and color assignments; used by the spurious rule.
inline DatasetManifest recolor(const DatasetManifest& src, const std::string& split_name,
                               const std::vector<int>& sprite_ids) {
    DatasetManifest out = src;
    out.split_name = split_name;
    out.entries.clear();
    std::filesystem::create_directories(std::filesystem::path(src.dir) / "samples");
    for (std::size_t i = 0; i < src.entries.size(); ++i) {
        ManifestEntry e = src.entries[i];
        e.spec.sprite_id = sprite_ids[i];
        e.spec.color_id = sprite_ids[i];
        e.spec.channels = 3;
        std::ostringstream name;
        name << split_name << "_" << e.id << ".f32";
        e.file = "samples/" + name.str();
        const std::string path = (std::filesystem::path(src.dir) / e.file).string();
        save_clip_f32(path, render_rotating_sample(e.spec));
        e.checksum = hex64(clip_file_checksum(path));
        out.entries.push_back(std::move(e));
    }
    save_manifest(out, manifest_path(out));
    return out;
}

}  // namespace gendetail

inline SplitPair build_split(const DatasetManifest& pool_train, const DatasetManifest& pool_test,
                             const SplitRule& rule, std::uint64_t seed) {
    SplitPair out{pool_train, pool_test};
    switch (rule.kind) {
        case SplitRule::Kind::Uniform:
            break;
        case SplitRule::Kind::InterpolationGap:
        case SplitRule::Kind::ExtrapolationGap: {
            const double lo = rule.band_lo;
            const double hi = rule.kind == SplitRule::Kind::ExtrapolationGap ? pool_train.freq_hi + 1.0
                                                                             : rule.band_hi;
            if (!(lo >= pool_train.freq_lo && lo < hi) ||
                (rule.kind == SplitRule::Kind::InterpolationGap && hi > pool_train.freq_hi))
                throw config_error("build_split: band outside the dataset frequency range");
            out.train.entries.clear();
            for (const auto& e : pool_train.entries)
                if (e.spec.freq_hz < lo || e.spec.freq_hz > hi) out.train.entries.push_back(e);
            break;
        }
        case SplitRule::Kind::Subsample: {
            if (!(rule.fraction > 0.0 && rule.fraction <= 1.0))
                throw config_error("build_split: fraction outside (0, 1]");
            const std::size_t n = pool_train.entries.size();
            const std::size_t keep = static_cast<std::size_t>(
                std::llround(rule.fraction * static_cast<double>(n)));
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            Rng rng(Rng::derive_key({seed, 0x5B5AULL}));
            for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);
            order.resize(keep);
            std::sort(order.begin(), order.end());
            out.train.entries.clear();
            for (std::size_t i : order) out.train.entries.push_back(pool_train.entries[i]);
            break;
        }
        case SplitRule::Kind::Spurious: {
            if (pool_train.kind != "rotating")
                throw config_error("build_split: spurious rule needs rotating-sprite data");
            const std::size_t k = rule.bindings;
            std::vector<int> train_sprites, test_sprites;
            for (const auto& e : pool_train.entries)
                train_sprites.push_back(static_cast<int>(gendetail::freq_stratum(
                    e.spec.freq_hz, pool_train.freq_lo, pool_train.freq_hi, k)));
            Rng rng(Rng::derive_key({seed, 0x59C5ULL}));
            for (std::size_t i = 0; i < pool_test.entries.size(); ++i)
                test_sprites.push_back(static_cast<int>(rng.uniform_int(k)));
            out.train = gendetail::recolor(pool_train, pool_train.split_name + "_spurious",
                                           train_sprites);
            out.test = gendetail::recolor(pool_test, pool_test.split_name + "_spurious", test_sprites);
            break;
        }
    }
    if (out.train.entries.empty() || out.test.entries.empty())
        throw config_error("build_split: rule produced an empty split");
    if (rule.kind != SplitRule::Kind::Spurious) {
        save_manifest(out.train, manifest_path(out.train));
        save_manifest(out.test, manifest_path(out.test));
    }
    return out;
}

}  // namespace simper
