#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "simper/errors.hpp"
#include "simper/signal.hpp"

namespace simper {

// A frame sequence: [frames][channels][height][width], row-major doubles.
// 1-D series are carried as 1x1x1 canvases so augmentation and encoding code
// paths are shared.
struct Clip {
    std::size_t frames = 0;
    std::size_t channels = 1;
    std::size_t height = 1;
    std::size_t width = 1;
    double sample_rate_hz = 30.0;
    std::vector<double> data;

    std::size_t frame_dim() const { return channels * height * width; }

    double& at(std::size_t t, std::size_t c, std::size_t y, std::size_t x) {
        return data[((t * channels + c) * height + y) * width + x];
    }
    double at(std::size_t t, std::size_t c, std::size_t y, std::size_t x) const {
        return data[((t * channels + c) * height + y) * width + x];
    }

    RealSeries pixel_series(std::size_t c, std::size_t y, std::size_t x) const {
        RealSeries s;
        s.sample_rate_hz = sample_rate_hz;
        s.values.resize(frames);
        for (std::size_t t = 0; t < frames; ++t) s.values[t] = at(t, c, y, x);
        return s;
    }

    // Pixel index (c,y,x) with maximal temporal variance; used for tracing
    // the rotation frequency of rendered samples.
    RealSeries max_variance_series() const {
        const std::size_t d = frame_dim();
        std::size_t best = 0;
        double best_var = -1.0;
        for (std::size_t p = 0; p < d; ++p) {
            double m = 0.0, ss = 0.0;
            for (std::size_t t = 0; t < frames; ++t) m += data[t * d + p];
            m /= static_cast<double>(frames);
            for (std::size_t t = 0; t < frames; ++t) {
                const double dev = data[t * d + p] - m;
                ss += dev * dev;
            }
            if (ss > best_var) {
                best_var = ss;
                best = p;
            }
        }
        RealSeries s;
        s.sample_rate_hz = sample_rate_hz;
        s.values.resize(frames);
        for (std::size_t t = 0; t < frames; ++t) s.values[t] = data[t * d + best];
        return s;
    }
};

// Sample blobs are raw little-endian 32-bit floats in clip layout order;
// geometry lives in the dataset manifest.
inline void save_clip_f32(const std::string& path, const Clip& clip) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    for (double v : clip.data) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        unsigned char b[4] = {static_cast<unsigned char>(bits & 0xFF),
                              static_cast<unsigned char>((bits >> 8) & 0xFF),
                              static_cast<unsigned char>((bits >> 16) & 0xFF),
                              static_cast<unsigned char>((bits >> 24) & 0xFF)};
        out.write(reinterpret_cast<const char*>(b), 4);
    }
    if (!out) throw io_error("short write to " + path);
}

inline Clip load_clip_f32(const std::string& path, std::size_t frames, std::size_t channels,
                          std::size_t height, std::size_t width, double sample_rate_hz) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read " + path);
    Clip clip;
    clip.frames = frames;
    clip.channels = channels;
    clip.height = height;
    clip.width = width;
    clip.sample_rate_hz = sample_rate_hz;
    clip.data.resize(frames * channels * height * width);
    for (double& v : clip.data) {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        if (!in) throw io_error("short read from " + path);
        std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                             (static_cast<std::uint32_t>(b[2]) << 16) |
                             (static_cast<std::uint32_t>(b[3]) << 24);
        float f;
        std::memcpy(&f, &bits, 4);
        v = static_cast<double>(f);
    }
    return clip;
}

inline std::uint64_t clip_file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read " + path);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001B3ULL;
        }
        if (!in) break;
    }
    return h;
}

}  // namespace simper
