#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "simper/clip.hpp"
#include "simper/errors.hpp"
#include "simper/feature.hpp"
#include "simper/rng.hpp"
#include "simper/tensor.hpp"

namespace simper {

// Frame-wise MLP encoder: each output step sees a k-frame window (edge
// replicated) flattened to a vector, so the feature series keeps the input's
// temporal length. Hidden layers use tanh; the final layer is linear with a
// per-channel temporal centering that strips the DC component.
struct EncoderConfig {
    std::size_t frame_input_dim = 256;  // channels * H * W
    std::vector<std::size_t> hidden_dims = {24};
    std::size_t feature_channels = 4;
    std::size_t temporal_context = 3;  // k, odd
    bool center_output = true;

    void validate() const {
        if (temporal_context % 2 == 0) throw config_error("encoder: temporal_context must be odd");
        if (feature_channels < 1) throw config_error("encoder: need at least one feature channel");
        if (hidden_dims.empty()) throw config_error("encoder: hidden_dims must be non-empty");
        if (frame_input_dim == 0) throw config_error("encoder: frame_input_dim must be positive");
    }

    std::vector<std::size_t> layer_dims() const {
        std::vector<std::size_t> dims;
        dims.push_back(temporal_context * frame_input_dim);
        dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
        dims.push_back(feature_channels);
        return dims;
    }

    std::size_t param_count() const {
        auto dims = layer_dims();
        std::size_t n = 0;
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) n += dims[l] * dims[l + 1] + dims[l + 1];
        return n;
    }
};

struct EncoderParams {
    std::vector<Tensor> weights;  // [in x out] per layer
    std::vector<Tensor> biases;   // [1 x out] per layer
};

// Glorot-uniform weights, zero biases, deterministic under the seed.
inline EncoderParams init_params(const EncoderConfig& cfg, std::uint64_t rng_seed) {
    cfg.validate();
    Rng rng(Rng::derive_key({rng_seed, 0x1A17ULL}));
    EncoderParams p;
    auto dims = cfg.layer_dims();
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t fan_in = dims[l], fan_out = dims[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::vector<double> w(fan_in * fan_out);
        for (double& x : w) x = rng.uniform(-bound, bound);
        p.weights.push_back(Tensor::from_values({fan_in, fan_out}, std::move(w), true));
        p.biases.push_back(Tensor::zeros({1, fan_out}, true));
    }
    return p;
}

inline std::vector<Tensor> all_params(EncoderParams& p) {
    std::vector<Tensor> out;
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        out.push_back(p.weights[l]);
        out.push_back(p.biases[l]);
    }
    return out;
}

namespace encdetail {

// [T x k*frame_dim] window matrix, constant (no gradient flows into data).
inline Tensor window_matrix(const Clip& x, std::size_t k) {
    const std::size_t t_len = x.frames, d = x.frame_dim();
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
    std::vector<double> rows(t_len * k * d);
    for (std::size_t t = 0; t < t_len; ++t)
        for (std::size_t w = 0; w < k; ++w) {
            std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(w) - half;
            src = std::max<std::ptrdiff_t>(0, std::min<std::ptrdiff_t>(src, t_len - 1));
            const double* frame = x.data.data() + static_cast<std::size_t>(src) * d;
            std::copy(frame, frame + d, rows.data() + (t * k + w) * d);
        }
    return Tensor::from_values({t_len, k * d}, std::move(rows));
}

}  // namespace encdetail

inline FeatureSeries encode(const Clip& x, const EncoderParams& params, const EncoderConfig& cfg) {
    cfg.validate();
    if (x.frame_dim() != cfg.frame_input_dim)
        throw dimension_error("encode: frame dim " + std::to_string(x.frame_dim()) +
                              " does not match configured " + std::to_string(cfg.frame_input_dim));
    if (x.frames == 0) throw dimension_error("encode: empty clip");

    Tensor h = encdetail::window_matrix(x, cfg.temporal_context);
    const std::size_t t_len = x.frames;
    Tensor col_ones = Tensor::ones({t_len, 1});
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        h = matmul(h, params.weights[l]) + matmul(col_ones, params.biases[l]);
        if (l + 1 < params.weights.size()) h = tanh(h);
    }
    if (cfg.center_output) {
        Tensor col_mean = reshape(mean(h, 0), {1, cfg.feature_channels});
        h = h - matmul(col_ones, col_mean);
    }
    return FeatureSeries{h, x.sample_rate_hz};
}

}  // namespace simper
