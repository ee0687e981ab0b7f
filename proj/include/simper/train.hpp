#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "simper/augment.hpp"
#include "simper/checkpoint.hpp"
#include "simper/clip.hpp"
#include "simper/encoder.hpp"
#include "simper/errors.hpp"
#include "simper/loss.hpp"
#include "simper/rng.hpp"
#include "simper/synthdata.hpp"

namespace simper {

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct LrSchedule {
    double initial = 1e-3;
    std::vector<std::size_t> decay_epochs = {40, 50};
    double decay_factor = 0.1;

    double at_epoch(std::size_t epoch) const {
        double lr = initial;
        for (std::size_t e : decay_epochs)
            if (epoch >= e) lr *= decay_factor;
        return lr;
    }
};

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t step = 0;
    std::vector<std::vector<double>> m, v;

    void init_for(const ParamSet& params) {
        m.clear();
        v.clear();
        for (const auto& [name, t] : params.items) {
            m.emplace_back(t.numel(), 0.0);
            v.emplace_back(t.numel(), 0.0);
        }
        step = 0;
    }
};

// One bias-corrected Adam update from the gradients currently accumulated on
// the parameters. Non-finite gradients abort with the offending name.
inline void adam_step(ParamSet& params, AdamState& state, double lr) {
    if (state.m.size() != params.items.size()) state.init_for(params);
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t p = 0; p < params.items.size(); ++p) {
        auto& [name, t] = params.items[p];
        auto& values = t.mutable_values();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double g = t.grad_at(i);
            if (!std::isfinite(g))
                throw divergence_error("adam: non-finite gradient in parameter " + name);
            state.m[p][i] = state.beta1 * state.m[p][i] + (1.0 - state.beta1) * g;
            state.v[p][i] = state.beta2 * state.v[p][i] + (1.0 - state.beta2) * g * g;
            const double mhat = state.m[p][i] / bc1;
            const double vhat = state.v[p][i] / bc2;
            values[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

// ---------------------------------------------------------------------------
// training setup
// ---------------------------------------------------------------------------

struct TrainConfig {
    std::size_t epochs = 60;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    std::size_t eval_every = 0;  // 0 = never
    LrSchedule lr;

    void validate() const {
        if (epochs < 1 || batch_size < 1) throw config_error("train: epochs and batch_size must be >= 1");
    }
};

struct PipelineConfig {
    TrainConfig train;
    SpeedAugConfig speed;
    InvariantAugConfig invariant;
    LossConfig loss;
    EncoderConfig encoder;
};

struct EpochStat {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    ParamSet params;
    std::vector<EpochStat> curve;
    std::size_t degenerate_samples = 0;
};

using EvalHook = std::function<void(std::size_t epoch, ParamSet& params)>;

namespace traindetail {

inline ParamSet encoder_param_set(EncoderParams& enc) {
    ParamSet ps;
    for (std::size_t l = 0; l < enc.weights.size(); ++l) {
        ps.add("enc.w" + std::to_string(l), enc.weights[l]);
        ps.add("enc.b" + std::to_string(l), enc.biases[l]);
    }
    return ps;
}

inline EncoderParams encoder_from_param_set(ParamSet& ps, const EncoderConfig& cfg) {
    EncoderParams enc;
    for (std::size_t l = 0; l <= cfg.hidden_dims.size(); ++l) {
        enc.weights.push_back(ps.find("enc.w" + std::to_string(l)));
        enc.biases.push_back(ps.find("enc.b" + std::to_string(l)));
    }
    return enc;
}

// Fresh leaf copies of a parameter set (used by worker threads so sample
// gradients land in private buffers).
inline ParamSet clone_params(const ParamSet& src) {
    ParamSet out;
    for (const auto& [name, t] : src.items)
        out.add(name, Tensor::from_values(t.shape(), t.values(), true));
    return out;
}

inline std::vector<Clip> load_all(const DatasetManifest& m) {
    std::vector<Clip> clips;
    clips.reserve(m.entries.size());
    for (std::size_t i = 0; i < m.entries.size(); ++i) clips.push_back(load_sample(m, i));
    return clips;
}

inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(Rng::derive_key({seed, epoch, 0xBA7CULL}));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);
    return order;
}

struct SampleGrad {
    double loss = 0.0;
    bool degenerate = false;
    std::vector<std::vector<double>> grads;  // one buffer per parameter
};

// Evaluate `fn` for every listed sample, fanning out across threads. Each
// worker gets its own parameter clone; results are reduced by the caller in
// sample order so thread count never changes the outcome.
inline std::vector<SampleGrad> per_sample_grads(
    const ParamSet& params, const std::vector<std::size_t>& samples, std::size_t threads,
    const std::function<SampleGrad(std::size_t, ParamSet&)>& fn) {
    std::vector<SampleGrad> results(samples.size());
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, samples.size()));
    if (workers == 1) {
        ParamSet local = clone_params(params);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            local.zero_grads();
            results[i] = fn(samples[i], local);
        }
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w]() {
            try {
                ParamSet local = clone_params(params);
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= samples.size()) break;
                    local.zero_grads();
                    results[i] = fn(samples[i], local);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

inline SampleGrad extract_grads(ParamSet& local, double loss_value, bool degenerate) {
    SampleGrad sg;
    sg.loss = loss_value;
    sg.degenerate = degenerate;
    for (auto& [name, t] : local.items) {
        std::vector<double> g(t.numel(), 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = t.grad_at(i);
        sg.grads.push_back(std::move(g));
    }
    return sg;
}

// Accumulate per-sample gradients (sample order) into the shared parameters,
// scaled by 1/batch, then guard and step.
inline void apply_batch(ParamSet& params, AdamState& adam, const std::vector<SampleGrad>& batch,
                        double lr) {
    const double scale = 1.0 / static_cast<double>(batch.size());
    double norm2 = 0.0;
    for (std::size_t p = 0; p < params.items.size(); ++p) {
        auto& t = params.items[p].second;
        std::vector<double> acc(t.numel(), 0.0);
        for (const auto& sg : batch)
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += sg.grads[p][i];
        for (double& g : acc) g *= scale;
        for (double g : acc) norm2 += g * g;
        t.zero_grad();
        t.accumulate_grad(acc);
    }
    if (!(std::sqrt(norm2) < 1e4))
        throw divergence_error("train: gradient norm " + std::to_string(std::sqrt(norm2)) +
                               " exceeds the divergence guard");
    adam_step(params, adam, lr);
}

}  // namespace traindetail

// ---------------------------------------------------------------------------
// SimPer pretraining (the temporal self-contrastive loop)
// ---------------------------------------------------------------------------

inline TrainResult pretrain_simper(const DatasetManifest& data, const PipelineConfig& cfg,
                                   const EvalHook& hook = nullptr) {
    cfg.train.validate();
    cfg.loss.validate();
    if (data.entries.empty()) throw config_error("pretrain: empty dataset");

    const std::vector<Clip> clips = traindetail::load_all(data);
    EncoderParams enc = init_params(cfg.encoder, cfg.train.seed);
    TrainResult result;
    result.params = traindetail::encoder_param_set(enc);
    AdamState adam;
    adam.init_for(result.params);

    const std::size_t n = clips.size();
    for (std::size_t epoch = 0; epoch < cfg.train.epochs; ++epoch) {
        const double lr = cfg.train.lr.at_epoch(epoch);
        const auto order = traindetail::epoch_order(n, cfg.train.seed, epoch);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.train.batch_size) {
            const std::size_t stop = std::min(n, start + cfg.train.batch_size);
            std::vector<std::size_t> batch(order.begin() + start, order.begin() + stop);
            auto grads = traindetail::per_sample_grads(
                result.params, batch, cfg.train.threads,
                [&](std::size_t idx, ParamSet& local) {
                    EncoderParams lenc = traindetail::encoder_from_param_set(local, cfg.encoder);
                    const auto& entry = data.entries[idx];
                    auto views = make_training_views(clips[idx], cfg.speed, cfg.invariant,
                                                     cfg.train.seed, entry.id, epoch,
                                                     entry.spec.freq_hz);
                    std::vector<FeatureSeries> za, zb;
                    za.reserve(views.set_a.size());
                    zb.reserve(views.set_b.size());
                    std::size_t collapsed = 0;
                    for (std::size_t i = 0; i < views.set_a.size(); ++i) {
                        za.push_back(encode(views.set_a[i], lenc, cfg.encoder));
                        zb.push_back(encode(views.set_b[i], lenc, cfg.encoder));
                        if (feature_degenerate(za.back())) ++collapsed;
                        if (feature_degenerate(zb.back())) ++collapsed;
                    }
                    Tensor loss = simper_loss(za, zb, views.base.speeds, cfg.loss);
                    const double value = loss.item();
                    if (!std::isfinite(value)) throw divergence_error("pretrain: non-finite loss");
                    backward(loss);
                    return traindetail::extract_grads(local, value,
                                                      collapsed == 2 * views.set_a.size());
                });
            std::size_t degenerates = 0;
            for (const auto& sg : grads) {
                epoch_loss += sg.loss;
                if (sg.degenerate) ++degenerates;
            }
            result.degenerate_samples += degenerates;
            if (2 * degenerates > grads.size())
                throw divergence_error("pretrain: over half the batch produced degenerate features");
            traindetail::apply_batch(result.params, adam, grads, lr);
        }
        result.curve.push_back({epoch, epoch_loss / static_cast<double>(n), lr});
        if (hook && cfg.train.eval_every > 0 && (epoch + 1) % cfg.train.eval_every == 0)
            hook(epoch, result.params);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Instance-discrimination baseline (conventional contrastive SSL)
// ---------------------------------------------------------------------------

// SimCLR-style: two invariant views per instance, cosine similarity over
// time-flattened features, InfoNCE with in-batch negatives drawn from other
// instances only.
inline TrainResult pretrain_instance_discrimination(const DatasetManifest& data,
                                                    const PipelineConfig& cfg,
                                                    const EvalHook& hook = nullptr) {
    cfg.train.validate();
    cfg.loss.validate();
    if (cfg.train.batch_size < 2)
        throw config_error("instance discrimination needs batch_size >= 2 for negatives");
    if (data.entries.size() < 2) throw config_error("instance discrimination needs >= 2 samples");

    const std::vector<Clip> clips = traindetail::load_all(data);
    EncoderParams enc = init_params(cfg.encoder, cfg.train.seed);
    TrainResult result;
    result.params = traindetail::encoder_param_set(enc);
    AdamState adam;
    adam.init_for(result.params);

    const std::size_t n = clips.size();
    for (std::size_t epoch = 0; epoch < cfg.train.epochs; ++epoch) {
        const double lr = cfg.train.lr.at_epoch(epoch);
        const auto order = traindetail::epoch_order(n, cfg.train.seed, epoch);
        double epoch_loss = 0.0;
        std::size_t anchors_seen = 0;
        for (std::size_t start = 0; start < n; start += cfg.train.batch_size) {
            const std::size_t stop = std::min(n, start + cfg.train.batch_size);
            const std::size_t bn = stop - start;
            if (bn < 2) continue;  // a trailing singleton has no negatives

            result.params.zero_grads();
            std::vector<FeatureSeries> feats(2 * bn);
            std::size_t degenerates = 0;
            for (std::size_t b = 0; b < bn; ++b) {
                const std::size_t idx = order[start + b];
                for (std::size_t view = 0; view < 2; ++view) {
                    Clip v = invariant_view(clips[idx], cfg.invariant,
                                            Rng::derive_key({cfg.train.seed, data.entries[idx].id,
                                                             epoch, 0xB0ULL + view}));
                    feats[2 * b + view] = encode(v, enc, cfg.encoder);
                }
                if (feature_degenerate(feats[2 * b]) && feature_degenerate(feats[2 * b + 1]))
                    ++degenerates;
            }
            if (2 * degenerates > bn)
                throw divergence_error("pretrain: over half the batch produced degenerate features");
            result.degenerate_samples += degenerates;

            // pairwise cosine similarities, computed once
            std::vector<Tensor> sims(2 * bn * 2 * bn);
            for (std::size_t i = 0; i < 2 * bn; ++i)
                for (std::size_t j = i + 1; j < 2 * bn; ++j) {
                    Tensor s = flat_cosine_similarity(feats[i], feats[j]);
                    sims[i * 2 * bn + j] = s;
                    sims[j * 2 * bn + i] = s;
                }

            Tensor batch_loss = Tensor::scalar(0.0);
            for (std::size_t a = 0; a < 2 * bn; ++a) {
                const std::size_t partner = a ^ 1;
                std::vector<Tensor> negs;
                negs.reserve(2 * (bn - 1));
                for (std::size_t j = 0; j < 2 * bn; ++j)
                    if (j / 2 != a / 2) negs.push_back(sims[a * 2 * bn + j]);
                batch_loss = batch_loss +
                             infonce_from_sims(sims[a * 2 * bn + partner], negs, cfg.loss.temperature);
            }
            batch_loss = batch_loss / static_cast<double>(2 * bn);
            const double value = batch_loss.item();
            if (!std::isfinite(value)) throw divergence_error("pretrain: non-finite loss");
            backward(batch_loss);

            double norm2 = 0.0;
            for (auto& [name, t] : result.params.items)
                for (std::size_t i = 0; i < t.numel(); ++i) norm2 += t.grad_at(i) * t.grad_at(i);
            if (!(std::sqrt(norm2) < 1e4)) throw divergence_error("train: gradient norm guard tripped");

            adam_step(result.params, adam, lr);
            epoch_loss += value * static_cast<double>(2 * bn);
            anchors_seen += 2 * bn;
        }
        result.curve.push_back({epoch, epoch_loss / static_cast<double>(anchors_seen), lr});
        if (hook && cfg.train.eval_every > 0 && (epoch + 1) % cfg.train.eval_every == 0)
            hook(epoch, result.params);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Supervised / fine-tune regression
// ---------------------------------------------------------------------------

// Temporal mean of the (uncentered) feature series -> linear map -> scalar
// frequency, trained with an L1 loss. Covers the supervised baseline (random
// init), fine-tuning (checkpoint init), and the frozen-encoder probe.
struct SupervisedOptions {
    std::optional<ParamSet> init;  // encoder weights to start from
    bool freeze_encoder = false;
};

inline double predict_supervised(const Clip& x, ParamSet& params, EncoderConfig enc_cfg) {
    enc_cfg.center_output = false;
    EncoderParams enc = traindetail::encoder_from_param_set(params, enc_cfg);
    FeatureSeries f = encode(x, enc, enc_cfg);
    Tensor pooled = reshape(mean(f.values, 0), {1, enc_cfg.feature_channels});
    Tensor pred = matmul(pooled, params.find("head.w")) + params.find("head.b");
    return pred.values()[0];
}

inline TrainResult train_supervised(const DatasetManifest& data, const PipelineConfig& cfg,
                                    const SupervisedOptions& opt = {}) {
    cfg.train.validate();
    if (data.entries.empty()) throw config_error("train_supervised: empty dataset");
    for (const auto& e : data.entries)
        if (e.spec.freq_hz <= 0.0)
            throw config_error("train_supervised: sample " + std::to_string(e.id) + " has no label");

    EncoderConfig enc_cfg = cfg.encoder;
    enc_cfg.center_output = false;  // the temporal-mean head needs the DC component

    const std::vector<Clip> clips = traindetail::load_all(data);
    TrainResult result;
    if (opt.init) {
        result.params = traindetail::clone_params(*opt.init);
    } else {
        EncoderParams enc = init_params(enc_cfg, cfg.train.seed);
        result.params = traindetail::encoder_param_set(enc);
    }
    {
        Rng rng(Rng::derive_key({cfg.train.seed, 0x4EADULL}));
        const double bound = std::sqrt(6.0 / static_cast<double>(enc_cfg.feature_channels + 1));
        std::vector<double> w(enc_cfg.feature_channels);
        for (double& x : w) x = rng.uniform(-bound, bound);
        result.params.add("head.w", Tensor::from_values({enc_cfg.feature_channels, 1}, std::move(w), true));
        result.params.add("head.b", Tensor::from_values({1, 1}, {0.0}, true));
    }

    // Frozen mode updates only the head; Adam state matches the stepped set.
    // Workers then see constant (gradient-free) encoder tensors, so no
    // gradient work or cross-thread accumulation happens behind the head.
    ParamSet stepped;
    ParamSet frozen_base;
    if (opt.freeze_encoder) {
        stepped.add("head.w", result.params.find("head.w"));
        stepped.add("head.b", result.params.find("head.b"));
        for (auto& [name, t] : result.params.items)
            if (name.rfind("enc.", 0) == 0)
                frozen_base.add(name, Tensor::from_values(t.shape(), t.values(), false));
    } else {
        stepped = result.params;
    }
    AdamState adam;
    adam.init_for(stepped);

    const std::size_t n = clips.size();
    for (std::size_t epoch = 0; epoch < cfg.train.epochs; ++epoch) {
        const double lr = cfg.train.lr.at_epoch(epoch);
        const auto order = traindetail::epoch_order(n, cfg.train.seed, epoch);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.train.batch_size) {
            const std::size_t stop = std::min(n, start + cfg.train.batch_size);
            std::vector<std::size_t> batch(order.begin() + start, order.begin() + stop);
            auto grads = traindetail::per_sample_grads(
                stepped, batch, cfg.train.threads, [&](std::size_t idx, ParamSet& local) {
                    ParamSet* full = &local;
                    ParamSet merged;
                    if (opt.freeze_encoder) {
                        merged = frozen_base;
                        merged.add("head.w", local.find("head.w"));
                        merged.add("head.b", local.find("head.b"));
                        full = &merged;
                    }
                    EncoderParams lenc = traindetail::encoder_from_param_set(*full, enc_cfg);
                    FeatureSeries f = encode(clips[idx], lenc, enc_cfg);
                    Tensor pooled = reshape(mean(f.values, 0), {1, enc_cfg.feature_channels});
                    Tensor pred = matmul(pooled, full->find("head.w")) + full->find("head.b");
                    Tensor diff = reshape(pred, {}) - data.entries[idx].spec.freq_hz;
                    Tensor loss = relu(diff) + relu(-diff);
                    const double value = loss.item();
                    if (!std::isfinite(value)) throw divergence_error("supervised: non-finite loss");
                    backward(loss);
                    return traindetail::extract_grads(local, value, false);
                });
            for (const auto& sg : grads) epoch_loss += sg.loss;
            traindetail::apply_batch(stepped, adam, grads, lr);
        }
        result.curve.push_back({epoch, epoch_loss / static_cast<double>(n), lr});
    }
    return result;
}

}  // namespace simper
