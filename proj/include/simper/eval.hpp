#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "simper/checkpoint.hpp"
#include "simper/encoder.hpp"
#include "simper/errors.hpp"
#include "simper/signal.hpp"
#include "simper/similarity.hpp"
#include "simper/synthdata.hpp"
#include "simper/train.hpp"

namespace simper {

struct MetricsReport {
    double mae = 0.0;
    double mape = 0.0;  // percent
    double gm = 0.0;
    double pearson_rho = 0.0;
    std::size_t n = 0;
    std::string protocol;
    std::string config_fingerprint;
    std::size_t degenerate_count = 0;
    bool rho_constant = false;
};

// Per-sample evaluation record; criteria that slice by frequency band re-run
// compute_metrics on a filtered subset of these.
struct EvalDetail {
    std::vector<double> y;
    std::vector<double> y_hat;
    std::vector<bool> degenerate;
};

// MAE / MAPE / GM / Pearson rho. GM guards zero errors with
// exp(mean(log(max(e, 1e-6)))) so exact predictions do not null the metric.
inline MetricsReport compute_metrics(const std::vector<double>& y, const std::vector<double>& y_hat,
                                     const std::string& protocol = "",
                                     const std::string& fingerprint = "") {
    if (y.size() != y_hat.size() || y.empty())
        throw metric_error("compute_metrics: need equal, non-empty prediction vectors");
    for (double v : y)
        if (v == 0.0) throw metric_error("compute_metrics: zero ground truth breaks MAPE");

    MetricsReport r;
    r.n = y.size();
    r.protocol = protocol;
    r.config_fingerprint = fingerprint;
    const double n = static_cast<double>(y.size());
    double log_sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = std::fabs(y[i] - y_hat[i]);
        r.mae += e;
        r.mape += std::fabs((y[i] - y_hat[i]) / y[i]);
        log_sum += std::log(std::max(e, 1e-6));
    }
    r.mae /= n;
    r.mape = 100.0 * r.mape / n;
    r.gm = std::exp(log_sum / n);

    double my = 0.0, mh = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        my += y[i];
        mh += y_hat[i];
    }
    my /= n;
    mh /= n;
    double syy = 0.0, shh = 0.0, syh = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        syy += (y[i] - my) * (y[i] - my);
        shh += (y_hat[i] - mh) * (y_hat[i] - mh);
        syh += (y[i] - my) * (y_hat[i] - mh);
    }
    if (syy <= 0.0 || shh <= 0.0) {
        r.pearson_rho = 0.0;
        r.rho_constant = true;
    } else {
        r.pearson_rho = syh / std::sqrt(syy * shh);
    }
    return r;
}

namespace evaldetail {

inline ParamSet inference_params(const ParamSet& src) {
    ParamSet out;
    for (const auto& [name, t] : src.items)
        out.add(name, Tensor::from_values(t.shape(), t.values(), false));
    return out;
}

// Degenerate samples are scored at the maximum in-range error: the synthetic
// prediction sits at whichever end of the dataset frequency range is farther
// from the truth.
inline double degenerate_prediction(double y, double f_lo, double f_hi) {
    return std::fabs(y - f_lo) >= std::fabs(y - f_hi) ? f_lo : f_hi;
}

}  // namespace evaldetail

// FFT feature evaluation: encode each test sample, read the refined dominant
// frequency per channel, and aggregate with channel-power weights.
inline EvalDetail fft_eval_detail(const ParamSet& params, const EncoderConfig& enc_cfg,
                                  const DatasetManifest& test) {
    if (test.entries.empty()) throw config_error("fft_eval: empty test set");
    ParamSet frozen = evaldetail::inference_params(params);
    ParamSet* fp = &frozen;
    EncoderConfig cfg = enc_cfg;
    EncoderParams enc = traindetail::encoder_from_param_set(*fp, cfg);

    EvalDetail d;
    for (std::size_t i = 0; i < test.entries.size(); ++i) {
        const auto& e = test.entries[i];
        Clip x = load_sample(test, i);
        FeatureSeries f = encode(x, enc, cfg);
        double weight_sum = 0.0, freq_acc = 0.0;
        for (std::size_t c = 0; c < f.channels(); ++c) {
            RealSeries z{std::vector<double>(f.length()), f.sample_rate_hz};
            for (std::size_t t = 0; t < f.length(); ++t)
                z.values[t] = f.values.values()[t * f.channels() + c];
            try {
                const double fc = dominant_frequency(z);
                const Spectrum s = psd(z);
                double power = 0.0;
                for (std::size_t k = 1; k < s.bin_power.size(); ++k) power += s.bin_power[k];
                freq_acc += power * fc;
                weight_sum += power;
            } catch (const degenerate_signal_error&) {
                // flat channel contributes no weight
            }
        }
        d.y.push_back(e.spec.freq_hz);
        if (weight_sum > 0.0) {
            d.y_hat.push_back(freq_acc / weight_sum);
            d.degenerate.push_back(false);
        } else {
            d.y_hat.push_back(evaldetail::degenerate_prediction(e.spec.freq_hz, test.freq_lo,
                                                                test.freq_hi));
            d.degenerate.push_back(true);
        }
    }
    return d;
}

inline MetricsReport fft_eval(const ParamSet& params, const EncoderConfig& enc_cfg,
                              const DatasetManifest& test, const std::string& fingerprint = "") {
    EvalDetail d = fft_eval_detail(params, enc_cfg, test);
    MetricsReport r = compute_metrics(d.y, d.y_hat, "fft", fingerprint);
    for (bool b : d.degenerate) r.degenerate_count += b ? 1 : 0;
    return r;
}

// 1-NN feature evaluation: each test sample takes the ground-truth frequency
// of its most similar training sample (k > 1 averages the k labels). Ties in
// similarity resolve to the lowest train index.
inline EvalDetail knn_eval_detail(const ParamSet& params, const EncoderConfig& enc_cfg,
                                  const DatasetManifest& train, const DatasetManifest& test,
                                  SimilarityKind kind, std::size_t k = 1,
                                  CorrelationMode mode = CorrelationMode::Circular) {
    if (train.entries.empty() || test.entries.empty())
        throw config_error("knn_eval: empty train or test manifest");
    if (k < 1) throw config_error("knn_eval: k must be >= 1");
    ParamSet frozen = evaldetail::inference_params(params);
    EncoderConfig cfg = enc_cfg;
    EncoderParams enc = traindetail::encoder_from_param_set(frozen, cfg);

    std::vector<simdetail::PreparedView> train_views;
    std::vector<bool> train_degenerate;
    for (std::size_t i = 0; i < train.entries.size(); ++i) {
        FeatureSeries f = encode(load_sample(train, i), enc, cfg);
        train_degenerate.push_back(feature_degenerate(f));
        train_views.push_back(simdetail::prepare(f, kind));
    }

    EvalDetail d;
    for (std::size_t i = 0; i < test.entries.size(); ++i) {
        const auto& e = test.entries[i];
        FeatureSeries f = encode(load_sample(test, i), enc, cfg);
        d.y.push_back(e.spec.freq_hz);
        if (feature_degenerate(f)) {
            d.y_hat.push_back(evaldetail::degenerate_prediction(e.spec.freq_hz, test.freq_lo,
                                                                test.freq_hi));
            d.degenerate.push_back(true);
            continue;
        }
        auto pv = simdetail::prepare(f, kind);
        std::vector<std::pair<double, std::size_t>> scored;  // (-sim, index): stable ascending sort
        scored.reserve(train_views.size());
        for (std::size_t j = 0; j < train_views.size(); ++j)
            scored.emplace_back(-simdetail::pair_similarity(pv, train_views[j], kind, mode).item(), j);
        std::stable_sort(scored.begin(), scored.end());
        double acc = 0.0;
        const std::size_t kk = std::min(k, scored.size());
        for (std::size_t j = 0; j < kk; ++j) acc += train.entries[scored[j].second].spec.freq_hz;
        d.y_hat.push_back(acc / static_cast<double>(kk));
        d.degenerate.push_back(false);
    }
    return d;
}

inline MetricsReport knn_eval(const ParamSet& params, const EncoderConfig& enc_cfg,
                              const DatasetManifest& train, const DatasetManifest& test,
                              SimilarityKind kind, std::size_t k = 1,
                              CorrelationMode mode = CorrelationMode::Circular,
                              const std::string& fingerprint = "") {
    EvalDetail d = knn_eval_detail(params, enc_cfg, train, test, kind, k, mode);
    MetricsReport r = compute_metrics(d.y, d.y_hat, "knn", fingerprint);
    for (bool b : d.degenerate) r.degenerate_count += b ? 1 : 0;
    return r;
}

// Regression-head predictions of the supervised/fine-tuned model.
inline EvalDetail head_eval_detail(ParamSet& params, const EncoderConfig& enc_cfg,
                                   const DatasetManifest& test) {
    if (test.entries.empty()) throw config_error("head_eval: empty test set");
    EvalDetail d;
    for (std::size_t i = 0; i < test.entries.size(); ++i) {
        d.y.push_back(test.entries[i].spec.freq_hz);
        d.y_hat.push_back(predict_supervised(load_sample(test, i), params, enc_cfg));
        d.degenerate.push_back(false);
    }
    return d;
}

// Raw feature table export (CSV: id, freq_hz, then T*C flattened values).
inline void export_features(const ParamSet& params, const EncoderConfig& enc_cfg,
                            const DatasetManifest& manifest, const std::string& path) {
    ParamSet frozen = evaldetail::inference_params(params);
    EncoderConfig cfg = enc_cfg;
    EncoderParams enc = traindetail::encoder_from_param_set(frozen, cfg);
    std::ofstream out(path);
    if (!out) throw io_error("export_features: cannot write " + path);

    bool header_done = false;
    char buf[64];
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        FeatureSeries f = encode(load_sample(manifest, i), enc, cfg);
        if (!header_done) {
            out << "id,freq_hz";
            for (std::size_t j = 0; j < f.values.numel(); ++j) out << ",f" << j;
            out << "\n";
            header_done = true;
        }
        out << manifest.entries[i].id;
        std::snprintf(buf, sizeof(buf), "%.17g", manifest.entries[i].spec.freq_hz);
        out << "," << buf;
        for (double v : f.values.values()) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << "," << buf;
        }
        out << "\n";
    }
    if (!out) throw io_error("export_features: short write to " + path);
}

// ---------------------------------------------------------------------------
// report serialization
// ---------------------------------------------------------------------------

inline void save_report(const MetricsReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("save_report: cannot write " + path);
    char buf[64];
    auto emit = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << key << " = " << buf << "\n";
    };
    out << "protocol = " << r.protocol << "\n";
    out << "config = " << r.config_fingerprint << "\n";
    out << "n = " << r.n << "\n";
    emit("mae", r.mae);
    emit("mape", r.mape);
    emit("gm", r.gm);
    emit("pearson_rho", r.pearson_rho);
    out << "degenerate = " << r.degenerate_count << "\n";
    out << "rho_constant = " << (r.rho_constant ? 1 : 0) << "\n";
}

inline void append_results_csv(const std::string& path, const std::string& experiment,
                               const std::string& axis_value, std::uint64_t seed,
                               const MetricsReport& r) {
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw io_error("append_results_csv: cannot open " + path);
    if (fresh)
        out << "experiment,value,protocol,seed,config,n,mae,mape,gm,pearson_rho,degenerate,error\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return std::string(buf);
    };
    out << experiment << "," << axis_value << "," << r.protocol << "," << seed << ","
        << r.config_fingerprint << "," << r.n << "," << num(r.mae) << "," << num(r.mape) << ","
        << num(r.gm) << "," << num(r.pearson_rho) << "," << r.degenerate_count << ",\n";
}

inline void append_results_error(const std::string& path, const std::string& experiment,
                                 const std::string& axis_value, std::uint64_t seed,
                                 const std::string& protocol, const std::string& what) {
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw io_error("append_results_csv: cannot open " + path);
    if (fresh)
        out << "experiment,value,protocol,seed,config,n,mae,mape,gm,pearson_rho,degenerate,error\n";
    std::string clean = what;
    for (char& c : clean)
        if (c == ',' || c == '\n') c = ';';
    out << experiment << "," << axis_value << "," << protocol << "," << seed << ",,,,,,,," << clean
        << "\n";
}

}  // namespace simper
