#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "simper/errors.hpp"
#include "simper/feature.hpp"
#include "simper/signal.hpp"
#include "simper/tensor.hpp"

namespace simper {

enum class SimilarityKind { MXCorr, NPsdCos, NPsdL2 };
enum class CorrelationMode { Circular, Linear };

inline const char* similarity_kind_name(SimilarityKind k) {
    switch (k) {
        case SimilarityKind::MXCorr: return "mxcorr";
        case SimilarityKind::NPsdCos: return "npsd_cos";
        case SimilarityKind::NPsdL2: return "npsd_l2";
    }
    return "?";
}

inline SimilarityKind parse_similarity_kind(const std::string& s) {
    if (s == "mxcorr") return SimilarityKind::MXCorr;
    if (s == "npsd_cos") return SimilarityKind::NPsdCos;
    if (s == "npsd_l2") return SimilarityKind::NPsdL2;
    throw config_error("unknown similarity kind: " + s);
}

// Continuous label similarity w_{i,j}. NegL1 is the default: finite and well
// scaled at i == j, where the inverse form needs its epsilon.
struct LabelKernel {
    enum class Type { InverseL1, NegL1 };
    Type type = Type::NegL1;
    double eps = 0.1;    // InverseL1: 1 / (|ds| + eps)
    double scale = 1.5;  // NegL1: -|ds| / scale

    void validate() const {
        if (eps <= 0.0 || scale <= 0.0) throw config_error("label kernel: eps and scale must be positive");
    }
};

inline double label_similarity(double s_i, double s_j, const LabelKernel& k) {
    const double d = std::fabs(s_i - s_j);
    return k.type == LabelKernel::Type::InverseL1 ? 1.0 / (d + k.eps) : -d / k.scale;
}

// Variance floor applied before normalization inside the tape ops. Keeps
// gradients finite when the encoder momentarily emits near-constant features;
// the raw signal kernels stay exact and throw instead.
inline constexpr double kVarianceFloor = 1e-8;

namespace simdetail {

// One-sided power spectrum |X_k|^2 / n of a length-n series as a tape op.
// The backward pass is the adjoint of the DFT: with upstream g_k on bins
// k <= n/2, grad x = 2 * Re(IFFT(G)) where G_k = g_k * X_k (zero elsewhere).
inline Tensor psd_power_op(const Tensor& series) {
    if (series.rank() != 1) throw dimension_error("psd_power: rank-1 series required");
    const std::size_t n = series.shape()[0];
    if (n < 2) throw dimension_error("psd_power: need at least 2 samples");
    auto spec = fft_real(series.values());
    const std::size_t bins = n / 2 + 1;
    std::vector<double> power(bins);
    for (std::size_t k = 0; k < bins; ++k) power[k] = std::norm(spec[k]) / static_cast<double>(n);
    return Tensor::make_op({bins}, std::move(power), {series},
                           [series, spec, n, bins](const std::vector<double>& g) {
        if (!series.requires_grad()) return;
        std::vector<cdouble> G(n, cdouble(0.0, 0.0));
        for (std::size_t k = 0; k < bins; ++k) G[k] = g[k] * spec[k];
        auto inv = fft(std::move(G), true);
        std::vector<double> da(n);
        for (std::size_t t = 0; t < n; ++t) da[t] = 2.0 * inv[t].real();
        series.node()->accumulate(da.data(), da.size());
    });
}

// DC-dropped, floored, sum-normalized PSD of a 1-D series.
inline Tensor normalized_psd_op(const Tensor& series) {
    Tensor p = psd_power_op(series);
    Tensor tail = slice1d(p, 1, p.shape()[0] - 1) + kVarianceFloor;
    return tail / sum(tail);
}

// Mean-removed, unit-norm series with the variance floor folded into the
// denominator: u_hat = (u - mean) / sqrt(sum((u-mean)^2) + n*floor).
inline Tensor center_normalize_op(const Tensor& series) {
    const double n = static_cast<double>(series.shape()[0]);
    Tensor centered = series - mean(series);
    return centered / sqrt(sum(centered * centered) + n * kVarianceFloor);
}

// Offset search on plain doubles (the gradient flows only through the argmax
// offset, so the search itself needs no tape). Ties break to the lowest
// offset index. Takes the precomputed forward transforms of the normalized
// series so matrix/eval loops pay one inverse FFT per pair.
inline std::ptrdiff_t best_circular_offset(const std::vector<cdouble>& fu,
                                           const std::vector<cdouble>& fv) {
    std::vector<cdouble> prod(fu.size());
    for (std::size_t k = 0; k < fu.size(); ++k) prod[k] = std::conj(fu[k]) * fv[k];
    auto r = fft(std::move(prod), true);
    std::size_t best = 0;
    for (std::size_t t = 1; t < r.size(); ++t)
        if (r[t].real() > r[best].real()) best = t;
    return static_cast<std::ptrdiff_t>(best);
}

inline std::ptrdiff_t best_linear_offset(const std::vector<double>& u, const std::vector<double>& v) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(u.size());
    std::ptrdiff_t best = -(n - 1);
    double best_r = -1e300;
    for (std::ptrdiff_t tau = -(n - 1); tau < n; ++tau) {
        double acc = 0.0;
        for (std::ptrdiff_t t = std::max<std::ptrdiff_t>(0, -tau); t < n && t + tau < n; ++t)
            acc += u[t] * v[t + tau];
        if (acc > best_r) {
            best_r = acc;
            best = tau;
        }
    }
    return best;
}

// Maximum cross-correlation between two already-normalized series.
inline Tensor mxcorr_normalized(const Tensor& u_hat, const Tensor& v_hat, CorrelationMode mode) {
    if (mode == CorrelationMode::Circular) {
        const std::ptrdiff_t tau =
            best_circular_offset(fft_real(u_hat.values()), fft_real(v_hat.values()));
        return dot(u_hat, circshift1d(v_hat, static_cast<std::size_t>(tau)));
    }
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(u_hat.shape()[0]);
    const std::ptrdiff_t tau = best_linear_offset(u_hat.values(), v_hat.values());
    const std::size_t len = static_cast<std::size_t>(n - std::abs(tau));
    const std::size_t u_start = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -tau));
    const std::size_t v_start = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, tau));
    return dot(slice1d(u_hat, u_start, len), slice1d(v_hat, v_start, len));
}

inline Tensor npsd_cos(const Tensor& qu, const Tensor& qv) {
    return dot(qu, qv) / (sqrt(sum(qu * qu)) * sqrt(sum(qv * qv)));
}

inline Tensor npsd_l2(const Tensor& qu, const Tensor& qv) {
    Tensor d = qu - qv;
    // 1e-12 keeps the sqrt gradient defined when the spectra coincide
    return -sqrt(sum(d * d) + 1e-12);
}

// Per-view prepared state so an MxM matrix normalizes each view once.
struct PreparedView {
    std::vector<Tensor> per_channel;             // normalized series or normalized PSD
    std::vector<std::vector<cdouble>> fwd_fft;   // MXCorr only: FFT of each normalized channel
};

inline PreparedView prepare(const FeatureSeries& f, SimilarityKind kind) {
    PreparedView pv;
    const std::size_t c = f.channels();
    pv.per_channel.reserve(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
        Tensor series = take_column(f.values, ch);
        if (kind == SimilarityKind::MXCorr) {
            Tensor n = center_normalize_op(series);
            pv.fwd_fft.push_back(fft_real(n.values()));
            pv.per_channel.push_back(std::move(n));
        } else {
            pv.per_channel.push_back(normalized_psd_op(series));
        }
    }
    return pv;
}

inline Tensor pair_similarity(const PreparedView& a, const PreparedView& b, SimilarityKind kind,
                              CorrelationMode mode) {
    std::vector<Tensor> scores;
    scores.reserve(a.per_channel.size());
    for (std::size_t ch = 0; ch < a.per_channel.size(); ++ch) {
        switch (kind) {
            case SimilarityKind::MXCorr:
                if (mode == CorrelationMode::Circular) {
                    const std::ptrdiff_t tau = best_circular_offset(a.fwd_fft[ch], b.fwd_fft[ch]);
                    scores.push_back(dot(a.per_channel[ch],
                                         circshift1d(b.per_channel[ch], static_cast<std::size_t>(tau))));
                } else {
                    scores.push_back(mxcorr_normalized(a.per_channel[ch], b.per_channel[ch], mode));
                }
                break;
            case SimilarityKind::NPsdCos:
                scores.push_back(npsd_cos(a.per_channel[ch], b.per_channel[ch]));
                break;
            case SimilarityKind::NPsdL2:
                scores.push_back(npsd_l2(a.per_channel[ch], b.per_channel[ch]));
                break;
        }
    }
    return mean(stack(scores));
}

}  // namespace simdetail

// Periodic feature similarity between two feature series: higher means more
// similar for every kind. Multi-channel inputs are scored per channel and
// averaged. Tape-connected when the inputs require gradients.
inline Tensor periodic_similarity(const FeatureSeries& u, const FeatureSeries& v, SimilarityKind kind,
                                  CorrelationMode mode = CorrelationMode::Circular) {
    if (u.length() != v.length() || u.channels() != v.channels())
        throw dimension_error("periodic_similarity: mismatched feature shapes");
    if (u.length() < 4) throw dimension_error("periodic_similarity: need T >= 4");
    auto pa = simdetail::prepare(u, kind);
    auto pb = simdetail::prepare(v, kind);
    return simdetail::pair_similarity(pa, pb, kind, mode);
}

// MxM similarity matrix between two view sets; entry (i,j) = sim(A_i, B_j).
struct SimilarityMatrix {
    std::size_t m = 0;
    std::vector<Tensor> entries;  // row-major scalars

    const Tensor& at(std::size_t i, std::size_t j) const { return entries[i * m + j]; }
};

inline SimilarityMatrix similarity_matrix(const std::vector<FeatureSeries>& a,
                                          const std::vector<FeatureSeries>& b, SimilarityKind kind,
                                          CorrelationMode mode = CorrelationMode::Circular) {
    if (a.size() != b.size() || a.empty())
        throw dimension_error("similarity_matrix: need equal non-empty view sets");
    std::vector<simdetail::PreparedView> pa, pb;
    pa.reserve(a.size());
    pb.reserve(b.size());
    for (const auto& f : a) pa.push_back(simdetail::prepare(f, kind));
    for (const auto& f : b) pb.push_back(simdetail::prepare(f, kind));
    SimilarityMatrix sm;
    sm.m = a.size();
    sm.entries.reserve(sm.m * sm.m);
    for (std::size_t i = 0; i < sm.m; ++i)
        for (std::size_t j = 0; j < sm.m; ++j)
            sm.entries.push_back(simdetail::pair_similarity(pa[i], pb[j], kind, mode));
    return sm;
}

// Encoder-collapse diagnostic: true when every channel of the feature series
// has temporal variance below `tol`.
inline bool feature_degenerate(const FeatureSeries& f, double tol = 1e-7) {
    const std::size_t t_len = f.length(), c_len = f.channels();
    const auto& v = f.values.values();
    for (std::size_t c = 0; c < c_len; ++c) {
        double m = 0.0;
        for (std::size_t t = 0; t < t_len; ++t) m += v[t * c_len + c];
        m /= static_cast<double>(t_len);
        double ss = 0.0;
        for (std::size_t t = 0; t < t_len; ++t) {
            const double d = v[t * c_len + c] - m;
            ss += d * d;
        }
        if (ss / static_cast<double>(t_len) >= tol) return false;
    }
    return true;
}

}  // namespace simper
