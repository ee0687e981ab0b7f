#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "simper/detmath.hpp"
#include "simper/errors.hpp"

namespace simper {

using cdouble = std::complex<double>;

struct RealSeries {
    std::vector<double> values;
    double sample_rate_hz = 30.0;
};

struct Spectrum {
    std::vector<double> bin_power;  // one-sided, floor(n/2)+1 bins, DC first
    double bin_width_hz = 0.0;
};

namespace fftdetail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey, forward transform (e^{-2*pi*i*k*t/n}).
inline void fft_pow2(std::vector<cdouble>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        // w = exp(-2*pi*i/len); angle in turns keeps the twiddles exact.
        const double step = 2.0 / static_cast<double>(len);
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const double t = step * static_cast<double>(k);
                const cdouble w(detmath::cospi(t), -detmath::sinpi(t));
                cdouble u = a[i + k];
                cdouble v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
}

// Bluestein chirp-z for arbitrary n. The chirp exponent k^2/(n) is reduced
// mod 2n in integers first so precision holds for any length.
inline void fft_bluestein(std::vector<cdouble>& a) {
    const std::size_t n = a.size();
    std::size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;

    std::vector<cdouble> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t e = (k * k) % (2 * n);
        const double t = static_cast<double>(e) / static_cast<double>(n);
        chirp[k] = cdouble(detmath::cospi(t), -detmath::sinpi(t));
    }

    std::vector<cdouble> x(m, cdouble(0.0, 0.0)), y(m, cdouble(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k) x[k] = a[k] * chirp[k];
    y[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) y[k] = y[m - k] = std::conj(chirp[k]);

    fft_pow2(x);
    fft_pow2(y);
    for (std::size_t k = 0; k < m; ++k) x[k] *= y[k];
    // inverse power-of-two transform via conjugation
    for (auto& v : x) v = std::conj(v);
    fft_pow2(x);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k) a[k] = std::conj(x[k]) * inv_m * chirp[k];
}

}  // namespace fftdetail

// Discrete Fourier transform of arbitrary length; the inverse applies the
// 1/n scaling. Non-power-of-two lengths go through Bluestein's algorithm.
inline std::vector<cdouble> fft(std::vector<cdouble> values, bool inverse = false) {
    const std::size_t n = values.size();
    if (n == 0) throw dimension_error("fft: empty input");
    if (n == 1) return values;
    if (inverse) {
        for (auto& v : values) v = std::conj(v);
        values = fft(std::move(values), false);
        const double s = 1.0 / static_cast<double>(n);
        for (auto& v : values) v = std::conj(v) * s;
        return values;
    }
    if (fftdetail::is_pow2(n))
        fftdetail::fft_pow2(values);
    else
        fftdetail::fft_bluestein(values);
    return values;
}

inline std::vector<cdouble> fft_real(const std::vector<double>& values, bool inverse = false) {
    std::vector<cdouble> c(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) c[i] = cdouble(values[i], 0.0);
    return fft(std::move(c), inverse);
}

// One-sided power spectral density, bin_power[k] = |X_k|^2 / n.
inline Spectrum psd(const RealSeries& x) {
    const std::size_t n = x.values.size();
    if (n < 2) throw dimension_error("psd: need at least 2 samples");
    auto spec = fft_real(x.values);
    Spectrum s;
    s.bin_width_hz = x.sample_rate_hz / static_cast<double>(n);
    s.bin_power.resize(n / 2 + 1);
    for (std::size_t k = 0; k < s.bin_power.size(); ++k)
        s.bin_power[k] = std::norm(spec[k]) / static_cast<double>(n);
    return s;
}

// Drop the DC bin and normalize the rest to sum 1.
inline std::vector<double> normalize_psd(const Spectrum& s) {
    if (s.bin_power.size() < 2) throw dimension_error("normalize_psd: too few bins");
    double total = 0.0;
    for (std::size_t k = 1; k < s.bin_power.size(); ++k) total += s.bin_power[k];
    if (total <= 0.0) throw degenerate_signal_error("normalize_psd: all non-DC bins are zero");
    std::vector<double> out(s.bin_power.size() - 1);
    for (std::size_t k = 1; k < s.bin_power.size(); ++k) out[k - 1] = s.bin_power[k] / total;
    return out;
}

namespace sigdetail {

// Removes the mean and scales to unit L2 norm; returns false for
// zero-variance input.
inline bool center_normalize(std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double& x : v) {
        x -= m;
        ss += x * x;
    }
    if (ss <= 0.0) return false;
    const double inv = 1.0 / std::sqrt(ss);
    for (double& x : v) x *= inv;
    return true;
}

}  // namespace sigdetail

// r[tau] = sum_t u[t] * v[(t+tau) mod n] on mean-removed, unit-norm inputs,
// computed via FFT: r = IFFT(conj(FFT(u)) .* FFT(v)). Values lie in [-1, 1]
// up to roundoff.
inline std::vector<double> circular_cross_correlation(std::vector<double> u, std::vector<double> v) {
    if (u.size() != v.size() || u.size() < 2)
        throw dimension_error("circular_cross_correlation: need equal lengths >= 2");
    if (!sigdetail::center_normalize(u) || !sigdetail::center_normalize(v))
        throw degenerate_signal_error("circular_cross_correlation: zero-variance input");
    auto fu = fft_real(u);
    auto fv = fft_real(v);
    for (std::size_t k = 0; k < fu.size(); ++k) fu[k] = std::conj(fu[k]) * fv[k];
    auto r = fft(std::move(fu), true);
    std::vector<double> out(r.size());
    for (std::size_t k = 0; k < r.size(); ++k) out[k] = r[k].real();
    return out;
}

// Linear (zero-padded) variant used by the similarity ablation flag: offsets
// tau in [-(n-1), n-1] are returned as a vector of length 2n-1 with tau = 0
// at index n-1.
inline std::vector<double> linear_cross_correlation(std::vector<double> u, std::vector<double> v) {
    if (u.size() != v.size() || u.size() < 2)
        throw dimension_error("linear_cross_correlation: need equal lengths >= 2");
    if (!sigdetail::center_normalize(u) || !sigdetail::center_normalize(v))
        throw degenerate_signal_error("linear_cross_correlation: zero-variance input");
    const std::size_t n = u.size();
    std::size_t m = 1;
    while (m < 2 * n) m <<= 1;
    std::vector<cdouble> fu(m, cdouble(0.0, 0.0)), fv(m, cdouble(0.0, 0.0));
    for (std::size_t t = 0; t < n; ++t) {
        fu[t] = cdouble(u[t], 0.0);
        fv[t] = cdouble(v[t], 0.0);
    }
    fu = fft(std::move(fu));
    fv = fft(std::move(fv));
    for (std::size_t k = 0; k < m; ++k) fu[k] = std::conj(fu[k]) * fv[k];
    auto r = fft(std::move(fu), true);
    std::vector<double> out(2 * n - 1);
    // tau >= 0 at r[tau], tau < 0 wraps to r[m+tau]
    for (std::ptrdiff_t tau = -(std::ptrdiff_t)n + 1; tau < (std::ptrdiff_t)n; ++tau) {
        std::size_t idx = tau >= 0 ? static_cast<std::size_t>(tau) : m + tau;
        out[tau + n - 1] = r[idx].real();
    }
    return out;
}

// Linear-interpolation resampling: out[i] = x[i*speed]. The nominal sample
// rate is kept, so the underlying frequency scales by exactly `speed`.
// `f_max`, when known, enables the Nyquist guard speed*f_max < rate/2.
inline std::vector<double> resample_linear(const std::vector<double>& x, double sample_rate_hz,
                                           double speed, std::size_t out_len,
                                           std::optional<double> f_max = std::nullopt) {
    const std::size_t n = x.size();
    if (speed <= 0.0) throw contract_error("resample_linear: speed must be positive");
    if (out_len == 0) throw contract_error("resample_linear: out_len must be positive");
    if (static_cast<double>(out_len) * speed > static_cast<double>(n) ||
        static_cast<double>(out_len - 1) * speed > static_cast<double>(n - 1))
        throw insufficient_length_error("resample_linear: out_len " + std::to_string(out_len) +
                                        " at speed " + std::to_string(speed) + " exceeds input length " +
                                        std::to_string(n));
    if (f_max && speed * (*f_max) >= sample_rate_hz / 2.0)
        throw aliasing_error("resample_linear: speed " + std::to_string(speed) +
                             " pushes content past Nyquist");
    std::vector<double> out(out_len);
    for (std::size_t i = 0; i < out_len; ++i) {
        const double pos = static_cast<double>(i) * speed;
        const std::size_t lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        out[i] = frac == 0.0 ? x[lo] : (1.0 - frac) * x[lo] + frac * x[std::min(lo + 1, n - 1)];
    }
    return out;
}

inline RealSeries resample_linear(const RealSeries& x, double speed, std::size_t out_len,
                                  std::optional<double> f_max = std::nullopt) {
    return RealSeries{resample_linear(x.values, x.sample_rate_hz, speed, out_len, f_max),
                      x.sample_rate_hz};
}

// Frequency of the maximal non-DC PSD bin, refined by parabolic interpolation
// over log power when the peak is interior. Ties break to the lower bin.
inline double dominant_frequency(const RealSeries& z) {
    if (z.values.size() < 4) throw dimension_error("dominant_frequency: need at least 4 samples");
    const Spectrum s = psd(z);
    std::size_t best = 1;
    double best_p = s.bin_power[1];
    for (std::size_t k = 2; k < s.bin_power.size(); ++k)
        if (s.bin_power[k] > best_p) { best_p = s.bin_power[k]; best = k; }
    if (best_p <= 0.0) throw degenerate_signal_error("dominant_frequency: flat series");

    double delta = 0.0;
    if (best > 1 && best + 1 < s.bin_power.size() && s.bin_power[best - 1] > 0.0 &&
        s.bin_power[best + 1] > 0.0) {
        const double lm = std::log(s.bin_power[best - 1]);
        const double l0 = std::log(s.bin_power[best]);
        const double lp = std::log(s.bin_power[best + 1]);
        const double denom = lm - 2.0 * l0 + lp;
        if (denom < 0.0) delta = std::clamp(0.5 * (lm - lp) / denom, -0.5, 0.5);
    }
    return (static_cast<double>(best) + delta) * s.bin_width_hz;
}

}  // namespace simper
