#pragma once

// Periodized orthogonal Daubechies-4 wavelet transform (8-tap filters, four
// vanishing moments) plus universal-threshold soft shrinkage. The transform
// is orthonormal on even lengths, so Parseval holds level by level and
// shrinkage can only remove coefficient energy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "lapai/common.hpp"

namespace lapai::wav {

// Orthonormal scaling filter (sums to sqrt(2)); the detail filter is the
// quadrature mirror g[k] = (-1)^k h[7-k].
inline constexpr double kDb4[8] = {
    0.23037781330885523,  0.7148465705525415,   0.6308807679295904,
    -0.02798376941698385, -0.18703481171888114, 0.030841381835986965,
    0.032883011666982945, -0.010597401784997278};

inline double detail_tap(std::size_t k) {
    return (k % 2 == 0 ? 1.0 : -1.0) * kDb4[7 - k];
}

struct WaveletCoeffs {
    std::vector<double> approx;                // coarsest approximation band
    std::vector<std::vector<double>> details;  // details[0] = finest level
    std::size_t original_length = 0;           // pre-padding sample count
};

namespace detail {

// One analysis split of an even-length periodic signal.
inline void dwt_step(const std::vector<double>& x, std::vector<double>& approx,
                     std::vector<double>& det) {
    const std::size_t n = x.size();
    const std::size_t half = n / 2;
    approx.assign(half, 0.0);
    det.assign(half, 0.0);
    for (std::size_t i = 0; i < half; ++i) {
        double a = 0.0, d = 0.0;
        for (std::size_t k = 0; k < 8; ++k) {
            const double v = x[(2 * i + k) % n];
            a += kDb4[k] * v;
            d += detail_tap(k) * v;
        }
        approx[i] = a;
        det[i] = d;
    }
}

// Transposed synthesis: exact inverse of dwt_step.
inline std::vector<double> idwt_step(const std::vector<double>& approx,
                                     const std::vector<double>& det) {
    const std::size_t n = 2 * approx.size();
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 0; i < approx.size(); ++i)
        for (std::size_t k = 0; k < 8; ++k)
            x[(2 * i + k) % n] += kDb4[k] * approx[i] + detail_tap(k) * det[i];
    return x;
}

}  // namespace detail

// Multi-level forward transform. Inputs whose length is not a multiple of
// 2^levels are periodically extended (wrap padding) up to the next multiple;
// the original length is recorded so the inverse can truncate back.
inline WaveletCoeffs forward(const std::vector<double>& signal, std::size_t levels) {
    if (levels < 1) throw ValidationError("wavelet: levels must be >= 1");
    const std::size_t block = std::size_t{1} << levels;
    if (signal.size() < block)
        throw ValidationError("wavelet: too few samples for the requested level count");
    WaveletCoeffs c;
    c.original_length = signal.size();
    std::vector<double> cur = signal;
    if (cur.size() % block != 0) {
        const std::size_t padded = ((cur.size() / block) + 1) * block;
        cur.reserve(padded);
        for (std::size_t i = cur.size(); i < padded; ++i)
            cur.push_back(signal[i % signal.size()]);
    }
    for (std::size_t l = 0; l < levels; ++l) {
        std::vector<double> approx, det;
        detail::dwt_step(cur, approx, det);
        c.details.push_back(std::move(det));
        cur = std::move(approx);
    }
    c.approx = std::move(cur);
    return c;
}

inline std::vector<double> inverse(const WaveletCoeffs& c) {
    std::vector<double> cur = c.approx;
    for (std::size_t l = c.details.size(); l-- > 0;)
        cur = detail::idwt_step(cur, c.details[l]);
    cur.resize(c.original_length);
    return cur;
}

inline double coefficient_energy(const WaveletCoeffs& c) {
    double e = 0.0;
    for (double v : c.approx) e += v * v;
    for (const auto& band : c.details)
        for (double v : band) e += v * v;
    return e;
}

namespace detail {

inline double median_abs(std::vector<double> v) {
    for (double& x : v) x = std::abs(x);
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        // Lower middle element = max of the first half after partitioning.
        double lower = *std::max_element(v.begin(), v.begin() + mid);
        m = 0.5 * (m + lower);
    }
    return m;
}

}  // namespace detail

// Adaptive soft shrinkage: per level, T = sigma_hat * sqrt(2 ln n) with the
// robust noise estimate sigma_hat = median(|detail|) / 0.6745; n is the
// original trace length. The approximation band is left untouched.
inline std::vector<double> denoise_trace(const std::vector<double>& signal,
                                         std::size_t levels) {
    WaveletCoeffs c = forward(signal, levels);
    const double ln_term =
        std::sqrt(2.0 * std::log(static_cast<double>(c.original_length)));
    for (auto& band : c.details) {
        if (band.empty()) continue;
        const double sigma = detail::median_abs(band) / 0.6745;
        const double t = sigma * ln_term;
        for (double& v : band) {
            const double mag = std::abs(v) - t;
            v = mag > 0.0 ? (v < 0.0 ? -mag : mag) : 0.0;
        }
    }
    return inverse(c);
}

}  // namespace lapai::wav
