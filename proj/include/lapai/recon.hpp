#pragma once

// Image formation: optional adaptive wavelet denoising, delay-and-sum
// backprojection onto a pixel grid, and envelope detection along depth
// columns. Grids live in the scene's (x, z) plane: pixel (ix, iy) sits at
// (origin_x + ix*pitch, origin_y + iy*pitch) with iy indexing depth.

#include <fftw3.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include "lapai/common.hpp"
#include "lapai/pa_forward.hpp"
#include "lapai/parallel.hpp"
#include "lapai/wavelet.hpp"

namespace lapai::recon {

struct ReconGrid {
    std::size_t nx = 0, ny = 0;
    double pitch_mm = 0.1;
    double origin_x_mm = 0.0;  // x of pixel column 0
    double origin_y_mm = 0.0;  // z of pixel row 0

    double x(std::size_t ix) const { return origin_x_mm + static_cast<double>(ix) * pitch_mm; }
    double z(std::size_t iy) const { return origin_y_mm + static_cast<double>(iy) * pitch_mm; }
};

// Pre-envelope (signed, radio-frequency) delay-and-sum image, x fastest.
struct RfImage {
    ReconGrid grid;
    std::vector<double> values;
};

// Envelope image: nonnegative, finite, x fastest.
struct ReconImage {
    ReconGrid grid;
    std::vector<double> values;

    double at(std::size_t ix, std::size_t iy) const { return values[iy * grid.nx + ix]; }
};

enum class EnvelopeMode {
    analytic,   // magnitude of the FFT-based analytic signal per depth column
    rectified,  // plain absolute value (fallback without quadrature)
};

inline void validate(const ReconGrid& g) {
    if (g.nx < 1 || g.ny < 1) throw ValidationError("recon grid: nx, ny must be >= 1");
    if (!(g.pitch_mm > 0.0)) throw ValidationError("recon grid: pitch must be > 0");
}

// Per-channel wavelet shrinkage; output dimensions equal input dimensions.
inline pa::SignalFrame wavelet_denoise(const pa::SignalFrame& frame, std::size_t levels = 4,
                                       unsigned threads = 1) {
    if (frame.n_samples < (std::size_t{1} << levels))
        throw ValidationError("wavelet_denoise: too few samples for the level count");
    pa::SignalFrame out = frame;
    parallel_for(frame.n_elements, threads, [&](std::size_t k) {
        std::vector<double> trace(frame.data.begin() + k * frame.n_samples,
                                  frame.data.begin() + (k + 1) * frame.n_samples);
        const std::vector<double> clean = wav::denoise_trace(trace, levels);
        std::copy(clean.begin(), clean.end(), out.data.begin() + k * frame.n_samples);
    });
    return out;
}

// Delay-and-sum backprojection. Pixel value = sum over channels of the trace
// linearly interpolated at the time of flight |pixel - element| / c; delays
// outside the acquisition window contribute zero. Channel order is fixed, so
// the result is independent of the thread count.
inline RfImage das_rf(const pa::SignalFrame& frame, const pa::TransducerArray& array,
                      const ReconGrid& grid, double sound_speed_m_s, unsigned threads = 1) {
    validate(grid);
    if (frame.n_elements != array.n_elements)
        throw ValidationError("das: frame channel count does not match the array");
    if (!(sound_speed_m_s > 0.0)) throw ValidationError("das: sound speed must be > 0");
    const auto elements = pa::element_positions(array);
    const double c = sound_speed_m_s / 1000.0;  // mm/us
    const double last = static_cast<double>(frame.n_samples - 1);

    RfImage img;
    img.grid = grid;
    img.values.assign(grid.nx * grid.ny, 0.0);
    parallel_for(grid.ny, threads, [&](std::size_t iy) {
        const double z = grid.z(iy);
        for (std::size_t ix = 0; ix < grid.nx; ++ix) {
            const double x = grid.x(ix);
            double acc = 0.0;
            for (std::size_t k = 0; k < elements.size(); ++k) {
                const double r = std::hypot(x - elements[k].x_mm, z - elements[k].z_mm);
                const double s = (r / c - frame.t0_us) * frame.sample_rate_MHz;
                if (s < 0.0 || s > last) continue;
                const std::size_t i0 = static_cast<std::size_t>(s);
                const std::size_t i1 = std::min(i0 + 1, frame.n_samples - 1);
                const double f = s - static_cast<double>(i0);
                acc += (1.0 - f) * frame.at(k, i0) + f * frame.at(k, i1);
            }
            img.values[iy * grid.nx + ix] = acc;
        }
    });
    return img;
}

namespace detail {

// Analytic-signal magnitude of one real column, FFT-based quadrature.
// Single-threaded by design: FFTW planning is not thread-safe and the
// column count is small next to the DAS cost.
inline void analytic_envelope_columns(const RfImage& rf, std::vector<double>& out) {
    const std::size_t nx = rf.grid.nx, ny = rf.grid.ny;
    if (ny == 1) {
        for (std::size_t ix = 0; ix < nx; ++ix) out[ix] = std::abs(rf.values[ix]);
        return;
    }
    fftw_complex* buf = fftw_alloc_complex(ny);
    fftw_complex* spec = fftw_alloc_complex(ny);
    fftw_plan fwd = fftw_plan_dft_1d(static_cast<int>(ny), buf, spec, FFTW_FORWARD,
                                     FFTW_ESTIMATE);
    fftw_plan inv = fftw_plan_dft_1d(static_cast<int>(ny), spec, buf, FFTW_BACKWARD,
                                     FFTW_ESTIMATE);
    for (std::size_t ix = 0; ix < nx; ++ix) {
        for (std::size_t iy = 0; iy < ny; ++iy) {
            buf[iy][0] = rf.values[iy * nx + ix];
            buf[iy][1] = 0.0;
        }
        fftw_execute(fwd);
        // Analytic-signal filter: keep DC (and Nyquist for even ny), double
        // positive frequencies, zero negative frequencies.
        for (std::size_t iy = 1; iy < (ny + 1) / 2; ++iy) {
            spec[iy][0] *= 2.0;
            spec[iy][1] *= 2.0;
        }
        for (std::size_t iy = ny / 2 + 1; iy < ny; ++iy) {
            spec[iy][0] = 0.0;
            spec[iy][1] = 0.0;
        }
        fftw_execute(inv);
        const double scale = 1.0 / static_cast<double>(ny);
        for (std::size_t iy = 0; iy < ny; ++iy)
            out[iy * nx + ix] =
                scale * std::hypot(buf[iy][0], buf[iy][1]);
    }
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
    fftw_free(buf);
    fftw_free(spec);
}

}  // namespace detail

inline ReconImage envelope(const RfImage& rf, EnvelopeMode mode = EnvelopeMode::analytic) {
    ReconImage img;
    img.grid = rf.grid;
    img.values.assign(rf.values.size(), 0.0);
    if (mode == EnvelopeMode::rectified) {
        for (std::size_t i = 0; i < rf.values.size(); ++i)
            img.values[i] = std::abs(rf.values[i]);
    } else {
        detail::analytic_envelope_columns(rf, img.values);
    }
    return img;
}

inline ReconImage das_reconstruct(const pa::SignalFrame& frame,
                                  const pa::TransducerArray& array, const ReconGrid& grid,
                                  double sound_speed_m_s,
                                  EnvelopeMode mode = EnvelopeMode::analytic,
                                  unsigned threads = 1) {
    return envelope(das_rf(frame, array, grid, sound_speed_m_s, threads), mode);
}

inline ReconImage pipeline(const pa::SignalFrame& frame, const pa::TransducerArray& array,
                           const ReconGrid& grid, double sound_speed_m_s, bool denoise,
                           std::size_t levels = 4,
                           EnvelopeMode mode = EnvelopeMode::analytic,
                           unsigned threads = 1) {
    if (!denoise) return das_reconstruct(frame, array, grid, sound_speed_m_s, mode, threads);
    return das_reconstruct(wavelet_denoise(frame, levels, threads), array, grid,
                           sound_speed_m_s, mode, threads);
}

}  // namespace lapai::recon
