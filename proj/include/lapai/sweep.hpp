#pragma once

// Illumination-scheme sweep: for each (d, theta) pair, classify the scheme,
// compute the surface fluence, synthesize channel data from a shared phantom
// scene, optionally denoise, beamform, and score contrast and node count.
//
// Noise across schemes uses one ABSOLUTE floor: sigma is referenced to the
// largest noiseless frame RMS over the sweep (an electronic noise level does
// not change when the light does), and every scheme receives the identical
// seeded realization. Weakly illuminated schemes therefore sink toward the
// common floor — the mechanism behind "less light, poorer image" here.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lapai/common.hpp"
#include "lapai/illumination.hpp"
#include "lapai/metrics.hpp"
#include "lapai/pa_forward.hpp"
#include "lapai/recon.hpp"

namespace lapai::sweep {

struct SchemePair {
    double d_mm = 0.0;
    double theta_deg = 0.0;
};

struct SweepConfig {
    std::vector<SchemePair> schemes;     // evaluated in order
    illum::IlluminationScheme base;      // pivot/energy defaults; d, theta overridden
    double surface_dx_mm = 0.5;          // fluence grid resolution
    double surface_dy_mm = 0.5;
    pa::Scene scene;                     // shared phantom (with ground truth)
    pa::TransducerArray array;
    pa::AcquisitionConfig acq;           // noise_snr_db = floor in dB below max RMS
    recon::ReconGrid grid;               // reconstruction grid
    bool denoise = true;
    std::size_t wavelet_levels = 4;
    recon::EnvelopeMode envelope = recon::EnvelopeMode::analytic;
    metrics::ContrastKind contrast_kind = metrics::ContrastKind::weber;
    double node_threshold_fraction = 0.5;
    double roi_halfwidth_mm = 0.4;
    double bg_clearance_mm = 2.0;
    double bg_radius_mm = 14.0;
    unsigned threads = 1;
};

struct SweepRow {
    double d_mm = 0.0;
    double theta_deg = 0.0;
    illum::SchemeClass scheme_class = illum::SchemeClass::hybrid;
    double contrast = 0.0;
    int node_count = 0;
    bool best = false;
};

struct SweepResult {
    std::vector<SweepRow> rows;                // sweep-list order
    std::vector<recon::ReconImage> images;     // same order
    std::size_t best_index = 0;                // maximal contrast (first on ties)
};

// Smallest surface grid covering both beam footprints (centers +/- 2d) and
// the imaged field of view, so fluence evaluation and the absorber coverage
// precondition are satisfied for every scheme.
inline illum::SurfaceGrid surface_grid_for(const illum::IlluminationScheme& s,
                                           double fov_mm, double dx, double dy) {
    const auto [xl, xr] = illum::spot_centers(s);
    const double margin = 2.0 * s.d_mm;
    const double x_lo = std::min({xl - margin, xr - margin, -fov_mm / 2.0 - 1.0});
    const double x_hi = std::max({xl + margin, xr + margin, fov_mm / 2.0 + 1.0});
    const double y_hi = margin + 1.0;
    illum::SurfaceGrid g;
    g.dx_mm = dx;
    g.dy_mm = dy;
    g.x0_mm = x_lo;
    g.y0_mm = -y_hi;
    g.nx = static_cast<std::size_t>(std::ceil((x_hi - x_lo) / dx)) + 2;
    g.ny = static_cast<std::size_t>(std::ceil(2.0 * y_hi / dy)) + 2;
    return g;
}

inline SweepResult run_sweep(const SweepConfig& config) {
    if (config.schemes.empty())
        throw ValidationError("sweep: scheme list is empty; nothing to evaluate");
    pa::validate(config.scene);
    pa::validate(config.acq, config.array);
    recon::validate(config.grid);

    const std::size_t n = config.schemes.size();
    SweepResult result;
    result.rows.resize(n);
    result.images.resize(n);

    // Pass 1: classify, light, and synthesize every scheme without noise.
    // Any module failure is rethrown naming the offending (d, theta).
    std::vector<pa::SignalFrame> frames(n);
    pa::AcquisitionConfig clean_acq = config.acq;
    clean_acq.noise_snr_db.reset();
    double max_rms = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        illum::IlluminationScheme scheme = config.base;
        scheme.d_mm = config.schemes[i].d_mm;
        scheme.theta_deg = config.schemes[i].theta_deg;
        try {
            result.rows[i].d_mm = scheme.d_mm;
            result.rows[i].theta_deg = scheme.theta_deg;
            result.rows[i].scheme_class = illum::classify_scheme(scheme);
            const illum::SurfaceGrid sg = surface_grid_for(
                scheme, config.scene.fov_mm, config.surface_dx_mm, config.surface_dy_mm);
            const illum::FluenceMap fluence = illum::fluence_surface(scheme, sg);
            frames[i] =
                pa::simulate(config.scene, fluence, config.array, clean_acq, config.threads);
        } catch (const std::exception& e) {
            std::ostringstream os;
            os << "sweep scheme (d = " << scheme.d_mm << " mm, theta = "
               << scheme.theta_deg << " deg): " << e.what();
            throw ValidationError(os.str());
        }
        max_rms = std::max(max_rms, pa::frame_rms(frames[i]));
    }

    // Pass 2: common absolute noise floor, identical realization per scheme.
    if (config.acq.noise_snr_db) {
        const double sigma =
            max_rms * std::pow(10.0, -(*config.acq.noise_snr_db) / 20.0);
        for (std::size_t i = 0; i < n; ++i)
            pa::add_noise(frames[i], sigma, config.acq.rng_seed, config.threads);
    }

    // Pass 3: reconstruct and score against the shared ground-truth masks.
    const auto [roi, bg] =
        metrics::make_phantom_masks(config.scene, config.grid, config.roi_halfwidth_mm,
                                    config.bg_clearance_mm, config.bg_radius_mm);
    for (std::size_t i = 0; i < n; ++i) {
        try {
            result.images[i] = recon::pipeline(
                frames[i], config.array, config.grid, config.scene.sound_speed_m_s,
                config.denoise, config.wavelet_levels, config.envelope, config.threads);
            result.rows[i].contrast =
                metrics::contrast(result.images[i], roi, bg, config.contrast_kind);
            result.rows[i].node_count =
                metrics::count_nodes(result.images[i], config.node_threshold_fraction);
        } catch (const std::exception& e) {
            std::ostringstream os;
            os << "sweep scheme (d = " << config.schemes[i].d_mm << " mm, theta = "
               << config.schemes[i].theta_deg << " deg): " << e.what();
            throw ValidationError(os.str());
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (result.rows[i].contrast > result.rows[best].contrast) best = i;
    result.best_index = best;
    result.rows[best].best = true;
    return result;
}

inline std::string sweep_csv(const SweepResult& result) {
    auto g9 = [](double v) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%.9g", v);
        return std::string(buf);
    };
    std::ostringstream os;
    os << "d_mm,theta_deg,class,contrast,node_count,best\n";
    for (const auto& r : result.rows) {
        os << g9(r.d_mm) << "," << g9(r.theta_deg) << "," << illum::to_string(r.scheme_class)
           << "," << g9(r.contrast) << "," << r.node_count << "," << (r.best ? 1 : 0)
           << "\n";
    }
    return os.str();
}

}  // namespace lapai::sweep
