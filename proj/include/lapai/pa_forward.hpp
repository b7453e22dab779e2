#pragma once

// Photoacoustic forward model. Scenes live in the (x, z) imaging plane with
// z = 0 at the illuminated surface and z growing into the sample. Absorbers
// are ideal points: channel k of the arc array receives
//     sum_i mu_a(i) * fluence(pos_i) * pulse(t - r_ik / c) / r_ik
// (Grueneisen factor folded into the arbitrary linear units). Every trace
// sample is rounded to the nearest float32 value, so frames survive the
// binary file format bit-for-bit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lapai/common.hpp"
#include "lapai/illumination.hpp"
#include "lapai/parallel.hpp"
#include "lapai/rng.hpp"

namespace lapai::pa {

struct Point2 {
    double x_mm = 0.0;
    double z_mm = 0.0;
};

struct Absorber {
    double x_mm = 0.0;
    double z_mm = 0.0;
    double mu_a = 1.0;       // 1/mm
    double radius_mm = 0.1;  // nominal source size; the acoustic model stays point-like
};

struct Segment {
    Point2 p0, q0;
};

struct Scene {
    std::vector<Absorber> absorbers;
    double background_mu_eff = 0.0;   // 1/mm, Beer-Lambert decay of fluence with depth
    double sound_speed_m_s = 1500.0;
    double fov_mm = 40.0;             // square field of view: x in [-fov/2, fov/2], z in [0, fov]

    // Ground truth carried by generated phantoms (empty for hand-built scenes).
    std::vector<Point2> truth_crossings;
    std::vector<Segment> truth_segments;

    double sound_speed_mm_us() const { return sound_speed_m_s / 1000.0; }
};

struct TransducerArray {
    std::size_t n_elements = 32;
    double arc_radius_mm = 40.0;
    double angular_span_deg = 120.0;
    double center_frequency_MHz = 2.5;
    double fractional_bandwidth = 0.6;  // -6 dB width / center frequency
    // Arc center; defaults put it at the center of the default field of view
    // so every absorber/element pair fits the acquisition window.
    double center_x_mm = 0.0;
    double center_z_mm = 20.0;
};

struct AcquisitionConfig {
    double sample_rate_MHz = 40.0;
    std::size_t n_samples = 2048;
    double t0_us = 0.0;
    std::optional<double> noise_snr_db;  // additive white Gaussian, relative to signal RMS
    std::uint64_t rng_seed = 0;
};

// channels x samples, row-major (channel-major), arbitrary linear units.
struct SignalFrame {
    std::size_t n_elements = 0;
    std::size_t n_samples = 0;
    double sample_rate_MHz = 0.0;
    double t0_us = 0.0;
    std::vector<double> data;

    double at(std::size_t element, std::size_t sample) const {
        return data[element * n_samples + sample];
    }
    double& at(std::size_t element, std::size_t sample) {
        return data[element * n_samples + sample];
    }
    double time_us(std::size_t sample) const {
        return t0_us + static_cast<double>(sample) / sample_rate_MHz;
    }
};

inline void validate(const Scene& scene) {
    if (!(scene.sound_speed_m_s > 0.0))
        throw ValidationError("scene: sound speed must be > 0");
    if (!(scene.fov_mm > 0.0)) throw ValidationError("scene: field of view must be > 0");
    if (!(scene.background_mu_eff >= 0.0))
        throw ValidationError("scene: background mu_eff must be >= 0");
    const double half = scene.fov_mm / 2.0;
    for (std::size_t i = 0; i < scene.absorbers.size(); ++i) {
        const Absorber& a = scene.absorbers[i];
        if (!(a.mu_a >= 0.0)) {
            std::ostringstream os;
            os << "scene: absorber " << i << " has negative mu_a";
            throw ValidationError(os.str());
        }
        if (std::abs(a.x_mm) > half || a.z_mm < 0.0 || a.z_mm > scene.fov_mm) {
            std::ostringstream os;
            os << "scene: absorber " << i << " at (" << a.x_mm << ", " << a.z_mm
               << ") mm outside the field of view";
            throw ValidationError(os.str());
        }
    }
}

inline void validate(const TransducerArray& a) {
    if (a.n_elements < 1) throw ValidationError("array: need at least one element");
    if (!(a.arc_radius_mm > 0.0)) throw ValidationError("array: arc radius must be > 0");
    if (!(a.angular_span_deg >= 0.0) || a.angular_span_deg > 360.0)
        throw ValidationError("array: angular span must be in [0, 360] degrees");
    if (!(a.center_frequency_MHz > 0.0))
        throw ValidationError("array: center frequency must be > 0");
    if (!(a.fractional_bandwidth > 0.0) || !(a.fractional_bandwidth < 2.0))
        throw ValidationError("array: fractional bandwidth must be in (0, 2)");
}

inline void validate(const AcquisitionConfig& acq, const TransducerArray& array) {
    validate(array);
    if (acq.n_samples < 2) throw ValidationError("acquisition: need at least 2 samples");
    const double guard =
        2.0 * array.center_frequency_MHz * (1.0 + array.fractional_bandwidth / 2.0);
    if (!(acq.sample_rate_MHz > guard)) {
        std::ostringstream os;
        os << "acquisition: sample rate " << acq.sample_rate_MHz
           << " MHz violates the Nyquist guard (> " << guard << " MHz required)";
        throw ValidationError(os.str());
    }
}

// Element centers, equally spaced in angle on the arc and mirror-symmetric
// about the probe axis x = center_x. Angle 0 is the arc apex (below the
// center, toward smaller z); positive angles move toward +x. The mirror
// half is constructed by explicit negation so symmetry is exact.
inline std::vector<Point2> element_positions(const TransducerArray& a) {
    validate(a);
    const std::size_t n = a.n_elements;
    std::vector<Point2> pts(n);
    if (n == 1) {
        pts[0] = {a.center_x_mm, a.center_z_mm - a.arc_radius_mm};
        return pts;
    }
    const double span = deg_to_rad(a.angular_span_deg);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double phi =
            span * (static_cast<double>(k) / static_cast<double>(n - 1) - 0.5);
        const double sx = a.arc_radius_mm * std::sin(phi);
        const double sz = a.arc_radius_mm * std::cos(phi);
        pts[k] = {a.center_x_mm + sx, a.center_z_mm - sz};
        pts[n - 1 - k] = {a.center_x_mm - sx, a.center_z_mm - sz};
    }
    if (n % 2 == 1)
        pts[n / 2] = {a.center_x_mm, a.center_z_mm - a.arc_radius_mm};
    return pts;
}

// Gaussian time-scale tau of the source wavelet envelope exp(-(t/tau)^2),
// chosen so the -6 dB spectral width over the center frequency equals the
// fractional bandwidth: tau = 2 sqrt(ln 2) / (pi * FBW * fc).
inline double envelope_sigma_us(const TransducerArray& a) {
    return 2.0 * std::sqrt(std::log(2.0)) /
           (kPi * a.fractional_bandwidth * a.center_frequency_MHz);
}

// Unit-peak band-limited source wavelet: cos(2 pi fc t) * exp(-(t/tau)^2),
// hard-truncated at 8 tau where the envelope is below 1.7e-28.
inline double pa_pulse(double t_us, const TransducerArray& a) {
    const double tau = envelope_sigma_us(a);
    const double u = t_us / tau;
    if (std::abs(u) > 8.0) return 0.0;
    return std::cos(2.0 * kPi * a.center_frequency_MHz * t_us) * std::exp(-u * u);
}

namespace detail {

// Round to the nearest float32 value (kept in a double container).
inline double quantize_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace detail

inline double frame_rms(const SignalFrame& frame) {
    if (frame.data.empty()) return 0.0;
    double sum_sq = 0.0;
    for (double v : frame.data) sum_sq += v * v;
    return std::sqrt(sum_sq / static_cast<double>(frame.data.size()));
}

// Add white Gaussian noise of absolute standard deviation `sigma` in place.
// Channel k draws from the substream (seed, k), so the result is independent
// of `threads`, and two frames salted with the same seed and sigma receive
// the identical noise realization (useful for paired scheme comparisons).
inline void add_noise(SignalFrame& frame, double sigma, std::uint64_t seed,
                      unsigned threads = 1) {
    if (!(sigma >= 0.0)) throw ValidationError("add_noise: sigma must be >= 0");
    if (sigma == 0.0) return;
    parallel_for(frame.n_elements, threads, [&](std::size_t k) {
        auto rng = substream(seed, k);
        double* trace = frame.data.data() + k * frame.n_samples;
        for (std::size_t s = 0; s < frame.n_samples; ++s)
            trace[s] = detail::quantize_f32(trace[s] + sigma * next_gaussian(rng));
    });
}

// Synthesize one frame of channel data. Deterministic for a fixed seed and
// independent of `threads`: channels are fully independent and channel k's
// noise comes from the substream (seed, k).
inline SignalFrame simulate(const Scene& scene, const illum::FluenceMap& fluence,
                            const TransducerArray& array, const AcquisitionConfig& acq,
                            unsigned threads = 1) {
    validate(scene);
    validate(acq, array);

    // Per-absorber source strength mu_a * fluence at the absorber position;
    // the surface map is sampled at (x, y=0) and decayed to depth z.
    const auto& g = fluence.grid;
    std::vector<double> strength(scene.absorbers.size());
    for (std::size_t i = 0; i < scene.absorbers.size(); ++i) {
        const Absorber& a = scene.absorbers[i];
        if (a.x_mm < g.x0_mm || a.x_mm > g.x_max() || 0.0 < g.y0_mm || 0.0 > g.y_max()) {
            std::ostringstream os;
            os << "simulate: absorber " << i << " at x = " << a.x_mm
               << " mm falls outside the fluence grid x in [" << g.x0_mm << ", "
               << g.x_max() << "] mm";
            throw ValidationError(os.str());
        }
        strength[i] = a.mu_a * fluence.sample(a.x_mm, 0.0) *
                      illum::depth_decay(scene.background_mu_eff, a.z_mm);
    }

    const auto elements = element_positions(array);
    const double c = scene.sound_speed_mm_us();
    const double tau = envelope_sigma_us(array);
    const double dt = 1.0 / acq.sample_rate_MHz;

    SignalFrame frame;
    frame.n_elements = array.n_elements;
    frame.n_samples = acq.n_samples;
    frame.sample_rate_MHz = acq.sample_rate_MHz;
    frame.t0_us = acq.t0_us;
    frame.data.assign(array.n_elements * acq.n_samples, 0.0);

    parallel_for(array.n_elements, threads, [&](std::size_t k) {
        double* trace = frame.data.data() + k * acq.n_samples;
        for (std::size_t i = 0; i < scene.absorbers.size(); ++i) {
            if (strength[i] == 0.0) continue;
            const Absorber& a = scene.absorbers[i];
            const double r = std::max(
                std::hypot(a.x_mm - elements[k].x_mm, a.z_mm - elements[k].z_mm), 1e-3);
            const double t_arr = r / c;
            const double amp = strength[i] / r;
            // The wavelet is zero beyond 8 tau; only touch that sample window.
            const double lo = (t_arr - 8.0 * tau - acq.t0_us) / dt;
            const double hi = (t_arr + 8.0 * tau - acq.t0_us) / dt;
            if (hi < 0.0 || lo > static_cast<double>(acq.n_samples - 1)) continue;
            const std::size_t s0 =
                static_cast<std::size_t>(std::max(0.0, std::ceil(lo)));
            const std::size_t s1 = static_cast<std::size_t>(
                std::min(static_cast<double>(acq.n_samples - 1), std::floor(hi)));
            for (std::size_t s = s0; s <= s1; ++s) {
                const double t = acq.t0_us + static_cast<double>(s) * dt;
                trace[s] += amp * pa_pulse(t - t_arr, array);
            }
        }
        for (std::size_t s = 0; s < acq.n_samples; ++s)
            trace[s] = detail::quantize_f32(trace[s]);
    });

    if (acq.noise_snr_db) {
        const double sigma =
            frame_rms(frame) * std::pow(10.0, -(*acq.noise_snr_db) / 20.0);
        add_noise(frame, sigma, acq.rng_seed, threads);
    }
    return frame;
}

// Per-sample sum of two frames with identical dimensions.
inline SignalFrame add_frames(const SignalFrame& a, const SignalFrame& b) {
    if (a.n_elements != b.n_elements || a.n_samples != b.n_samples ||
        a.sample_rate_MHz != b.sample_rate_MHz || a.t0_us != b.t0_us)
        throw ValidationError("add_frames: frame dimensions differ");
    SignalFrame out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

// Vessel-like phantom: one trunk segment through the field-of-view center
// plus n_crossings mutually parallel transversal segments, each cutting the
// trunk exactly once at a recorded location. Segments are rasterized into
// closely spaced point absorbers; the segment geometry and the crossing
// coordinates ride along as ground truth.
inline Scene make_vessel_phantom(std::size_t n_crossings, double fov_mm,
                                 std::uint64_t seed) {
    if (!(fov_mm > 0.0)) throw ValidationError("phantom: field of view must be > 0");
    const double half_extent = 0.25 * fov_mm;  // keep the phantom compact and centered
    const double cx = 0.0, cz = fov_mm / 2.0;
    const double kMinCrossingGap = 0.1 * half_extent;

    SplitMix64 rng(seed);
    // Near-perpendicular crossings keep each intersection compact when the
    // image is later thinned for node counting; the residual wobble avoids
    // pixel-lattice alignment.
    const double trunk_angle = deg_to_rad(25.0 + 10.0 * rng.next_unit());
    const double cross_angle = trunk_angle + deg_to_rad(82.0 + 6.0 * rng.next_unit());
    const Point2 u{std::cos(trunk_angle), std::sin(trunk_angle)};
    const Point2 v{std::cos(cross_angle), std::sin(cross_angle)};

    Scene scene;
    scene.fov_mm = fov_mm;

    const double trunk_half = half_extent;
    scene.truth_segments.push_back(
        {{cx - trunk_half * u.x_mm, cz - trunk_half * u.z_mm},
         {cx + trunk_half * u.x_mm, cz + trunk_half * u.z_mm}});

    if (n_crossings == 0) {
        // A second segment parallel to the trunk, offset sideways: no crossings.
        const double off = 0.3 * half_extent;
        const Point2 nrm{-u.z_mm, u.x_mm};
        scene.truth_segments.push_back(
            {{cx + off * nrm.x_mm - trunk_half * u.x_mm,
              cz + off * nrm.z_mm - trunk_half * u.z_mm},
             {cx + off * nrm.x_mm + trunk_half * u.x_mm,
              cz + off * nrm.z_mm + trunk_half * u.z_mm}});
    } else {
        const double margin = 0.1 * half_extent;
        const double usable = 2.0 * (trunk_half - margin);
        const double step =
            n_crossings > 1 ? usable / static_cast<double>(n_crossings - 1) : 0.0;
        if (n_crossings > 1 && step < kMinCrossingGap) {
            std::ostringstream os;
            os << "phantom: cannot place " << n_crossings
               << " crossings with spacing >= " << kMinCrossingGap << " mm on a "
               << fov_mm << " mm field of view";
            throw InfeasibleError(os.str());
        }
        const double jitter_amp = n_crossings > 1 ? 0.05 * step : 0.2 * usable;
        const double cross_half = 0.35 * half_extent;
        for (std::size_t j = 0; j < n_crossings; ++j) {
            const double base = n_crossings > 1
                                    ? -(trunk_half - margin) + static_cast<double>(j) * step
                                    : 0.0;
            const double t = base + jitter_amp * (2.0 * rng.next_unit() - 1.0);
            const Point2 c{cx + t * u.x_mm, cz + t * u.z_mm};
            scene.truth_crossings.push_back(c);
            scene.truth_segments.push_back(
                {{c.x_mm - cross_half * v.x_mm, c.z_mm - cross_half * v.z_mm},
                 {c.x_mm + cross_half * v.x_mm, c.z_mm + cross_half * v.z_mm}});
        }
    }

    // Rasterize each segment into point absorbers at sub-wavelength pitch.
    const double pitch = 0.25;
    for (const Segment& seg : scene.truth_segments) {
        const double len = std::hypot(seg.q0.x_mm - seg.p0.x_mm, seg.q0.z_mm - seg.p0.z_mm);
        const std::size_t n_pts = static_cast<std::size_t>(std::ceil(len / pitch)) + 1;
        for (std::size_t i = 0; i < n_pts; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(n_pts - 1);
            scene.absorbers.push_back({seg.p0.x_mm + t * (seg.q0.x_mm - seg.p0.x_mm),
                                       seg.p0.z_mm + t * (seg.q0.z_mm - seg.p0.z_mm), 1.0,
                                       0.1});
        }
    }
    validate(scene);
    return scene;
}

}  // namespace lapai::pa
