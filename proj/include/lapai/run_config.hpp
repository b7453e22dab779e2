#pragma once

// JSON run configuration. Every key is optional and falls back to the
// defaults baked into RunConfig (which reproduce the stock six-scheme
// study); unknown sections or keys are rejected so typos cannot silently
// revert a value to its default.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lapai/common.hpp"
#include "lapai/illumination.hpp"
#include "lapai/pa_forward.hpp"
#include "lapai/recon.hpp"
#include "lapai/sweep.hpp"
#include "lapai/zoom_optics.hpp"

namespace lapai::config {

struct RunConfig {
    std::uint64_t seed = 20240817;  // governs phantom geometry and noise

    // zoom
    zoom::ZoomConfig zoom = zoom::demo_prescription();
    std::size_t zoom_samples = 200;

    // illumination (d/theta double as the single-scheme defaults)
    illum::IlluminationScheme illumination{};
    double surface_dx_mm = 0.5;
    double surface_dy_mm = 0.5;

    // scene
    std::size_t n_crossings = 8;
    double fov_mm = 40.0;
    double background_mu_eff = 0.0;   // 1/mm
    double sound_speed_m_s = 1500.0;

    // array + acquisition
    pa::TransducerArray array{};
    pa::AcquisitionConfig acq{};      // noise_snr_db: see ctor note below

    // reconstruction
    double recon_pitch_mm = 0.1;
    bool denoise = true;
    std::size_t wavelet_levels = 4;
    recon::EnvelopeMode envelope = recon::EnvelopeMode::analytic;

    // metrics
    metrics::ContrastKind contrast_kind = metrics::ContrastKind::weber;
    double node_threshold_fraction = 0.5;
    double roi_halfwidth_mm = 0.4;
    double bg_clearance_mm = 2.0;
    double bg_radius_mm = 14.0;

    // sweep (parallel lists zipped into (d, theta) pairs)
    std::vector<double> sweep_d_mm = {12.0, 16.0, 20.0, 20.0, 20.0, 20.0};
    std::vector<double> sweep_theta_deg = {45.0, 45.0, 45.0, 50.0, 60.0, 87.0};

    RunConfig() {
        // Default noise floor: -3 dB re the strongest sweep frame (single-shot
        // data below the electronic floor; beamforming gain recovers the
        // bright schemes). "noise_snr_db": null disables noise entirely.
        acq.noise_snr_db = -3.0;
        acq.rng_seed = seed;
    }
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void bad_key(const std::string& section, const std::string& key) {
    throw ValidationError("config: unknown key '" + key + "' in section '" + section +
                          "'");
}

template <typename T>
T get_as(const json& j, const std::string& section, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config: key '" + key + "' in section '" + section +
                              "' has the wrong type");
    }
}

inline double num(const json& j, const std::string& section, const std::string& key) {
    if (!j.is_number())
        throw ValidationError("config: key '" + key + "' in section '" + section +
                              "' must be a number");
    return j.get<double>();
}

inline std::size_t count(const json& j, const std::string& section,
                         const std::string& key) {
    if (!j.is_number_unsigned())
        throw ValidationError("config: key '" + key + "' in section '" + section +
                              "' must be a nonnegative integer");
    return j.get<std::size_t>();
}

inline void parse_zoom(const json& section, RunConfig& out) {
    std::optional<double> d1_long;
    for (const auto& [key, value] : section.items()) {
        if (key == "f1_mm") out.zoom.f1 = num(value, "zoom", key);
        else if (key == "f2_mm") out.zoom.f2 = num(value, "zoom", key);
        else if (key == "f3_mm") out.zoom.f3 = num(value, "zoom", key);
        else if (key == "ratio") out.zoom.ratio = num(value, "zoom", key);
        else if (key == "m2_long") out.zoom.m2_long = num(value, "zoom", key);
        else if (key == "m1_long") out.zoom.m1_long = num(value, "zoom", key);
        else if (key == "d1_long_mm") d1_long = num(value, "zoom", key);
        else if (key == "n_samples") out.zoom_samples = count(value, "zoom", key);
        else bad_key("zoom", key);
    }
    // The afocal geometry determines the long-focus L1-L2 gap; accept an
    // explicit value only if it agrees.
    const double derived =
        out.zoom.f1 + out.zoom.f2 - out.zoom.f2 / out.zoom.m2_long;
    if (d1_long && std::abs(*d1_long - derived) > 1e-6)
        throw ValidationError(
            "config: zoom.d1_long_mm contradicts the prescription (expected " +
            std::to_string(derived) + " mm)");
    out.zoom.d1_long = derived;
}

inline void parse_illumination(const json& section, RunConfig& out) {
    for (const auto& [key, value] : section.items()) {
        if (key == "d_mm") out.illumination.d_mm = num(value, "illumination", key);
        else if (key == "theta_deg")
            out.illumination.theta_deg = num(value, "illumination", key);
        else if (key == "pivot_offset_a_mm")
            out.illumination.pivot_offset_a = num(value, "illumination", key);
        else if (key == "pivot_height_h_mm")
            out.illumination.pivot_height_h = num(value, "illumination", key);
        else if (key == "pulse_energy_mJ")
            out.illumination.pulse_energy_mJ = num(value, "illumination", key);
        else if (key == "surface_dx_mm") out.surface_dx_mm = num(value, "illumination", key);
        else if (key == "surface_dy_mm") out.surface_dy_mm = num(value, "illumination", key);
        else bad_key("illumination", key);
    }
}

inline void parse_scene(const json& section, RunConfig& out) {
    for (const auto& [key, value] : section.items()) {
        if (key == "n_crossings") out.n_crossings = count(value, "scene", key);
        else if (key == "fov_mm") out.fov_mm = num(value, "scene", key);
        else if (key == "background_mu_eff_per_mm")
            out.background_mu_eff = num(value, "scene", key);
        else if (key == "sound_speed_m_s") out.sound_speed_m_s = num(value, "scene", key);
        else bad_key("scene", key);
    }
}

inline void parse_array(const json& section, RunConfig& out) {
    for (const auto& [key, value] : section.items()) {
        if (key == "n_elements") out.array.n_elements = count(value, "array", key);
        else if (key == "arc_radius_mm") out.array.arc_radius_mm = num(value, "array", key);
        else if (key == "angular_span_deg")
            out.array.angular_span_deg = num(value, "array", key);
        else if (key == "center_frequency_MHz")
            out.array.center_frequency_MHz = num(value, "array", key);
        else if (key == "fractional_bandwidth")
            out.array.fractional_bandwidth = num(value, "array", key);
        else if (key == "center_x_mm") out.array.center_x_mm = num(value, "array", key);
        else if (key == "center_z_mm") out.array.center_z_mm = num(value, "array", key);
        else bad_key("array", key);
    }
}

inline void parse_acquisition(const json& section, RunConfig& out) {
    for (const auto& [key, value] : section.items()) {
        if (key == "sample_rate_MHz") out.acq.sample_rate_MHz = num(value, "acquisition", key);
        else if (key == "n_samples") out.acq.n_samples = count(value, "acquisition", key);
        else if (key == "t0_us") out.acq.t0_us = num(value, "acquisition", key);
        else if (key == "noise_snr_db") {
            if (value.is_null()) out.acq.noise_snr_db.reset();
            else out.acq.noise_snr_db = num(value, "acquisition", key);
        } else bad_key("acquisition", key);
    }
}

inline void parse_recon(const json& section, RunConfig& out) {
    for (const auto& [key, value] : section.items()) {
        if (key == "pitch_mm") out.recon_pitch_mm = num(value, "recon", key);
        else if (key == "denoise") {
            if (!value.is_boolean())
                throw ValidationError("config: key 'denoise' in section 'recon' must be a boolean");
            out.denoise = value.get<bool>();
        } else if (key == "wavelet_levels") out.wavelet_levels = count(value, "recon", key);
        else if (key == "envelope") {
            const auto s = get_as<std::string>(value, "recon", key);
            if (s == "analytic") out.envelope = recon::EnvelopeMode::analytic;
            else if (s == "rectified") out.envelope = recon::EnvelopeMode::rectified;
            else
                throw ValidationError(
                    "config: recon.envelope must be 'analytic' or 'rectified'");
        } else bad_key("recon", key);
    }
}

inline void parse_metrics(const json& section, RunConfig& out) {
    for (const auto& [key, value] : section.items()) {
        if (key == "contrast") {
            const auto s = get_as<std::string>(value, "metrics", key);
            if (s == "weber") out.contrast_kind = metrics::ContrastKind::weber;
            else if (s == "michelson") out.contrast_kind = metrics::ContrastKind::michelson;
            else
                throw ValidationError(
                    "config: metrics.contrast must be 'weber' or 'michelson'");
        } else if (key == "node_threshold_fraction")
            out.node_threshold_fraction = num(value, "metrics", key);
        else if (key == "roi_halfwidth_mm") out.roi_halfwidth_mm = num(value, "metrics", key);
        else if (key == "bg_clearance_mm") out.bg_clearance_mm = num(value, "metrics", key);
        else if (key == "bg_radius_mm") out.bg_radius_mm = num(value, "metrics", key);
        else bad_key("metrics", key);
    }
}

inline void parse_sweep(const json& section, RunConfig& out) {
    bool saw_d = false, saw_theta = false;
    for (const auto& [key, value] : section.items()) {
        if (key == "d_mm" || key == "theta_deg") {
            if (!value.is_array())
                throw ValidationError("config: sweep." + key + " must be an array of numbers");
            std::vector<double> list;
            for (const auto& item : value) list.push_back(num(item, "sweep", key));
            if (key == "d_mm") {
                out.sweep_d_mm = std::move(list);
                saw_d = true;
            } else {
                out.sweep_theta_deg = std::move(list);
                saw_theta = true;
            }
        } else bad_key("sweep", key);
    }
    if (saw_d != saw_theta)
        throw ValidationError("config: sweep.d_mm and sweep.theta_deg come as a pair");
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& json_text) {
    RunConfig out;
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    if (!root.is_object()) throw ValidationError("config: top level must be an object");
    for (const auto& [key, value] : root.items()) {
        if (key == "seed") {
            if (!value.is_number_unsigned())
                throw ValidationError("config: seed must be a nonnegative integer");
            out.seed = value.get<std::uint64_t>();
        } else if (key == "zoom") detail::parse_zoom(value, out);
        else if (key == "illumination") detail::parse_illumination(value, out);
        else if (key == "scene") detail::parse_scene(value, out);
        else if (key == "array") detail::parse_array(value, out);
        else if (key == "acquisition") detail::parse_acquisition(value, out);
        else if (key == "recon") detail::parse_recon(value, out);
        else if (key == "metrics") detail::parse_metrics(value, out);
        else if (key == "sweep") detail::parse_sweep(value, out);
        else throw ValidationError("config: unknown section '" + key + "'");
    }
    if (out.sweep_d_mm.size() != out.sweep_theta_deg.size())
        throw ValidationError(
            "config: sweep.d_mm and sweep.theta_deg must have the same length");
    out.acq.rng_seed = out.seed;
    return out;
}

// Derived pieces -------------------------------------------------------

inline pa::Scene make_scene(const RunConfig& c) {
    pa::Scene scene = pa::make_vessel_phantom(c.n_crossings, c.fov_mm, c.seed);
    scene.background_mu_eff = c.background_mu_eff;
    scene.sound_speed_m_s = c.sound_speed_m_s;
    return scene;
}

inline recon::ReconGrid make_recon_grid(const RunConfig& c) {
    recon::ReconGrid g;
    g.pitch_mm = c.recon_pitch_mm;
    g.nx = static_cast<std::size_t>(std::floor(c.fov_mm / c.recon_pitch_mm)) + 1;
    g.ny = g.nx;
    g.origin_x_mm = -c.fov_mm / 2.0;
    g.origin_y_mm = 0.0;
    return g;
}

inline sweep::SweepConfig make_sweep_config(const RunConfig& c, unsigned threads) {
    sweep::SweepConfig s;
    s.schemes.reserve(c.sweep_d_mm.size());
    for (std::size_t i = 0; i < c.sweep_d_mm.size(); ++i)
        s.schemes.push_back({c.sweep_d_mm[i], c.sweep_theta_deg[i]});
    s.base = c.illumination;
    s.surface_dx_mm = c.surface_dx_mm;
    s.surface_dy_mm = c.surface_dy_mm;
    s.scene = make_scene(c);
    s.array = c.array;
    s.acq = c.acq;
    s.grid = make_recon_grid(c);
    s.denoise = c.denoise;
    s.wavelet_levels = c.wavelet_levels;
    s.envelope = c.envelope;
    s.contrast_kind = c.contrast_kind;
    s.node_threshold_fraction = c.node_threshold_fraction;
    s.roi_halfwidth_mm = c.roi_halfwidth_mm;
    s.bg_clearance_mm = c.bg_clearance_mm;
    s.bg_radius_mm = c.bg_radius_mm;
    s.threads = threads;
    return s;
}

}  // namespace lapai::config
