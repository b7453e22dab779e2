#pragma once

// Image quality metrics: region contrast, vessel-crossing (node) counting on
// a thinned binary skeleton, and trace SNR. Also hosts the ground-truth
// rasterizer and mask builder used to evaluate reconstructions of generated
// phantoms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lapai/common.hpp"
#include "lapai/illumination.hpp"
#include "lapai/pa_forward.hpp"
#include "lapai/recon.hpp"

namespace lapai::metrics {

using Mask = std::vector<std::uint8_t>;  // 1 = selected, same layout as image values

enum class ContrastKind { weber, michelson };

struct MetricsReport {
    illum::IlluminationScheme scheme;
    double contrast = 0.0;
    int node_count = 0;
    std::string roi_spec;
};

// Region contrast between a structure mask and a background mask.
// Weber: (mean_roi - mean_bg) / mean_bg. Michelson: difference over sum.
inline double contrast(const recon::ReconImage& image, const Mask& roi, const Mask& bg,
                       ContrastKind kind = ContrastKind::weber) {
    if (roi.size() != image.values.size() || bg.size() != image.values.size())
        throw ValidationError("contrast: mask size does not match the image");
    double roi_sum = 0.0, bg_sum = 0.0;
    std::size_t roi_n = 0, bg_n = 0;
    for (std::size_t i = 0; i < image.values.size(); ++i) {
        if (roi[i] && bg[i])
            throw ValidationError("contrast: roi and background masks overlap");
        if (roi[i]) {
            roi_sum += image.values[i];
            ++roi_n;
        } else if (bg[i]) {
            bg_sum += image.values[i];
            ++bg_n;
        }
    }
    if (roi_n == 0 || bg_n == 0)
        throw ValidationError("contrast: roi and background masks must be nonempty");
    const double mean_roi = roi_sum / static_cast<double>(roi_n);
    const double mean_bg = bg_sum / static_cast<double>(bg_n);
    if (kind == ContrastKind::michelson) {
        if (mean_roi + mean_bg <= 0.0) throw ValidationError("contrast: degenerate background");
        return (mean_roi - mean_bg) / (mean_roi + mean_bg);
    }
    if (!(mean_bg > 0.0)) throw ValidationError("contrast: degenerate background");
    return (mean_roi - mean_bg) / mean_bg;
}

namespace detail {

// One Zhang-Suen thinning pass; `phase` selects the two sub-iterations.
// Returns true if any pixel was removed. Border pixels see zeros outside.
inline bool thinning_pass(std::vector<std::uint8_t>& img, std::size_t nx, std::size_t ny,
                          int phase) {
    auto at = [&](long long x, long long y) -> int {
        if (x < 0 || y < 0 || x >= static_cast<long long>(nx) ||
            y >= static_cast<long long>(ny))
            return 0;
        return img[static_cast<std::size_t>(y) * nx + static_cast<std::size_t>(x)];
    };
    std::vector<std::size_t> kill;
    for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t x = 0; x < nx; ++x) {
            if (!img[y * nx + x]) continue;
            const long long xi = static_cast<long long>(x);
            const long long yi = static_cast<long long>(y);
            // Clockwise neighbours starting north: p2..p9.
            const int p[8] = {at(xi, yi - 1),     at(xi + 1, yi - 1), at(xi + 1, yi),
                              at(xi + 1, yi + 1), at(xi, yi + 1),     at(xi - 1, yi + 1),
                              at(xi - 1, yi),     at(xi - 1, yi - 1)};
            int b = 0, a = 0;
            for (int i = 0; i < 8; ++i) {
                b += p[i];
                if (p[i] == 0 && p[(i + 1) % 8] == 1) ++a;
            }
            if (b < 2 || b > 6 || a != 1) continue;
            const bool c1 = phase == 0 ? (p[0] * p[2] * p[4] == 0) : (p[0] * p[2] * p[6] == 0);
            const bool c2 = phase == 0 ? (p[2] * p[4] * p[6] == 0) : (p[0] * p[4] * p[6] == 0);
            if (c1 && c2) kill.push_back(y * nx + x);
        }
    for (std::size_t i : kill) img[i] = 0;
    return !kill.empty();
}

// Yokoi connectivity number for 8-connected foreground: the number of
// foreground components that would remain locally distinct if p were
// removed. Neighbours ordered counterclockwise E, NE, N, NW, W, SW, S, SE.
inline int connectivity_number(const int n[8]) {
    int c = 0;
    for (int k = 0; k < 8; k += 2) {
        const int b0 = 1 - n[k];
        const int b1 = 1 - n[(k + 1) % 8];
        const int b2 = 1 - n[(k + 2) % 8];
        c += b0 - b0 * b1 * b2;
    }
    return c;
}

// Sequential minimality cleanup: Zhang-Suen leaves staircase doublets on
// oblique lines whose pixels have three neighbours and would masquerade as
// branch points. Deleting pixels that are 8-simple (connectivity number 1)
// and have >= 3 neighbours strips that thickness while provably preserving
// topology; genuine junctions are not simple and survive.
inline void remove_staircase_pixels(std::vector<std::uint8_t>& img, std::size_t nx,
                                    std::size_t ny) {
    auto at = [&](long long x, long long y) -> int {
        if (x < 0 || y < 0 || x >= static_cast<long long>(nx) ||
            y >= static_cast<long long>(ny))
            return 0;
        return img[static_cast<std::size_t>(y) * nx + static_cast<std::size_t>(x)];
    };
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t x = 0; x < nx; ++x) {
                if (!img[y * nx + x]) continue;
                const long long xi = static_cast<long long>(x);
                const long long yi = static_cast<long long>(y);
                const int n[8] = {at(xi + 1, yi),     at(xi + 1, yi - 1),
                                  at(xi, yi - 1),     at(xi - 1, yi - 1),
                                  at(xi - 1, yi),     at(xi - 1, yi + 1),
                                  at(xi, yi + 1),     at(xi + 1, yi + 1)};
                int count = 0;
                for (int v : n) count += v;
                if (count < 3) continue;
                if (connectivity_number(n) == 1) {
                    img[y * nx + x] = 0;
                    changed = true;
                }
            }
    }
}

}  // namespace detail

// Zhang-Suen skeletonization of a binary image (1 = foreground), followed by
// a minimality pass that removes staircase artifacts.
inline std::vector<std::uint8_t> thin_to_skeleton(std::vector<std::uint8_t> binary,
                                                  std::size_t nx, std::size_t ny) {
    bool changed = true;
    while (changed) {
        changed = detail::thinning_pass(binary, nx, ny, 0);
        changed = detail::thinning_pass(binary, nx, ny, 1) || changed;
    }
    detail::remove_staircase_pixels(binary, nx, ny);
    return binary;
}

// Count vessel crossings: binarize at threshold_fraction of the image max,
// thin to a one-pixel skeleton, find branch pixels (>= 3 skeleton
// neighbours), and merge branch pixels within a 3-pixel radius so one thick
// crossing is counted once. Scale-invariant by construction.
inline int count_nodes(const recon::ReconImage& image, double threshold_fraction = 0.5) {
    if (!(threshold_fraction > 0.0) || !(threshold_fraction < 1.0))
        throw ValidationError("count_nodes: threshold fraction must be in (0, 1)");
    const std::size_t nx = image.grid.nx, ny = image.grid.ny;
    double max_v = 0.0;
    for (double v : image.values) max_v = std::max(max_v, v);
    if (max_v <= 0.0) return 0;
    std::vector<std::uint8_t> binary(image.values.size());
    for (std::size_t i = 0; i < binary.size(); ++i)
        binary[i] = image.values[i] >= threshold_fraction * max_v ? 1 : 0;
    const auto skel = thin_to_skeleton(std::move(binary), nx, ny);

    struct Pix {
        long long x, y;
    };
    std::vector<Pix> branches;
    auto at = [&](long long x, long long y) -> int {
        if (x < 0 || y < 0 || x >= static_cast<long long>(nx) ||
            y >= static_cast<long long>(ny))
            return 0;
        return skel[static_cast<std::size_t>(y) * nx + static_cast<std::size_t>(x)];
    };
    for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t x = 0; x < nx; ++x) {
            if (!skel[y * nx + x]) continue;
            const long long xi = static_cast<long long>(x);
            const long long yi = static_cast<long long>(y);
            int nbrs = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    if (dx != 0 || dy != 0) nbrs += at(xi + dx, yi + dy);
            if (nbrs >= 3) branches.push_back({xi, yi});
        }

    // Single-link clustering with a 3 px merge radius.
    const double merge_r2 = 3.0 * 3.0;
    std::vector<int> cluster(branches.size(), -1);
    int n_clusters = 0;
    for (std::size_t i = 0; i < branches.size(); ++i) {
        if (cluster[i] >= 0) continue;
        cluster[i] = n_clusters;
        std::vector<std::size_t> frontier{i};
        while (!frontier.empty()) {
            const std::size_t cur = frontier.back();
            frontier.pop_back();
            for (std::size_t j = 0; j < branches.size(); ++j) {
                if (cluster[j] >= 0) continue;
                const double dx = static_cast<double>(branches[cur].x - branches[j].x);
                const double dy = static_cast<double>(branches[cur].y - branches[j].y);
                if (dx * dx + dy * dy <= merge_r2) {
                    cluster[j] = n_clusters;
                    frontier.push_back(j);
                }
            }
        }
        ++n_clusters;
    }
    return n_clusters;
}

// Trace SNR in dB against a known reference; equality capped at +300 dB.
inline double snr_db(const std::vector<double>& signal, const std::vector<double>& reference) {
    if (signal.size() != reference.size())
        throw ValidationError("snr: trace lengths differ");
    double ref_sq = 0.0, err_sq = 0.0;
    for (std::size_t i = 0; i < signal.size(); ++i) {
        ref_sq += reference[i] * reference[i];
        const double d = signal[i] - reference[i];
        err_sq += d * d;
    }
    if (!(ref_sq > 0.0)) throw ValidationError("snr: zero reference");
    if (err_sq == 0.0) return 300.0;
    return std::min(300.0, 10.0 * std::log10(ref_sq / err_sq));
}

// Rasterize the ground-truth segments of a scene: 1 within half_width_mm of
// any segment, 0 elsewhere. Used as the blur-free node-counting oracle.
inline recon::ReconImage render_segments(const pa::Scene& scene,
                                         const recon::ReconGrid& grid,
                                         double half_width_mm) {
    recon::validate(grid);
    if (!(half_width_mm > 0.0))
        throw ValidationError("render_segments: half width must be > 0");
    recon::ReconImage img;
    img.grid = grid;
    img.values.assign(grid.nx * grid.ny, 0.0);
    auto seg_dist = [](const pa::Segment& s, double x, double z) {
        const double vx = s.q0.x_mm - s.p0.x_mm;
        const double vz = s.q0.z_mm - s.p0.z_mm;
        const double wx = x - s.p0.x_mm;
        const double wz = z - s.p0.z_mm;
        const double len2 = vx * vx + vz * vz;
        const double t = len2 > 0.0 ? std::clamp((wx * vx + wz * vz) / len2, 0.0, 1.0) : 0.0;
        return std::hypot(wx - t * vx, wz - t * vz);
    };
    for (std::size_t iy = 0; iy < grid.ny; ++iy)
        for (std::size_t ix = 0; ix < grid.nx; ++ix) {
            const double x = grid.x(ix), z = grid.z(iy);
            for (const auto& s : scene.truth_segments)
                if (seg_dist(s, x, z) <= half_width_mm) {
                    img.values[iy * grid.nx + ix] = 1.0;
                    break;
                }
        }
    return img;
}

// Ground-truth evaluation masks for a generated phantom: ROI = pixels within
// roi_halfwidth_mm of any segment; background = pixels at least
// bg_clearance_mm from every segment but still inside the phantom's core
// disc (radius bg_radius_mm around the field-of-view center), where the
// reconstruction is well supported.
inline std::pair<Mask, Mask> make_phantom_masks(const pa::Scene& scene,
                                                const recon::ReconGrid& grid,
                                                double roi_halfwidth_mm,
                                                double bg_clearance_mm,
                                                double bg_radius_mm) {
    recon::validate(grid);
    if (!(roi_halfwidth_mm > 0.0) || !(bg_clearance_mm > roi_halfwidth_mm))
        throw ValidationError(
            "phantom masks: need 0 < roi halfwidth < background clearance");
    Mask roi(grid.nx * grid.ny, 0), bg(grid.nx * grid.ny, 0);
    const double ccx = 0.0, ccz = scene.fov_mm / 2.0;
    auto seg_dist = [](const pa::Segment& s, double x, double z) {
        const double vx = s.q0.x_mm - s.p0.x_mm;
        const double vz = s.q0.z_mm - s.p0.z_mm;
        const double wx = x - s.p0.x_mm;
        const double wz = z - s.p0.z_mm;
        const double len2 = vx * vx + vz * vz;
        const double t = len2 > 0.0 ? std::clamp((wx * vx + wz * vz) / len2, 0.0, 1.0) : 0.0;
        return std::hypot(wx - t * vx, wz - t * vz);
    };
    for (std::size_t iy = 0; iy < grid.ny; ++iy)
        for (std::size_t ix = 0; ix < grid.nx; ++ix) {
            const double x = grid.x(ix), z = grid.z(iy);
            double d = 1e300;
            for (const auto& s : scene.truth_segments) d = std::min(d, seg_dist(s, x, z));
            if (d <= roi_halfwidth_mm)
                roi[iy * grid.nx + ix] = 1;
            else if (d >= bg_clearance_mm &&
                     std::hypot(x - ccx, z - ccz) <= bg_radius_mm)
                bg[iy * grid.nx + ix] = 1;
        }
    return {std::move(roi), std::move(bg)};
}

}  // namespace lapai::metrics
