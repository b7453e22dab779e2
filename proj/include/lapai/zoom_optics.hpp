#pragma once

// Gaussian (paraxial) solver for a three-lens zoom beam expander:
//   L1 convex compensator (f1 > 0), L2 concave variator (f2 < 0), L3 fixed
//   convex output lens (f3 > 0). Light enters collimated at L1 and leaves
//   collimated at L3; the L1+L2 pair forms a variable-focal-length group and
//   L3 keeps its front focal point glued to that group's image of infinity.
//
// The variator moves linearly, dx2 = f2*(m2 - m2_long); the compensator's
// magnification m1 follows the conservation relation
//   f1*(1/m1 + m1) + f2*(1/m2 + m2) = C
// whose per-position form is the quadratic m^2 - b*m + 1 = 0 (roots are a
// reciprocal pair). The compensator displacement that keeps the expander
// afocal is dx1 = f1*[(m1_long + 1/m1_long) - (m1 + 1/m1)], equivalently
// f2*[(m2 + 1/m2) - (m2_long + 1/m2_long)].

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lapai/common.hpp"

namespace lapai::zoom {

struct ZoomConfig {
    double f1 = 0.0;       // compensator focal length, mm (> 0)
    double f2 = 0.0;       // variator focal length, mm (< 0)
    double f3 = 0.0;       // fixed output lens focal length, mm (> 0)
    double ratio = 1.0;    // blanket zoom ratio N (>= 1)
    double m2_long = 0.0;  // variator magnification at the long-focus start, -sqrt(N)
    double m1_long = 0.0;  // compensator magnification anchor at long focus (< 0)
    double d1_long = 0.0;  // L1-L2 spacing at long focus, mm (> 0, determined by geometry)
};

enum class Branch { first, second };  // (b + sqrt(b^2-4))/2 vs (b - sqrt(b^2-4))/2

struct ZoomState {
    double m2 = 0.0;
    double m1 = 0.0;
    Branch branch = Branch::first;
    double dx1_mm = 0.0;     // compensator displacement from long-focus position
    double dx2_mm = 0.0;     // variator displacement from long-focus position
    double f_comb_mm = 0.0;  // combined L1+L2 focal length (signed; < 0 for Galilean)
    double M = 0.0;          // beam expansion ratio |f3 / f_comb| (> 0)
};

struct ZoomTrajectory {
    ZoomConfig config;
    std::vector<ZoomState> states;
    double conserved = 0.0;  // C in the conservation relation
    std::optional<std::size_t> switch_index;  // sample where the roots coalesce at -1
};

struct ParaxialRay {
    double height_mm = 0.0;
    double slope = 0.0;  // rad, paraxial
};

struct LensPositions {
    double z1_mm = 0.0;
    double z2_mm = 0.0;
    double z3_mm = 0.0;
};

inline constexpr double kCoalesceTol = 1e-9;  // |b + 2| below this = coalesced roots

// L1-L2 spacing that keeps the expander afocal at variator magnification m2.
inline double afocal_spacing(double f1, double f2, double m2) {
    return f1 + f2 - f2 / m2;
}

inline double derived_d1_long(const ZoomConfig& c) {
    return afocal_spacing(c.f1, c.f2, c.m2_long);
}

// Validates physics preconditions; fills d1_long when the caller left it NaN.
inline void validate(ZoomConfig& c) {
    if (!(c.f1 > 0.0)) throw ValidationError("zoom: f1 must be > 0 (convex compensator)");
    if (!(c.f2 < 0.0)) throw ValidationError("zoom: f2 must be < 0 (concave variator)");
    if (!(c.f3 > 0.0)) throw ValidationError("zoom: f3 must be > 0 (convex output lens)");
    if (!(c.ratio >= 1.0)) throw ValidationError("zoom: ratio N must be >= 1");
    if (!(c.m1_long < 0.0)) throw ValidationError("zoom: m1_long must be < 0");
    const double root_n = std::sqrt(c.ratio);
    if (std::abs(c.m2_long + root_n) > 1e-9 * (1.0 + root_n))
        throw ValidationError("zoom: m2_long must equal -sqrt(N) for ratio N=" +
                              std::to_string(c.ratio));
    const double d1 = derived_d1_long(c);
    if (std::isnan(c.d1_long)) {
        c.d1_long = d1;
    } else if (std::abs(c.d1_long - d1) > 1e-6 * std::max(1.0, std::abs(d1))) {
        std::ostringstream os;
        os << "zoom: d1_long=" << c.d1_long << " inconsistent with afocal geometry (expected "
           << d1 << " = f1 + f2 - f2/m2_long)";
        throw ValidationError(os.str());
    }
    if (!(c.d1_long > 0.0))
        throw ValidationError("zoom: d1_long must be > 0 (lens collision at long focus)");
}

// Eq.-style combined focal length of two thin lenses separated by d1.
// Returns nullopt when the pair is itself afocal (f1 + f2 == d1).
inline std::optional<double> combined_focal_length(double f1, double f2, double d1) {
    const double denom = f1 + f2 - d1;
    if (denom == 0.0) return std::nullopt;
    return f1 * f2 / denom;
}

inline double expansion_ratio(double f3, double f_comb) {
    if (f_comb == 0.0) throw ValidationError("expansion_ratio: f_comb must be nonzero");
    return f3 / f_comb;
}

inline double expansion_ratio(double f3, std::optional<double> f_comb) {
    if (!f_comb)
        throw InfeasibleError("expansion_ratio: L1+L2 pair is afocal, no finite combined focus");
    return expansion_ratio(f3, *f_comb);
}

// Variator magnification range for blanket ratio N: endpoints are a
// reciprocal pair (object-image exchange), m2 in [-sqrt(N), -1/sqrt(N)].
inline std::pair<double, double> variator_range(double ratio) {
    if (!(ratio >= 1.0)) throw ValidationError("variator_range: N must be >= 1");
    const double root_n = std::sqrt(ratio);
    return {-root_n, -1.0 / root_n};
}

// Variator shift from the long-focus position: linear in m2 because the
// variator's image plane (front focus of L3) is fixed.
inline double variator_displacement(double f2, double m2, double m2_long) {
    if (!(f2 < 0.0)) throw ValidationError("variator_displacement: f2 must be < 0");
    if (!(m2 < 0.0) || !(m2_long < 0.0))
        throw ValidationError("variator_displacement: magnifications must be < 0");
    return f2 * (m2 - m2_long);
}

// Quadratic coefficient b in m^2 - b*m + 1 = 0 for the compensator
// magnification at variator position m2.
inline double compensation_coefficient(double f1, double f2, double m2, double m2_long,
                                       double m1_long) {
    const double g = (m2 + 1.0 / m2) - (m2_long + 1.0 / m2_long);
    return -(f2 / f1) * g + (m1_long + 1.0 / m1_long);
}

// Roots of m^2 - b*m + 1 = 0, returned (m_a, m_b) with m_a >= m_b.
// Product is 1 by Vieta; computed via the stable large-magnitude root.
inline std::pair<double, double> compensator_roots(double b) {
    double disc = b * b - 4.0;
    if (disc < 0.0) {
        if (std::abs(std::abs(b) - 2.0) < kCoalesceTol) {
            disc = 0.0;  // coalescence: rounding may push b*b fractionally below 4
        } else {
            std::ostringstream os;
            os << "compensator_roots: |b| < 2 (b=" << b << "), no real compensator solution";
            throw InfeasibleError(os.str());
        }
    }
    const double s = std::sqrt(disc);
    const double big = (b >= 0.0) ? (b + s) / 2.0 : (b - s) / 2.0;  // no cancellation
    const double small = 1.0 / big;
    const double first = (b >= 0.0) ? big : small;   // (b + sqrt)/2
    const double second = (b >= 0.0) ? small : big;  // (b - sqrt)/2
    return {first, second};  // first >= second for any |b| >= 2
}

// Conservation functional U(m1, m2); constant along a valid trajectory.
inline double conservation(double f1, double f2, double m1, double m2) {
    return f1 * (1.0 / m1 + m1) + f2 * (1.0 / m2 + m2);
}

namespace detail {

inline double root_of_branch(double b, Branch which) {
    const auto [first, second] = compensator_roots(b);
    return which == Branch::first ? first : second;
}

inline Branch other(Branch br) { return br == Branch::first ? Branch::second : Branch::first; }

// Builds the full state at one m2 sample given the active branch.
inline ZoomState make_state(const ZoomConfig& c, double m2, Branch branch) {
    ZoomState st;
    st.m2 = m2;
    st.branch = branch;
    const double b = compensation_coefficient(c.f1, c.f2, m2, c.m2_long, c.m1_long);
    st.m1 = root_of_branch(b, branch);
    st.dx2_mm = variator_displacement(c.f2, m2, c.m2_long);
    const double anchor = c.m1_long + 1.0 / c.m1_long;
    st.dx1_mm = c.f1 * (anchor - (st.m1 + 1.0 / st.m1));
    const double d1 = c.d1_long + st.dx2_mm - st.dx1_mm;
    const auto f_comb = combined_focal_length(c.f1, c.f2, d1);
    if (!f_comb) throw InfeasibleError("zoom: degenerate afocal L1+L2 pair at m2=" +
                                       std::to_string(m2));
    st.f_comb_mm = *f_comb;
    // Consistency of the spacing route with f_comb = f1*m2; holds to rounding.
    if (std::abs(st.f_comb_mm - c.f1 * m2) > 1e-6 * std::max(1.0, std::abs(c.f1 * m2)))
        throw InfeasibleError("zoom: combined focal length inconsistent at m2=" +
                              std::to_string(m2));
    st.M = std::abs(expansion_ratio(c.f3, st.f_comb_mm));
    return st;
}

}  // namespace detail

// Solves the whole trajectory: n_samples states uniform in m2 from the
// long-focus end -sqrt(N) to -1/sqrt(N). Starts on the quadratic root that
// contains m1_long and switches branch at a sample where the roots coalesce
// at -1. Throws InfeasibleError naming the m2 interval where |b| < 2.
inline ZoomTrajectory solve_trajectory(ZoomConfig config, std::size_t n_samples) {
    validate(config);
    if (n_samples < 2) throw ValidationError("solve_trajectory: n_samples must be >= 2");

    const auto [m2_lo, m2_hi] = variator_range(config.ratio);
    ZoomTrajectory traj;
    traj.config = config;
    traj.conserved = conservation(config.f1, config.f2, config.m1_long, config.m2_long);
    traj.states.reserve(n_samples);

    // Feasibility scan first so the error names the whole bad interval.
    double bad_lo = 0.0, bad_hi = 0.0;
    bool any_bad = false;
    std::vector<double> m2s(n_samples), bs(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n_samples - 1);
        const double m2 = m2_lo * (1.0 - t) + m2_hi * t;
        const double b = compensation_coefficient(config.f1, config.f2, m2, config.m2_long,
                                                  config.m1_long);
        m2s[i] = m2;
        bs[i] = b;
        if (b * b < 4.0 && std::abs(std::abs(b) - 2.0) >= kCoalesceTol) {
            if (!any_bad) { bad_lo = m2; bad_hi = m2; any_bad = true; }
            bad_lo = std::min(bad_lo, m2);
            bad_hi = std::max(bad_hi, m2);
        }
    }
    if (any_bad) {
        std::ostringstream os;
        os << "solve_trajectory: |b| < 2, no compensator solution for m2 in [" << bad_lo
           << ", " << bad_hi << "]";
        throw InfeasibleError(os.str());
    }

    // Branch containing m1_long at the start sample.
    const auto [r_first, r_second] = compensator_roots(bs[0]);
    Branch active = (std::abs(r_first - config.m1_long) <= std::abs(r_second - config.m1_long))
                        ? Branch::first
                        : Branch::second;

    for (std::size_t i = 0; i < n_samples; ++i) {
        if (i > 0 && std::abs(bs[i] + 2.0) < kCoalesceTol) {
            // Roots coalesce at -1: the compensation curve converts to the
            // other quadratic branch from this sample on.
            if (!traj.switch_index) {
                traj.switch_index = i;
                active = detail::other(active);
            }
        }
        traj.states.push_back(detail::make_state(config, m2s[i], active));
    }
    return traj;
}

// Absolute lens positions for one state, long-focus L1 position as origin.
// The fixed output lens sits one focal length past the (virtual) combined
// focus of the long-focus state.
inline LensPositions lens_positions(const ZoomConfig& c, const ZoomState& st) {
    LensPositions p;
    p.z1_mm = st.dx1_mm;
    p.z2_mm = c.d1_long + st.dx2_mm;
    // Fixed plane P (front focus of L3): z_P = z2 + f2*(1 - m2), same for all states.
    const double z_p = c.d1_long + c.f2 * (1.0 - c.m2_long);
    p.z3_mm = z_p + c.f3;
    const double gap12 = p.z2_mm - p.z1_mm;
    const double gap23 = p.z3_mm - p.z2_mm;
    if (gap12 <= 0.0 || gap23 <= 0.0) {
        std::ostringstream os;
        os << "lens collision: gaps L1-L2=" << gap12 << " mm, L2-L3=" << gap23
           << " mm at m2=" << st.m2;
        throw InfeasibleError(os.str());
    }
    return p;
}

// 2x2 paraxial transfer-matrix trace through the three lenses at this
// state's positions. Independent verification path for afocality.
inline ParaxialRay ray_trace(const ZoomConfig& c, const ZoomState& st, const ParaxialRay& in) {
    const LensPositions p = lens_positions(c, st);  // throws on collision
    double h = in.height_mm;
    double u = in.slope;
    const double f[3] = {c.f1, c.f2, c.f3};
    const double z[3] = {p.z1_mm, p.z2_mm, p.z3_mm};
    for (int k = 0; k < 3; ++k) {
        if (k > 0) h += u * (z[k] - z[k - 1]);  // free-space gap
        u -= h / f[k];                          // thin lens
    }
    return {h, u};
}

inline std::pair<double, double> magnification_range(const ZoomConfig& c) {
    const double root_n = std::sqrt(c.ratio);
    return {c.f3 / (c.f1 * root_n), c.f3 * root_n / c.f1};
}

// State at an exact expansion ratio target; the map m2 -> M is closed-form
// (M = f3 / (f1*|m2|)) so the state is built directly at m2* rather than by
// interpolating neighbouring samples.
inline ZoomState state_at_magnification(ZoomConfig config, double m_target) {
    validate(config);
    const auto [m_min, m_max] = magnification_range(config);
    if (!(m_target > 0.0) || m_target < m_min * (1.0 - 1e-9) || m_target > m_max * (1.0 + 1e-9)) {
        std::ostringstream os;
        os << "magnification " << m_target << " unreachable; achievable range [" << m_min
           << ", " << m_max << "]";
        throw InfeasibleError(os.str());
    }
    const double m2 = -config.f3 / (config.f1 * m_target);
    const auto [lo, hi] = variator_range(config.ratio);
    const double m2_clamped = std::min(hi, std::max(lo, m2));

    // Branch bookkeeping: a coalescence can only occur at m2 = -1 (tangency
    // of b against -2); the branch flips there if that point precedes m2*.
    const auto [r_first, r_second] = compensator_roots(
        compensation_coefficient(config.f1, config.f2, lo, config.m2_long, config.m1_long));
    Branch active = (std::abs(r_first - config.m1_long) <= std::abs(r_second - config.m1_long))
                        ? Branch::first
                        : Branch::second;
    if (lo < -1.0 && m2_clamped >= -1.0) {
        const double b_mid = compensation_coefficient(config.f1, config.f2, -1.0,
                                                      config.m2_long, config.m1_long);
        if (std::abs(b_mid + 2.0) < kCoalesceTol) active = detail::other(active);
    }
    return detail::make_state(config, m2_clamped, active);
}

// Expanded beam diameter for a target ratio; errors when the target is
// outside the achievable range.
inline double beam_expand(const ZoomConfig& config, double input_diameter_mm, double m_target) {
    if (!(input_diameter_mm > 0.0))
        throw ValidationError("beam_expand: input diameter must be > 0");
    (void)state_at_magnification(config, m_target);
    return input_diameter_mm * m_target;
}

// Demo prescription used by the CLI defaults and the acceptance suite:
// |b| >= 2 over the whole range (solvable), all inter-lens gaps positive
// (no collision anywhere on the trajectory), and M spans [1.5, 6.0].
inline ZoomConfig demo_prescription() {
    ZoomConfig c;
    c.f1 = 160.0;
    c.f2 = -50.0;
    c.f3 = 480.0;
    c.ratio = 4.0;
    c.m2_long = -2.0;
    c.m1_long = -3.0;
    c.d1_long = 85.0;
    return c;
}

}  // namespace lapai::zoom
