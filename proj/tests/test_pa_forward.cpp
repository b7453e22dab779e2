#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "lapai/pa_forward.hpp"

using namespace lapai;
using namespace lapai::pa;

namespace {

// Spatially uniform surface fluence, 1 mJ/cm^2 over |x|,|y| <= 30 mm.
illum::FluenceMap uniform_fluence(double value = 1.0) {
    illum::FluenceMap map;
    map.grid.nx = map.grid.ny = 61;
    map.grid.dx_mm = map.grid.dy_mm = 1.0;
    map.grid.x0_mm = map.grid.y0_mm = -30.0;
    map.values.assign(61 * 61, value);
    return map;
}

TransducerArray single_element_array() {
    TransducerArray a;
    a.n_elements = 1;  // apex element at (0, -20)
    return a;
}

// Matched-filter arrival estimate: argmax over s of sum_j x[s+j] p(j dt).
std::size_t matched_filter_argmax(const SignalFrame& f, std::size_t channel,
                                  const TransducerArray& array) {
    const double dt = 1.0 / f.sample_rate_MHz;
    const int half = static_cast<int>(std::ceil(8.0 * envelope_sigma_us(array) / dt));
    std::vector<double> kernel(2 * half + 1);
    for (int j = -half; j <= half; ++j)
        kernel[j + half] = pa_pulse(static_cast<double>(j) * dt, array);
    double best = -1.0;
    std::size_t best_s = 0;
    for (std::size_t s = 0; s < f.n_samples; ++s) {
        double acc = 0.0;
        for (int j = -half; j <= half; ++j) {
            const long long idx = static_cast<long long>(s) + j;
            if (idx < 0 || idx >= static_cast<long long>(f.n_samples)) continue;
            acc += f.at(channel, static_cast<std::size_t>(idx)) * kernel[j + half];
        }
        if (std::abs(acc) > best) {
            best = std::abs(acc);
            best_s = s;
        }
    }
    return best_s;
}

// Proper-crossing test for two segments via orientation signs.
bool segments_cross(const Segment& a, const Segment& b) {
    auto orient = [](const Point2& p, const Point2& q, const Point2& r) {
        const double v = (q.x_mm - p.x_mm) * (r.z_mm - p.z_mm) -
                         (q.z_mm - p.z_mm) * (r.x_mm - p.x_mm);
        return (v > 0.0) - (v < 0.0);
    };
    const int o1 = orient(a.p0, a.q0, b.p0);
    const int o2 = orient(a.p0, a.q0, b.q0);
    const int o3 = orient(b.p0, b.q0, a.p0);
    const int o4 = orient(b.p0, b.q0, a.q0);
    return o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

}  // namespace

TEST(ElementPositions, SingleElementSitsAtApex) {
    const auto pts = element_positions(single_element_array());
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_DOUBLE_EQ(pts[0].x_mm, 0.0);
    EXPECT_DOUBLE_EQ(pts[0].z_mm, -20.0);
}

TEST(ElementPositions, EqualAngularSpacingAndMirrorSymmetry) {
    TransducerArray a;  // 32 elements, 120 degrees, radius 40
    const auto pts = element_positions(a);
    ASSERT_EQ(pts.size(), 32u);
    auto angle = [&](const Point2& p) {
        return std::atan2(p.x_mm - a.center_x_mm, -(p.z_mm - a.center_z_mm));
    };
    const double expected_gap = deg_to_rad(120.0 / 31.0);
    for (std::size_t k = 0; k + 1 < pts.size(); ++k)
        EXPECT_NEAR(angle(pts[k + 1]) - angle(pts[k]), expected_gap, 1e-12);
    // First/last elements span the full arc, symmetric about the axis.
    EXPECT_NEAR(angle(pts[0]), -deg_to_rad(60.0), 1e-12);
    EXPECT_NEAR(angle(pts[31]), +deg_to_rad(60.0), 1e-12);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        EXPECT_DOUBLE_EQ(pts[k].x_mm, -pts[31 - k].x_mm);
        EXPECT_DOUBLE_EQ(pts[k].z_mm, pts[31 - k].z_mm);
    }
    // All on the arc.
    for (const auto& p : pts)
        EXPECT_NEAR(std::hypot(p.x_mm, p.z_mm - 20.0), 40.0, 1e-12);
}

TEST(PaPulse, UnitPeakAndTailBound) {
    TransducerArray a;
    EXPECT_DOUBLE_EQ(pa_pulse(0.0, a), 1.0);
    const double tau = envelope_sigma_us(a);
    // tau = 2 sqrt(ln 2) / (pi * 0.6 * 2.5) = 0.353347 us.
    EXPECT_NEAR(tau, 0.353347, 1e-6);
    for (double t = 5.0 * tau * 1.0001; t < 20.0 * tau; t += 0.1 * tau) {
        EXPECT_LT(std::abs(pa_pulse(t, a)), 1e-6);
        EXPECT_LT(std::abs(pa_pulse(-t, a)), 1e-6);
    }
    // Envelope value at the scale parameter.
    EXPECT_NEAR(std::abs(pa_pulse(tau, a)) /
                    std::abs(std::cos(2.0 * kPi * 2.5 * tau)),
                std::exp(-1.0), 1e-9);
}

TEST(PaPulse, SpectralMinusSixDbFractionalWidth) {
    // Direct Fourier transform of the sampled wavelet; -6 dB full width over
    // the center frequency must equal the fractional bandwidth within 2%.
    TransducerArray a;
    const double rate = 25.0;  // MHz
    const int n = 4096;
    std::vector<double> x(n);
    for (int s = 0; s < n; ++s)
        x[s] = pa_pulse((s - n / 2) / rate, a);
    auto mag_at = [&](double f_MHz) {
        std::complex<double> acc(0.0, 0.0);
        for (int s = 0; s < n; ++s) {
            const double ph = -2.0 * kPi * f_MHz * (s - n / 2) / rate;
            acc += x[s] * std::complex<double>(std::cos(ph), std::sin(ph));
        }
        return std::abs(acc);
    };
    const double df = 0.002;
    double peak_mag = 0.0, peak_f = 0.0;
    std::vector<double> mags;
    std::vector<double> freqs;
    for (double f = 0.5; f <= 4.5; f += df) {
        freqs.push_back(f);
        mags.push_back(mag_at(f));
        if (mags.back() > peak_mag) {
            peak_mag = mags.back();
            peak_f = f;
        }
    }
    EXPECT_NEAR(peak_f, 2.5, 0.01);
    const double level = peak_mag * 0.5;  // -6 dB in amplitude
    double f_lo = 0.0, f_hi = 0.0;
    for (std::size_t i = 1; i < mags.size(); ++i) {
        if (mags[i - 1] < level && mags[i] >= level && freqs[i] < peak_f)
            f_lo = freqs[i - 1] + df * (level - mags[i - 1]) / (mags[i] - mags[i - 1]);
        if (mags[i - 1] >= level && mags[i] < level && freqs[i - 1] > peak_f)
            f_hi = freqs[i - 1] + df * (mags[i - 1] - level) / (mags[i - 1] - mags[i]);
    }
    ASSERT_GT(f_lo, 0.0);
    ASSERT_GT(f_hi, 0.0);
    const double fbw = (f_hi - f_lo) / 2.5;
    EXPECT_NEAR(fbw, 0.60, 0.012);
}

TEST(Simulate, TimeOfFlightLandsOnTheExpectedSample) {
    // Absorber 37.5 mm above the apex element, c = 1500 m/s: arrival at
    // 25.0 us = sample 1000 at 40 MHz.
    Scene scene;
    scene.absorbers.push_back({0.0, 17.5, 1.0, 0.1});
    const auto array = single_element_array();
    AcquisitionConfig acq;
    const auto frame = simulate(scene, uniform_fluence(), array, acq);
    EXPECT_EQ(matched_filter_argmax(frame, 0, array), 1000u);
    // The aligned arrival sample carries the full 1/r amplitude.
    EXPECT_NEAR(frame.at(0, 1000), 1.0 / 37.5, 1e-7);
}

TEST(Simulate, InverseDistanceAmplitudeLaw) {
    // Two absorbers with sample-aligned arrivals, 21 mm and 42 mm from the
    // apex element at (0, -20): peak amplitudes in ratio r2/r1 = 2 within 1%.
    const auto array = single_element_array();
    AcquisitionConfig acq;
    Scene s1, s2;
    s1.absorbers.push_back({0.0, 1.0, 1.0, 0.1});   // r = 21 mm -> 14 us = sample 560
    s2.absorbers.push_back({0.0, 22.0, 1.0, 0.1});  // r = 42 mm -> 28 us = sample 1120
    const auto f1 = simulate(s1, uniform_fluence(), array, acq);
    const auto f2 = simulate(s2, uniform_fluence(), array, acq);
    auto peak = [](const SignalFrame& f) {
        double m = 0.0;
        for (double v : f.data) m = std::max(m, std::abs(v));
        return m;
    };
    const double p1 = peak(f1);
    const double p2 = peak(f2);
    EXPECT_NEAR(p1 / p2, 42.0 / 21.0, 0.01 * (42.0 / 21.0));
}

TEST(Simulate, ZeroFluenceGivesSilence) {
    Scene scene;
    scene.absorbers.push_back({0.0, 10.0, 1.0, 0.1});
    scene.absorbers.push_back({5.0, 20.0, 2.0, 0.1});
    TransducerArray array;
    AcquisitionConfig acq;
    const auto frame = simulate(scene, uniform_fluence(0.0), array, acq);
    for (double v : frame.data) EXPECT_EQ(v, 0.0);
}

TEST(Simulate, DoublingAbsorptionDoublesTheFrameExactly) {
    Scene scene;
    scene.absorbers.push_back({-3.0, 12.0, 0.7, 0.1});
    scene.absorbers.push_back({4.0, 25.0, 1.3, 0.1});
    scene.absorbers.push_back({0.5, 18.0, 0.2, 0.1});
    Scene doubled = scene;
    for (auto& a : doubled.absorbers) a.mu_a *= 2.0;
    TransducerArray array;
    AcquisitionConfig acq;
    const auto f1 = simulate(scene, uniform_fluence(), array, acq);
    const auto f2 = simulate(doubled, uniform_fluence(), array, acq);
    ASSERT_EQ(f1.data.size(), f2.data.size());
    for (std::size_t i = 0; i < f1.data.size(); ++i)
        EXPECT_DOUBLE_EQ(f2.data[i], 2.0 * f1.data[i]);
}

TEST(Simulate, SuperpositionExactForTimeSeparatedScenes) {
    // Arrival windows of z = 5 and z = 35 absorbers never overlap on any
    // channel, so union equals the per-scene sum bit for bit.
    Scene sa, sb, sunion;
    sa.absorbers.push_back({0.0, 5.0, 1.0, 0.1});
    sb.absorbers.push_back({0.0, 35.0, 0.8, 0.1});
    sunion.absorbers = sa.absorbers;
    sunion.absorbers.insert(sunion.absorbers.end(), sb.absorbers.begin(),
                            sb.absorbers.end());
    TransducerArray array;
    AcquisitionConfig acq;
    const auto fa = simulate(sa, uniform_fluence(), array, acq);
    const auto fb = simulate(sb, uniform_fluence(), array, acq);
    const auto fu = simulate(sunion, uniform_fluence(), array, acq);
    const auto fsum = add_frames(fa, fb);
    for (std::size_t i = 0; i < fu.data.size(); ++i)
        EXPECT_DOUBLE_EQ(fu.data[i], fsum.data[i]);
}

TEST(Simulate, SuperpositionHoldsToFloatPrecisionInGeneral) {
    Scene sa, sb, sunion;
    sa.absorbers.push_back({-2.0, 14.0, 1.0, 0.1});
    sa.absorbers.push_back({1.0, 15.0, 0.5, 0.1});
    sb.absorbers.push_back({2.0, 14.5, 0.9, 0.1});
    sunion.absorbers = sa.absorbers;
    sunion.absorbers.insert(sunion.absorbers.end(), sb.absorbers.begin(),
                            sb.absorbers.end());
    TransducerArray array;
    AcquisitionConfig acq;
    const auto fu = simulate(sunion, uniform_fluence(), array, acq);
    const auto fsum = add_frames(simulate(sa, uniform_fluence(), array, acq),
                                 simulate(sb, uniform_fluence(), array, acq));
    double max_abs = 0.0, max_diff = 0.0;
    for (std::size_t i = 0; i < fu.data.size(); ++i) {
        max_abs = std::max(max_abs, std::abs(fu.data[i]));
        max_diff = std::max(max_diff, std::abs(fu.data[i] - fsum.data[i]));
    }
    EXPECT_LT(max_diff, 1e-6 * max_abs);
}

TEST(Simulate, SeededNoiseIsReproducibleAndThreadCountInvariant) {
    Scene scene;
    scene.absorbers.push_back({0.0, 20.0, 1.0, 0.1});
    TransducerArray array;
    AcquisitionConfig acq;
    acq.noise_snr_db = 20.0;
    acq.rng_seed = 42;
    const auto f1 = simulate(scene, uniform_fluence(), array, acq, 1);
    const auto f2 = simulate(scene, uniform_fluence(), array, acq, 4);
    const auto f3 = simulate(scene, uniform_fluence(), array, acq, 7);
    EXPECT_EQ(f1.data, f2.data);
    EXPECT_EQ(f1.data, f3.data);
    acq.rng_seed = 43;
    const auto f4 = simulate(scene, uniform_fluence(), array, acq, 1);
    EXPECT_NE(f1.data, f4.data);
}

TEST(Simulate, NoiseLevelMatchesRequestedSnr) {
    Scene scene;
    scene.absorbers.push_back({0.0, 20.0, 1.0, 0.1});
    TransducerArray array;
    AcquisitionConfig clean_acq;
    AcquisitionConfig noisy_acq;
    noisy_acq.noise_snr_db = 20.0;
    noisy_acq.rng_seed = 7;
    const auto clean = simulate(scene, uniform_fluence(), array, clean_acq);
    const auto noisy = simulate(scene, uniform_fluence(), array, noisy_acq);
    double sig_sq = 0.0, noise_sq = 0.0;
    for (std::size_t i = 0; i < clean.data.size(); ++i) {
        sig_sq += clean.data[i] * clean.data[i];
        const double d = noisy.data[i] - clean.data[i];
        noise_sq += d * d;
    }
    const double snr_db = 10.0 * std::log10(sig_sq / noise_sq);
    EXPECT_NEAR(snr_db, 20.0, 0.2);
}

TEST(Simulate, RejectsAbsorberOutsideFluenceGridNamingIndex) {
    Scene scene;
    scene.absorbers.push_back({0.0, 10.0, 1.0, 0.1});
    scene.absorbers.push_back({-12.0, 10.0, 1.0, 0.1});
    illum::FluenceMap narrow = uniform_fluence();
    narrow.grid.nx = 11;
    narrow.grid.x0_mm = -5.0;  // covers x in [-5, 5] only
    narrow.values.assign(11 * 61, 1.0);
    TransducerArray array;
    AcquisitionConfig acq;
    try {
        simulate(scene, narrow, array, acq);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("absorber 1"), std::string::npos);
    }
}

TEST(Simulate, RejectsSubNyquistSampleRate) {
    TransducerArray array;  // guard = 2 * 2.5 * 1.3 = 6.5 MHz
    AcquisitionConfig acq;
    acq.sample_rate_MHz = 6.0;
    Scene scene;
    EXPECT_THROW(simulate(scene, uniform_fluence(), array, acq), ValidationError);
}

TEST(SceneValidation, RejectsOutOfFieldAbsorberAndBadParams) {
    Scene scene;
    scene.absorbers.push_back({0.0, 45.0, 1.0, 0.1});  // z beyond 40 mm fov
    EXPECT_THROW(validate(scene), ValidationError);
    scene.absorbers[0] = {0.0, 10.0, -1.0, 0.1};
    EXPECT_THROW(validate(scene), ValidationError);
    scene.absorbers[0] = {0.0, 10.0, 1.0, 0.1};
    scene.sound_speed_m_s = 0.0;
    EXPECT_THROW(validate(scene), ValidationError);
}

TEST(VesselPhantom, ExactCrossingCountAgainstBruteForce) {
    for (std::size_t n : {0u, 1u, 3u, 8u}) {
        const auto scene = make_vessel_phantom(n, 40.0, 17);
        EXPECT_EQ(scene.truth_crossings.size(), n);
        std::size_t brute = 0;
        for (std::size_t i = 0; i < scene.truth_segments.size(); ++i)
            for (std::size_t j = i + 1; j < scene.truth_segments.size(); ++j)
                brute += segments_cross(scene.truth_segments[i], scene.truth_segments[j])
                             ? 1u
                             : 0u;
        EXPECT_EQ(brute, n) << "n_crossings=" << n;
    }
}

TEST(VesselPhantom, CrossingsStayApartAndInsideTheCore) {
    const auto scene = make_vessel_phantom(8, 40.0, 99);
    for (std::size_t i = 0; i < scene.truth_crossings.size(); ++i) {
        const auto& c = scene.truth_crossings[i];
        EXPECT_LE(std::hypot(c.x_mm - 0.0, c.z_mm - 20.0), 10.0 + 1e-9);
        for (std::size_t j = i + 1; j < scene.truth_crossings.size(); ++j) {
            const auto& d = scene.truth_crossings[j];
            EXPECT_GE(std::hypot(c.x_mm - d.x_mm, c.z_mm - d.z_mm), 2.0);
        }
    }
}

TEST(VesselPhantom, DeterministicPerSeed) {
    const auto a = make_vessel_phantom(5, 40.0, 123);
    const auto b = make_vessel_phantom(5, 40.0, 123);
    ASSERT_EQ(a.absorbers.size(), b.absorbers.size());
    for (std::size_t i = 0; i < a.absorbers.size(); ++i) {
        EXPECT_DOUBLE_EQ(a.absorbers[i].x_mm, b.absorbers[i].x_mm);
        EXPECT_DOUBLE_EQ(a.absorbers[i].z_mm, b.absorbers[i].z_mm);
    }
    const auto c = make_vessel_phantom(5, 40.0, 124);
    EXPECT_NE(a.absorbers[0].x_mm, c.absorbers[0].x_mm);
}

TEST(VesselPhantom, InfeasiblePackingRejected) {
    EXPECT_THROW(make_vessel_phantom(200, 40.0, 1), InfeasibleError);
}
