// lapai: command-line front end for the light-adjustable photoacoustic
// imaging pipeline. Subcommands cover the zoom design solve, the
// illumination-scheme sweep, and single-step file passthroughs around the
// forward/reconstruction/metrics modules.
//
// Exit codes: 0 success, 1 validation or usage error, 2 numerical
// infeasibility, 3 I/O error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "lapai/io.hpp"
#include "lapai/parallel.hpp"
#include "lapai/run_config.hpp"

namespace fs = std::filesystem;

namespace {

using namespace lapai;

struct GlobalOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;  // 0 = ask the hardware
    bool no_denoise = false;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

config::RunConfig load_config(const GlobalOptions& g) {
    config::RunConfig rc;
    if (!g.config_path.empty()) rc = config::parse_run_config(slurp(g.config_path));
    // Flags override config keys.
    if (g.seed_given) {
        rc.seed = g.seed;
        rc.acq.rng_seed = g.seed;
    }
    if (g.no_denoise) rc.denoise = false;
    return rc;
}

fs::path prepare_out_dir(const GlobalOptions& g) {
    fs::path dir(g.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create output directory '" + g.out_dir + "': " + ec.message());
    return dir;
}

std::string fmt_e3(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.3e", v);
    return buf;
}

// File-name fragment for a numeric parameter: "12", "12p5", "m3".
std::string num_tag(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%g", v);
    std::string s(buf);
    std::string out;
    for (char c : s) {
        if (c == '.') out += 'p';
        else if (c == '-') out += 'm';
        else if (c != '+') out += c;
    }
    return out;
}

// ---------------------------------------------------------------- zoom-solve

struct ZoomReport {
    double max_afocal_slope = 0.0;   // rad, 1.5 mm collimated probe
    double max_expansion_err = 0.0;  // | |h_out| / h_in - M |
    double max_conservation = 0.0;   // |U(m1, m2) - C|
    bool pass = false;
};

constexpr double kAfocalSlopeLimit = 1e-9;    // rad
constexpr double kExpansionErrLimit = 1e-6;
constexpr double kConservationLimit = 1e-9;

ZoomReport verify_trajectory(const zoom::ZoomTrajectory& traj) {
    ZoomReport rep;
    const zoom::ParaxialRay probe{1.5, 0.0};
    for (const auto& st : traj.states) {
        const zoom::ParaxialRay out = zoom::ray_trace(traj.config, st, probe);
        rep.max_afocal_slope = std::max(rep.max_afocal_slope, std::abs(out.slope));
        rep.max_expansion_err =
            std::max(rep.max_expansion_err,
                     std::abs(std::abs(out.height_mm) / probe.height_mm - st.M));
        const double u =
            zoom::conservation(traj.config.f1, traj.config.f2, st.m1, st.m2);
        rep.max_conservation = std::max(rep.max_conservation, std::abs(u - traj.conserved));
    }
    rep.pass = rep.max_afocal_slope < kAfocalSlopeLimit &&
               rep.max_expansion_err < kExpansionErrLimit &&
               rep.max_conservation < kConservationLimit;
    return rep;
}

// At blanket ratio N = 1 the magnification range collapses to the long-focus
// anchor; emit that single state directly so both displacements are exactly
// zero instead of sampling a degenerate interval.
zoom::ZoomTrajectory solve_or_anchor(zoom::ZoomConfig zc, std::size_t n_samples) {
    zoom::validate(zc);
    if (zc.ratio != 1.0) return zoom::solve_trajectory(zc, n_samples);

    zoom::ZoomTrajectory traj;
    traj.config = zc;
    traj.conserved = zoom::conservation(zc.f1, zc.f2, zc.m1_long, zc.m2_long);
    zoom::ZoomState st;
    st.m2 = zc.m2_long;
    st.m1 = zc.m1_long;
    st.branch = zc.m1_long <= -1.0 ? zoom::Branch::second : zoom::Branch::first;
    st.dx1_mm = 0.0;
    st.dx2_mm = 0.0;
    const auto f_comb = zoom::combined_focal_length(zc.f1, zc.f2, zc.d1_long);
    st.M = std::abs(zoom::expansion_ratio(zc.f3, f_comb));  // throws if afocal pair
    st.f_comb_mm = *f_comb;
    traj.states.push_back(st);
    return traj;
}

int cmd_zoom_solve(const GlobalOptions& g) {
    const config::RunConfig rc = load_config(g);
    const zoom::ZoomTrajectory traj = solve_or_anchor(rc.zoom, rc.zoom_samples);
    const ZoomReport rep = verify_trajectory(traj);

    double m_min = traj.states.front().M, m_max = m_min;
    for (const auto& st : traj.states) {
        m_min = std::min(m_min, st.M);
        m_max = std::max(m_max, st.M);
    }

    std::ostringstream report;
    report << "zoom-solve: " << traj.states.size() << " states, m2 in ["
           << io::fmt_g9(traj.states.front().m2) << ", "
           << io::fmt_g9(traj.states.back().m2) << "], expansion M in ["
           << io::fmt_g9(m_min) << ", " << io::fmt_g9(m_max) << "]\n";
    if (traj.switch_index)
        report << "  compensation branch switch at sample " << *traj.switch_index
               << " (m2 = " << io::fmt_g9(traj.states[*traj.switch_index].m2) << ")\n";
    else
        report << "  compensation branch switch: none\n";
    report << "  max afocality residual |output slope| = " << fmt_e3(rep.max_afocal_slope)
           << " rad (limit " << fmt_e3(kAfocalSlopeLimit) << ")\n";
    report << "  max expansion residual |h_out/h_in - M| = "
           << fmt_e3(rep.max_expansion_err) << " (limit " << fmt_e3(kExpansionErrLimit)
           << ")\n";
    report << "  max conservation residual |U - C| = " << fmt_e3(rep.max_conservation)
           << " (limit " << fmt_e3(kConservationLimit) << ")\n";
    report << (rep.pass ? "PASS" : "FAIL") << "\n";

    const fs::path out = prepare_out_dir(g);
    io::write_trajectory_csv(traj, (out / "trajectory.csv").string());
    io::write_text_file((out / "zoom_report.txt").string(), report.str());
    std::cout << report.str() << "wrote " << (out / "trajectory.csv").string() << "\n";
    return rep.pass ? 0 : 2;
}

// --------------------------------------------------------------------- sweep

int cmd_sweep(const GlobalOptions& g) {
    if (g.config_path.empty()) throw ValidationError("sweep: --config is required");
    const config::RunConfig rc = load_config(g);
    const unsigned threads = static_cast<unsigned>(resolve_threads(g.threads));
    const sweep::SweepConfig sc = config::make_sweep_config(rc, threads);
    const sweep::SweepResult result = sweep::run_sweep(sc);

    const fs::path out = prepare_out_dir(g);
    io::write_text_file((out / "sweep.csv").string(), sweep::sweep_csv(result));
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        const auto& r = result.rows[i];
        char name[96];
        std::snprintf(name, sizeof(name), "scheme_%02zu_d%s_theta%s", i,
                      num_tag(r.d_mm).c_str(), num_tag(r.theta_deg).c_str());
        io::write_recon_image(result.images[i], (out / name).string());
    }

    const auto& best = result.rows[result.best_index];
    std::cout << "sweep: " << result.rows.size() << " schemes -> "
              << (out / "sweep.csv").string() << " (+ per-scheme .pgm/.csv)\n"
              << "best: d = " << io::fmt_g9(best.d_mm) << " mm, theta = "
              << io::fmt_g9(best.theta_deg) << " deg ("
              << illum::to_string(best.scheme_class)
              << ", contrast = " << io::fmt_g9(best.contrast)
              << ", nodes = " << best.node_count << ")\n";
    return 0;
}

// ------------------------------------------------- simulate / reconstruct / metrics

int cmd_simulate(const GlobalOptions& g, bool csv_export) {
    const config::RunConfig rc = load_config(g);
    const unsigned threads = static_cast<unsigned>(resolve_threads(g.threads));
    const pa::Scene scene = config::make_scene(rc);
    const illum::SurfaceGrid sg = sweep::surface_grid_for(
        rc.illumination, rc.fov_mm, rc.surface_dx_mm, rc.surface_dy_mm);
    const illum::FluenceMap fluence = illum::fluence_surface(rc.illumination, sg);
    const pa::SignalFrame frame = pa::simulate(scene, fluence, rc.array, rc.acq, threads);

    const fs::path out = prepare_out_dir(g);
    io::write_frame_paf1(frame, (out / "frame.paf1").string());
    if (csv_export) io::write_frame_csv(frame, (out / "frame.csv").string());

    std::cout << "simulate: " << illum::to_string(illum::classify_scheme(rc.illumination))
              << " scheme, d = " << io::fmt_g9(rc.illumination.d_mm) << " mm, theta = "
              << io::fmt_g9(rc.illumination.theta_deg) << " deg\n"
              << "wrote " << (out / "frame.paf1").string() << " (" << frame.n_elements
              << " x " << frame.n_samples << " @ " << io::fmt_g9(frame.sample_rate_MHz)
              << " MHz)" << (csv_export ? " + frame.csv" : "") << "\n";
    return 0;
}

int cmd_reconstruct(const GlobalOptions& g, const std::string& frame_path) {
    const config::RunConfig rc = load_config(g);
    const unsigned threads = static_cast<unsigned>(resolve_threads(g.threads));
    const pa::SignalFrame frame = io::read_frame_paf1(frame_path);
    const recon::ReconGrid grid = config::make_recon_grid(rc);
    const recon::ReconImage image =
        recon::pipeline(frame, rc.array, grid, rc.sound_speed_m_s, rc.denoise,
                        rc.wavelet_levels, rc.envelope, threads);

    const fs::path out = prepare_out_dir(g);
    io::write_recon_image(image, (out / "recon").string());
    std::cout << "reconstruct: wrote " << (out / "recon").string() << ".pgm/.csv ("
              << grid.nx << " x " << grid.ny << " px @ " << io::fmt_g9(grid.pitch_mm)
              << " mm" << (rc.denoise ? ", denoised" : ", no denoise") << ")\n";
    return 0;
}

int cmd_metrics(const GlobalOptions& g, const std::string& frame_path) {
    const config::RunConfig rc = load_config(g);
    const unsigned threads = static_cast<unsigned>(resolve_threads(g.threads));
    const pa::SignalFrame frame = io::read_frame_paf1(frame_path);
    const recon::ReconGrid grid = config::make_recon_grid(rc);
    const recon::ReconImage image =
        recon::pipeline(frame, rc.array, grid, rc.sound_speed_m_s, rc.denoise,
                        rc.wavelet_levels, rc.envelope, threads);

    const pa::Scene scene = config::make_scene(rc);
    const auto [roi, bg] = metrics::make_phantom_masks(
        scene, grid, rc.roi_halfwidth_mm, rc.bg_clearance_mm, rc.bg_radius_mm);
    const double c = metrics::contrast(image, roi, bg, rc.contrast_kind);
    const int nodes = metrics::count_nodes(image, rc.node_threshold_fraction);

    std::ostringstream csv;
    csv << "d_mm,theta_deg,class,contrast,node_count\n"
        << io::fmt_g9(rc.illumination.d_mm) << "," << io::fmt_g9(rc.illumination.theta_deg)
        << "," << illum::to_string(illum::classify_scheme(rc.illumination)) << ","
        << io::fmt_g9(c) << "," << nodes << "\n";

    const fs::path out = prepare_out_dir(g);
    io::write_text_file((out / "metrics.csv").string(), csv.str());
    std::cout << csv.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "lapai: zoom-optics solver and photoacoustic imaging pipeline "
        "(simulate, reconstruct, score, and sweep illumination schemes)"};
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--config", g.config_path,
                   "JSON run configuration (omitted keys keep the stock-study defaults)");
    app.add_option("--out", g.out_dir, "output directory, created if missing")
        ->capture_default_str();
    auto* seed_opt =
        app.add_option("--seed", g.seed, "override the seed (phantom geometry + noise)");
    app.add_option("--threads", g.threads, "worker threads (0 = hardware count)")
        ->envname("LAPAI_THREADS")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app.add_flag("--no-denoise", g.no_denoise, "skip wavelet denoising before beamforming");

    auto* zoom_cmd = app.add_subcommand(
        "zoom-solve", "solve the three-lens zoom trajectory and verify its invariants");
    auto* sweep_cmd = app.add_subcommand(
        "sweep", "evaluate every configured (d, theta) illumination scheme and rank by contrast");
    auto* sim_cmd = app.add_subcommand(
        "simulate", "synthesize one channel-data frame for the configured scheme");
    bool csv_export = false;
    sim_cmd->add_flag("--csv", csv_export, "also export the frame as CSV (small frames)");
    std::string frame_in;
    auto* rec_cmd =
        app.add_subcommand("reconstruct", "beamform a PAF1 frame into a PGM image");
    rec_cmd->add_option("frame", frame_in, "input PAF1 frame")->required();
    auto* met_cmd = app.add_subcommand(
        "metrics", "reconstruct a PAF1 frame and score contrast and node count");
    met_cmd->add_option("frame", frame_in, "input PAF1 frame")->required();

    for (auto* sub : {zoom_cmd, sweep_cmd, sim_cmd, rec_cmd, met_cmd}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage problems are validation errors
    }
    g.seed_given = seed_opt->count() > 0;

    try {
        if (zoom_cmd->parsed()) return cmd_zoom_solve(g);
        if (sweep_cmd->parsed()) return cmd_sweep(g);
        if (sim_cmd->parsed()) return cmd_simulate(g, csv_export);
        if (rec_cmd->parsed()) return cmd_reconstruct(g, frame_in);
        if (met_cmd->parsed()) return cmd_metrics(g, frame_in);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const InfeasibleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
