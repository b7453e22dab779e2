#pragma once

// File formats. Channel frames: "PAF1" binary (little-endian): magic,
// u32 n_elements, u32 n_samples, f64 sample_rate_MHz, f64 t0_us, then
// row-major float32 samples. Images: binary 16-bit PGM (P5, big-endian
// sample bytes per the format), normalized to the image maximum, with a
// one-row CSV sidecar carrying geometry and the normalization factor.
// All CSV numbers use %.9g so identical runs produce identical bytes.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lapai/common.hpp"
#include "lapai/illumination.hpp"
#include "lapai/pa_forward.hpp"
#include "lapai/recon.hpp"
#include "lapai/zoom_optics.hpp"

namespace lapai::io {

// Fixed CSV number format: enough digits to round-trip the values we care
// about while keeping identical runs byte-identical.
inline std::string fmt_g9(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << content;
    if (!os) throw IoError("failed writing '" + path + "'");
}

namespace detail {

template <typename T>
void put_raw(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get_raw(std::ifstream& is, const std::string& path, std::size_t& offset) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (is.gcount() != static_cast<std::streamsize>(sizeof(T))) {
        std::ostringstream msg;
        msg << "frame file '" << path << "' truncated at byte "
            << offset + static_cast<std::size_t>(is.gcount());
        throw IoError(msg.str());
    }
    offset += sizeof(T);
    return v;
}

}  // namespace detail

inline void write_frame_paf1(const pa::SignalFrame& frame, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os.write("PAF1", 4);
    detail::put_raw(os, static_cast<std::uint32_t>(frame.n_elements));
    detail::put_raw(os, static_cast<std::uint32_t>(frame.n_samples));
    detail::put_raw(os, frame.sample_rate_MHz);
    detail::put_raw(os, frame.t0_us);
    for (double v : frame.data) detail::put_raw(os, static_cast<float>(v));
    if (!os) throw IoError("failed writing '" + path + "'");
}

inline pa::SignalFrame read_frame_paf1(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "' for reading");
    std::size_t offset = 0;
    char magic[4];
    is.read(magic, 4);
    if (is.gcount() != 4) {
        std::ostringstream msg;
        msg << "frame file '" << path << "' truncated at byte " << is.gcount();
        throw IoError(msg.str());
    }
    offset = 4;
    if (std::memcmp(magic, "PAF1", 4) != 0)
        throw IoError("frame file '" + path + "': bad magic at byte 0 (expected PAF1)");
    pa::SignalFrame frame;
    frame.n_elements = detail::get_raw<std::uint32_t>(is, path, offset);
    frame.n_samples = detail::get_raw<std::uint32_t>(is, path, offset);
    frame.sample_rate_MHz = detail::get_raw<double>(is, path, offset);
    frame.t0_us = detail::get_raw<double>(is, path, offset);
    frame.data.resize(frame.n_elements * frame.n_samples);
    for (double& v : frame.data)
        v = static_cast<double>(detail::get_raw<float>(is, path, offset));
    return frame;
}

// Human-readable export for small frames: one row per sample, one column
// per element, first column the sample time in microseconds.
inline std::string frame_csv(const pa::SignalFrame& frame) {
    std::ostringstream os;
    os << "time_us";
    for (std::size_t e = 0; e < frame.n_elements; ++e) os << ",e" << e;
    os << "\n";
    for (std::size_t s = 0; s < frame.n_samples; ++s) {
        os << fmt_g9(frame.time_us(s));
        for (std::size_t e = 0; e < frame.n_elements; ++e)
            os << "," << fmt_g9(frame.at(e, s));
        os << "\n";
    }
    return os.str();
}

inline void write_frame_csv(const pa::SignalFrame& frame, const std::string& path) {
    write_text_file(path, frame_csv(frame));
}

struct Pgm16 {
    std::size_t nx = 0, ny = 0;
    std::uint16_t maxval = 65535;
    std::vector<std::uint16_t> data;  // row-major, x fastest
};

// Write values normalized by their maximum into a 16-bit binary PGM.
// Returns the normalization factor (the image maximum; 0 for an all-zero
// image, which is written as all zeros).
inline double write_pgm16(const std::vector<double>& values, std::size_t nx, std::size_t ny,
                          const std::string& path) {
    if (values.size() != nx * ny) throw ValidationError("pgm: size mismatch");
    double max_v = 0.0;
    for (double v : values) max_v = std::max(max_v, v);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "P5\n" << nx << " " << ny << "\n65535\n";
    for (double v : values) {
        const double unit = max_v > 0.0 ? v / max_v : 0.0;
        const auto q = static_cast<std::uint16_t>(std::lround(
            std::min(std::max(unit, 0.0), 1.0) * 65535.0));
        const unsigned char hi = static_cast<unsigned char>(q >> 8);
        const unsigned char lo = static_cast<unsigned char>(q & 0xff);
        os.put(static_cast<char>(hi));
        os.put(static_cast<char>(lo));
    }
    if (!os) throw IoError("failed writing '" + path + "'");
    return max_v;
}

inline Pgm16 read_pgm16(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "' for reading");
    std::string magic;
    std::size_t nx = 0, ny = 0;
    unsigned maxval = 0;
    is >> magic >> nx >> ny >> maxval;
    if (magic != "P5" || maxval != 65535)
        throw IoError("image file '" + path + "': expected binary 16-bit PGM");
    is.get();  // single whitespace after the header
    Pgm16 img;
    img.nx = nx;
    img.ny = ny;
    img.data.resize(nx * ny);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const int hi = is.get(), lo = is.get();
        if (hi < 0 || lo < 0)
            throw IoError("image file '" + path + "' truncated in pixel data");
        img.data[i] = static_cast<std::uint16_t>((hi << 8) | lo);
    }
    return img;
}

// Reconstruction image + sidecar `nx,ny,pitch_mm,origin_x_mm,origin_y_mm,max_value`.
inline void write_recon_image(const recon::ReconImage& image, const std::string& base_path) {
    const double max_v =
        write_pgm16(image.values, image.grid.nx, image.grid.ny, base_path + ".pgm");
    std::ostringstream csv;
    csv << "nx,ny,pitch_mm,origin_x_mm,origin_y_mm,max_value\n"
        << image.grid.nx << "," << image.grid.ny << ","
        << fmt_g9(image.grid.pitch_mm) << ","
        << fmt_g9(image.grid.origin_x_mm) << ","
        << fmt_g9(image.grid.origin_y_mm) << "," << fmt_g9(max_v) << "\n";
    write_text_file(base_path + ".csv", csv.str());
}

// Surface fluence + sidecar `nx,ny,dx_mm,dy_mm,peak_mJ_cm2`.
inline void write_fluence_map(const illum::FluenceMap& map, const std::string& base_path) {
    const double peak = write_pgm16(map.values, map.grid.nx, map.grid.ny, base_path + ".pgm");
    std::ostringstream csv;
    csv << "nx,ny,dx_mm,dy_mm,peak_mJ_cm2\n"
        << map.grid.nx << "," << map.grid.ny << "," << fmt_g9(map.grid.dx_mm)
        << "," << fmt_g9(map.grid.dy_mm) << "," << fmt_g9(peak) << "\n";
    write_text_file(base_path + ".csv", csv.str());
}

inline std::string trajectory_csv(const zoom::ZoomTrajectory& traj) {
    std::ostringstream os;
    os << "m2,m1,branch,dx1_mm,dx2_mm,f_comb_mm,M\n";
    for (const auto& s : traj.states) {
        os << fmt_g9(s.m2) << "," << fmt_g9(s.m1) << ","
           << (s.branch == zoom::Branch::first ? "first" : "second") << ","
           << fmt_g9(s.dx1_mm) << "," << fmt_g9(s.dx2_mm) << ","
           << fmt_g9(s.f_comb_mm) << "," << fmt_g9(s.M) << "\n";
    }
    return os.str();
}

inline void write_trajectory_csv(const zoom::ZoomTrajectory& traj, const std::string& path) {
    write_text_file(path, trajectory_csv(traj));
}

}  // namespace lapai::io
