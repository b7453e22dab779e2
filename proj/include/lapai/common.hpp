#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace lapai {

inline constexpr double kPi = 3.14159265358979323846;

// Error taxonomy mapped to process exit codes by the CLI:
//   ValidationError -> 1, InfeasibleError -> 2, IoError -> 3.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A request that is well-formed but numerically unsatisfiable
// (e.g. compensation quadratic with |b| < 2, magnification out of range).
struct InfeasibleError : std::runtime_error {
    explicit InfeasibleError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

inline double sq(double x) { return x * x; }

}  // namespace lapai
