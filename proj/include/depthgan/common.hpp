#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace depthgan {

using Scalar = double;

constexpr Scalar kPi = 3.14159265358979323846;

inline Scalar deg_to_rad(Scalar deg) { return deg * kPi / 180.0; }
inline Scalar rad_to_deg(Scalar rad) { return rad * 180.0 / kPi; }

// Contract violations (bad shapes, out-of-range arguments).
inline void check_arg(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Runtime failures (I/O, numeric breakdown).
inline void check_runtime(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

}  // namespace depthgan
