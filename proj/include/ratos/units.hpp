#pragma once

// Human units used by config files and schedule expressions, and their
// conversion to the internal SI system (s, m, rad/s). Every conversion from
// config text goes through this header.

#include <numbers>

namespace ratos::units {

inline constexpr double speed_of_light = 299792458.0;  // m/s
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr double from_us(double us) { return us * 1e-6; }
inline constexpr double to_us(double s) { return s * 1e6; }
inline constexpr double from_ns(double ns) { return ns * 1e-9; }
inline constexpr double from_cm(double cm) { return cm * 1e-2; }

/// Frequency in MHz to angular rate (rad/s).
inline constexpr double from_mhz(double mhz) { return two_pi * mhz * 1e6; }
/// Frequency in kHz to angular rate (rad/s).
inline constexpr double from_khz(double khz) { return two_pi * khz * 1e3; }
inline constexpr double to_mhz(double rad_s) { return rad_s / (two_pi * 1e6); }

}  // namespace ratos::units
