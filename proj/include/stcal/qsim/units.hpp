#pragma once

#include <numbers>

// Internal unit system: time in ns, angular frequencies in rad/ns, voltages in mV.
namespace stcal::qsim {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Every control segment lasts exactly this long.
inline constexpr double kSegmentNs = 1.0;
// Sampling rate of the segment grid, Hz.
inline constexpr double kSampleRateHz = 1e9;

// A frequency f given in MHz (i.e. "f * 2pi * 1e6 1/s") as angular frequency in rad/ns.
constexpr double mhz_to_rad_per_ns(double mhz) { return mhz * kTwoPi * 1e-3; }
constexpr double rad_per_ns_to_mhz(double w) { return w / (kTwoPi * 1e-3); }

}  // namespace stcal::qsim
