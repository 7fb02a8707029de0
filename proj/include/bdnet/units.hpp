#pragma once

namespace bdnet {

/// Speed of light in mm·THz, so λ[mm] = kSpeedOfLight / f[THz].
inline constexpr double kSpeedOfLight = 0.299792458;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

inline double wavelength_mm(double frequency_thz) { return kSpeedOfLight / frequency_thz; }

}  // namespace bdnet
