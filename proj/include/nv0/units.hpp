// SI unit multipliers. Everything inside the library is SI: Hz, s, V/m, W.

#ifndef NV0_UNITS_HPP
#define NV0_UNITS_HPP

namespace nv0::units {

inline constexpr double Hz = 1.0;
inline constexpr double kHz = 1e3;
inline constexpr double MHz = 1e6;
inline constexpr double GHz = 1e9;

inline constexpr double s = 1.0;
inline constexpr double ms = 1e-3;
inline constexpr double us = 1e-6;
inline constexpr double ns = 1e-9;

inline constexpr double W = 1.0;
inline constexpr double mW = 1e-3;
inline constexpr double uW = 1e-6;

inline constexpr double V = 1.0;
inline constexpr double mV = 1e-3;

inline constexpr double V_per_m = 1.0;
inline constexpr double V_per_cm = 100.0;

// susceptibilities: frequency per field
inline constexpr double Hz_per_V_per_m = 1.0;
inline constexpr double kHz_per_V_per_cm = kHz / V_per_cm;
inline constexpr double MHz_per_V_per_cm = MHz / V_per_cm;

}  // namespace nv0::units

#endif  // NV0_UNITS_HPP
