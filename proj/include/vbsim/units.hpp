#pragma once

// Internal unit system: MHz for energies, dimensionless strain, GPa for
// stress, V/cm for electric field, nm for lengths, e for charge.
// Every conversion between external and internal units goes through here.

namespace vbsim::units {

inline constexpr double kMhzPerGhz = 1.0e3;
inline constexpr double kMhzPerHz = 1.0e-6;
inline constexpr double kVPerCmPerVPerNm = 1.0e7;

// e / (4 pi eps0) expressed in V nm, so K q / r^2 is V/nm for r in nm.
inline constexpr double kCoulombVNm = 1.4399645;

constexpr double ghz_to_mhz(double ghz) { return ghz * kMhzPerGhz; }
constexpr double mhz_to_ghz(double mhz) { return mhz / kMhzPerGhz; }

// d_perp [Hz cm/V] times field [V/cm] gives Hz; returns MHz.
constexpr double hz_cm_per_v_times_v_per_cm_to_mhz(double hz_cm_per_v, double v_per_cm) {
  return hz_cm_per_v * v_per_cm * kMhzPerHz;
}

constexpr double v_per_nm_to_v_per_cm(double v_per_nm) { return v_per_nm * kVPerCmPerVPerNm; }

}  // namespace vbsim::units
