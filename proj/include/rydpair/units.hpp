#pragma once

// Physical constants (CODATA 2018) and unit conversions. Everything inside the
// library is SI unless a name says otherwise.

namespace rydpair::units {

inline constexpr double pi = 3.14159265358979323846;

inline constexpr double planck = 6.62607015e-34;             // J s
inline constexpr double hbar = planck / (2.0 * pi);          // J s
inline constexpr double speed_of_light = 299792458.0;        // m/s
inline constexpr double elementary_charge = 1.602176634e-19; // C
inline constexpr double electron_mass = 9.1093837015e-31;    // kg
inline constexpr double epsilon0 = 8.8541878128e-12;         // F/m
inline constexpr double bohr_radius = 5.29177210903e-11;     // m
inline constexpr double rydberg_infinity = 10973731.568160;  // 1/m
inline constexpr double fine_structure = 7.2973525693e-3;
inline constexpr double bohr_magneton = 9.2740100783e-24;    // J/T
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg
inline constexpr double hartree = 4.3597447222071e-18;       // J

inline constexpr double ea0 = elementary_charge * bohr_radius; // C m

inline constexpr double joule_to_ghz(double e) { return e / planck * 1e-9; }
inline constexpr double ghz_to_joule(double f) { return f * 1e9 * planck; }
inline constexpr double joule_to_mhz(double e) { return e / planck * 1e-6; }
inline constexpr double mhz_to_joule(double f) { return f * 1e6 * planck; }
inline constexpr double joule_to_hartree(double e) { return e / hartree; }
inline constexpr double hartree_to_joule(double e) { return e * hartree; }
inline constexpr double joule_to_ev(double e) { return e / elementary_charge; }

inline constexpr double um_to_m(double r) { return r * 1e-6; }
inline constexpr double m_to_a0(double r) { return r / bohr_radius; }
inline constexpr double a0_to_m(double r) { return r * bohr_radius; }

inline constexpr double mv_per_cm_to_v_per_m(double f) { return f * 0.1; }
inline constexpr double gauss_to_tesla(double b) { return b * 1e-4; }

inline constexpr double deg_to_rad(double d) { return d * pi / 180.0; }
inline constexpr double rad_to_deg(double r) { return r * 180.0 / pi; }

} // namespace rydpair::units
