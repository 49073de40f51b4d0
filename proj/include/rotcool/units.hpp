#pragma once

#include <string_view>

// Hartree atomic units are used everywhere inside the library
// (hbar = e = m_e = 4 pi eps0 = 1, both ion charges +1).
namespace rotcool::units {

// CODATA 2018
inline constexpr double hartree_eV = 27.211386245988;
inline constexpr double bohr_m = 5.29177210903e-11;
inline constexpr double time_s = 2.4188843265857e-17;
inline constexpr double amu_me = 1822.888486209;
inline constexpr double proton_me = 1836.15267343;

enum class Unit { eV, Hartree, um, Bohr, s, ms, au_time, Hz, au_angular_frequency };

// Hz is an ordinary frequency f; its atomic-unit counterpart is the
// angular frequency 2 pi f in inverse atomic time units.
double convert(double value, Unit from, Unit to);

Unit parse_unit(std::string_view name);
std::string_view unit_name(Unit unit);

inline double eV_to_hartree(double e) { return e / hartree_eV; }
inline double hartree_to_eV(double e) { return e * hartree_eV; }
inline double um_to_bohr(double x) { return x * 1e-6 / bohr_m; }
inline double bohr_to_um(double x) { return x * bohr_m * 1e6; }
inline double au_time_to_s(double t) { return t * time_s; }
inline double hz_to_au_angular(double f) { return 2.0 * 3.14159265358979323846 * f * time_s; }

}  // namespace rotcool::units
