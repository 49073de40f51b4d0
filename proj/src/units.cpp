#include "rotcool/units.hpp"

#include <numbers>
#include <stdexcept>
#include <string>

namespace rotcool::units {
namespace {

enum class Dimension { energy, length, time, frequency };

struct UnitInfo {
  Dimension dim;
  double to_base;  // factor to the atomic-unit value of that dimension
};

UnitInfo info(Unit u) {
  switch (u) {
    case Unit::eV: return {Dimension::energy, 1.0 / hartree_eV};
    case Unit::Hartree: return {Dimension::energy, 1.0};
    case Unit::um: return {Dimension::length, 1e-6 / bohr_m};
    case Unit::Bohr: return {Dimension::length, 1.0};
    case Unit::s: return {Dimension::time, 1.0 / time_s};
    case Unit::ms: return {Dimension::time, 1e-3 / time_s};
    case Unit::au_time: return {Dimension::time, 1.0};
    case Unit::Hz: return {Dimension::frequency, 2.0 * std::numbers::pi * time_s};
    case Unit::au_angular_frequency: return {Dimension::frequency, 1.0};
  }
  throw std::invalid_argument("unknown unit");
}

}  // namespace

double convert(double value, Unit from, Unit to) {
  const UnitInfo a = info(from);
  const UnitInfo b = info(to);
  if (a.dim != b.dim) {
    throw std::invalid_argument("cannot convert " + std::string(unit_name(from)) + " to " +
                                std::string(unit_name(to)));
  }
  if (from == to) return value;
  return value * a.to_base / b.to_base;
}

Unit parse_unit(std::string_view name) {
  if (name == "eV") return Unit::eV;
  if (name == "Hartree" || name == "Ha") return Unit::Hartree;
  if (name == "um") return Unit::um;
  if (name == "Bohr" || name == "a0") return Unit::Bohr;
  if (name == "s") return Unit::s;
  if (name == "ms") return Unit::ms;
  if (name == "au_time") return Unit::au_time;
  if (name == "Hz") return Unit::Hz;
  if (name == "au_angular_frequency") return Unit::au_angular_frequency;
  throw std::invalid_argument("unknown unit '" + std::string(name) + "'");
}

std::string_view unit_name(Unit unit) {
  switch (unit) {
    case Unit::eV: return "eV";
    case Unit::Hartree: return "Hartree";
    case Unit::um: return "um";
    case Unit::Bohr: return "Bohr";
    case Unit::s: return "s";
    case Unit::ms: return "ms";
    case Unit::au_time: return "au_time";
    case Unit::Hz: return "Hz";
    case Unit::au_angular_frequency: return "au_angular_frequency";
  }
  return "?";
}

}  // namespace rotcool::units
