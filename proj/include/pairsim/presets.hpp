#ifndef PAIRSIM_PRESETS_HPP
#define PAIRSIM_PRESETS_HPP

// Measured source parameters for the three filter configurations and the two
// detector generations, as characterized on the physical setup.

#include <string>

#include "pairsim/budget.hpp"
#include "pairsim/constants.hpp"
#include "pairsim/errors.hpp"
#include "pairsim/events.hpp"
#include "pairsim/spectral.hpp"

namespace pairsim::presets {

inline constexpr double kPumpWavelength = 780.24e-9;        // m
inline constexpr double kDegenerateWavelength = 1560.48e-9; // m
inline constexpr double kMziDelay = 76e-9;                  // s
inline constexpr double kPumpLinewidth = 150e3;             // Hz

inline double degenerate_frequency() {
  return wavelength_to_frequency(kDegenerateWavelength);
}

inline SpdcConfig spdc() { return SpdcConfig{}; }

// 100 GHz-grid DWDM: flat-top passband of 80 GHz.
inline FilterSpec dwdm_100ghz() {
  return FilterSpec::flat_top(degenerate_frequency(), 80e9);
}

// 540 MHz phase-shifted fiber Bragg grating: Lorentzian, 540/580 MHz for
// V/H with the birefringent mode split of 480 MHz, tunable at ~1 GHz/K.
inline FilterSpec psfbg_540mhz() {
  const double c = degenerate_frequency();
  return FilterSpec::lorentzian(c, 540e6, c + 480e6, 580e6, 1e9);
}

// 25 MHz PSFBG: 25/28 MHz for V/H, 80 MHz mode split, ~200 MHz/K.
inline FilterSpec psfbg_25mhz() {
  const double c = degenerate_frequency();
  return FilterSpec::lorentzian(c, 25e6, c + 80e6, 28e6, 200e6);
}

// InGaAs avalanche photodiodes: 20% efficiency, 230 ps jitter, dark counts
// at 1e-6/ns. The dead time is the device-class default, not a measured
// figure.
inline DetectorModel ingaas() { return {0.20, 230e-12, 1e3, 10e-6}; }

// Superconducting detectors: 7% efficiency, <10 darks/s. Jitter and dead
// time are device-class defaults.
inline DetectorModel snspd() { return {0.07, 60e-12, 10.0, 100e-9}; }

inline BrightnessSpec brightness() { return BrightnessSpec{}; }

// Measured single-photon propagation losses plus the pair-level items
// (Lorentzian energy-anticorrelation penalty, time-bin post-selection,
// non-deterministic splitting).
inline LossBudget loss_dwdm() { return {4.5, 0.0, 3.0, 3.0, 0.0}; }
inline LossBudget loss_540mhz() { return {5.2, 3.0, 3.0, 3.0, 0.0}; }
inline LossBudget loss_25mhz() { return {5.7, 3.0, 3.0, 3.0, 0.0}; }

enum class FilterPreset { Dwdm100GHz, Psfbg540MHz, Psfbg25MHz, Custom };
enum class DetectorPreset { InGaAs, Snspd, Custom };

inline FilterPreset filter_preset_from_name(const std::string& name) {
  if (name == "dwdm100ghz") return FilterPreset::Dwdm100GHz;
  if (name == "psfbg540mhz") return FilterPreset::Psfbg540MHz;
  if (name == "psfbg25mhz") return FilterPreset::Psfbg25MHz;
  if (name == "custom") return FilterPreset::Custom;
  throw ValidationError("unknown filter preset: " + name);
}

inline DetectorPreset detector_preset_from_name(const std::string& name) {
  if (name == "ingaas") return DetectorPreset::InGaAs;
  if (name == "snspd") return DetectorPreset::Snspd;
  if (name == "custom") return DetectorPreset::Custom;
  throw ValidationError("unknown detector preset: " + name);
}

inline FilterSpec filter_for(FilterPreset p) {
  switch (p) {
    case FilterPreset::Dwdm100GHz: return dwdm_100ghz();
    case FilterPreset::Psfbg540MHz: return psfbg_540mhz();
    case FilterPreset::Psfbg25MHz: return psfbg_25mhz();
    default: throw ValidationError("custom filter preset requires explicit fields");
  }
}

inline DetectorModel detector_for(DetectorPreset p) {
  switch (p) {
    case DetectorPreset::InGaAs: return ingaas();
    case DetectorPreset::Snspd: return snspd();
    default: throw ValidationError("custom detector preset requires explicit fields");
  }
}

inline LossBudget loss_for(FilterPreset p) {
  switch (p) {
    case FilterPreset::Dwdm100GHz: return loss_dwdm();
    case FilterPreset::Psfbg540MHz: return loss_540mhz();
    case FilterPreset::Psfbg25MHz: return loss_25mhz();
    default: throw ValidationError("custom filter preset has no loss table");
  }
}

}  // namespace pairsim::presets

#endif  // PAIRSIM_PRESETS_HPP
