#ifndef PAIRSIM_CONSTANTS_HPP
#define PAIRSIM_CONSTANTS_HPP

#include <cmath>
#include <limits>

namespace pairsim {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPlanck = 6.62607015e-34;     // J s
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// FWHM of a Gaussian = 2*sqrt(2*ln 2) * sigma.
inline constexpr double kFwhmToSigma = 2.3548200450309493;

// Positive root of sin^2(x)/x^2 = 1/2; sets the half-power point of a
// sinc^2 profile (full width 2.78311... in the argument).
inline constexpr double kSincSqHalfPowerArg = 1.39155737825151;

// Positive root of sin(x)/x = 1/2.
inline constexpr double kSincHalfArg = 1.8954942670339809;

inline double db_loss_to_transmission(double loss_db) {
  return std::pow(10.0, -loss_db / 10.0);
}

inline double transmission_to_db_loss(double transmission) {
  if (transmission <= 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(transmission);
}

inline double fwhm_to_sigma(double fwhm) { return fwhm / kFwhmToSigma; }

inline double wavelength_to_frequency(double wavelength_m) {
  return kSpeedOfLight / wavelength_m;
}

inline double frequency_to_wavelength(double frequency_hz) {
  return kSpeedOfLight / frequency_hz;
}

// Wraps an angle into (-pi, pi].
inline double wrap_to_pi(double angle) {
  double a = std::fmod(angle + kPi, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a - kPi;
}

}  // namespace pairsim

#endif  // PAIRSIM_CONSTANTS_HPP
