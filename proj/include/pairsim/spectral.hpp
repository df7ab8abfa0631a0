#ifndef PAIRSIM_SPECTRAL_HPP
#define PAIRSIM_SPECTRAL_HPP

// Frequency-domain models: the SPDC emission spectrum and its temperature
// tuning, filter transfer functions, the coincidence-peak temporal profile of
// the filtered biphoton, and filter-induced pair losses.

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "pairsim/constants.hpp"
#include "pairsim/errors.hpp"
#include "pairsim/polarization.hpp"

namespace pairsim {

// ---------------------------------------------------------------------------
// SPDC spectrum

// Parameterized tuning model: the phase-matched signal/idler centers separate
// in wavelength by tuning_span per kelvin away from the degeneracy
// temperature, while energy conservation nu_s + nu_i = nu_pump holds exactly.
struct SpdcConfig {
  double pump_wavelength = 780.24e-9;     // m
  double degeneracy_temperature = 387.0;  // K
  double fwhm_at_degeneracy = 4.0e12;     // Hz, width of the degenerate sinc^2
  double tuning_span = 35.0e-9;           // m of signal-idler separation per K
  double crystal_length_proxy = 1.0;      // extra scale on the sinc argument

  double pump_frequency() const { return wavelength_to_frequency(pump_wavelength); }
  double degenerate_frequency() const { return 0.5 * pump_frequency(); }
  double degenerate_wavelength() const { return 2.0 * pump_wavelength; }

  // Branch center frequencies (signal, idler) at a given temperature.
  std::pair<double, double> branch_centers(double temperature) const {
    const double separation = tuning_span * (temperature - degeneracy_temperature);
    const double lambda_s = degenerate_wavelength() - 0.5 * separation;
    if (lambda_s <= 0.0) throw ValidationError("tuning pushed signal wavelength negative");
    const double nu_s = wavelength_to_frequency(lambda_s);
    return {nu_s, pump_frequency() - nu_s};
  }
};

// Relative spectral density in [0, 1]: sinc^2 of a phase-mismatch variable
// that vanishes on both branches and is quadratic through degeneracy. The
// scale is calibrated so the degenerate profile has FWHM fwhm_at_degeneracy.
inline double spdc_spectral_density(const SpdcConfig& cfg, double temperature, double nu) {
  if (nu <= 0.0) throw ValidationError("frequency must be positive");
  const auto [nu_s, nu_i] = cfg.branch_centers(temperature);
  const double half_width = 0.5 * cfg.fwhm_at_degeneracy;
  const double scale = cfg.crystal_length_proxy * kSincSqHalfPowerArg / (half_width * half_width);
  const double x = scale * (nu - nu_s) * (nu - nu_i);
  if (x == 0.0) return 1.0;
  const double s = std::sin(x) / x;
  return s * s;
}

// ---------------------------------------------------------------------------
// Filters

enum class FilterShape { FlatTop, Lorentzian };

struct FilterSpec {
  FilterShape shape = FilterShape::FlatTop;
  double center_v = 0.0;  // Hz, at the reference temperature
  double fwhm_v = 0.0;    // Hz
  double center_h = 0.0;
  double fwhm_h = 0.0;
  double temperature_tuning = 0.0;      // Hz/K
  double temperature = 0.0;             // K
  double reference_temperature = 0.0;   // K
  double edge_width = 0.0;              // Hz, raised-cosine edge for flat-top

  static FilterSpec flat_top(double center, double fwhm) {
    FilterSpec f;
    f.shape = FilterShape::FlatTop;
    f.center_v = f.center_h = center;
    f.fwhm_v = f.fwhm_h = fwhm;
    return f;
  }

  static FilterSpec lorentzian(double center_v, double fwhm_v, double center_h,
                               double fwhm_h, double tuning_hz_per_k = 0.0) {
    FilterSpec f;
    f.shape = FilterShape::Lorentzian;
    f.center_v = center_v;
    f.fwhm_v = fwhm_v;
    f.center_h = center_h;
    f.fwhm_h = fwhm_h;
    f.temperature_tuning = tuning_hz_per_k;
    return f;
  }

  double effective_center(Pol pol) const {
    const double base = (pol == Pol::V) ? center_v : center_h;
    return base + temperature_tuning * (temperature - reference_temperature);
  }
  double fwhm(Pol pol) const { return (pol == Pol::V) ? fwhm_v : fwhm_h; }

  void validate() const {
    if (fwhm_v <= 0.0 || fwhm_h <= 0.0) throw ValidationError("filter FWHM must be positive");
    if (shape == FilterShape::FlatTop &&
        (center_v != center_h || fwhm_v != fwhm_h))
      throw ValidationError("flat-top filters must have equal H and V parameters");
  }
};

// Intensity transmission in [0, 1].
inline double filter_transmission(const FilterSpec& f, double nu, Pol pol) {
  const double center = f.effective_center(pol);
  const double width = f.fwhm(pol);
  const double d = nu - center;
  if (f.shape == FilterShape::Lorentzian) {
    const double x = 2.0 * d / width;
    return 1.0 / (1.0 + x * x);
  }
  const double half = 0.5 * width;
  const double ad = std::abs(d);
  if (f.edge_width <= 0.0) return ad <= half ? 1.0 : 0.0;
  if (ad <= half - 0.5 * f.edge_width) return 1.0;
  if (ad >= half + 0.5 * f.edge_width) return 0.0;
  return 0.5 * (1.0 + std::cos(kPi * (ad - half + 0.5 * f.edge_width) / f.edge_width));
}

// ---------------------------------------------------------------------------
// Temporal correlation

struct TemporalCorrelation {
  std::vector<double> tau_grid;  // s, uniform, centered on zero
  std::vector<double> profile;   // unit peak, nonnegative
  double fwhm = 0.0;             // s
  // Energy sums on the two sides of the transform (FFT convention check).
  double spectral_energy = 0.0;
  double temporal_energy = 0.0;
};

struct CorrelationGridOptions {
  double span_factor = 20.0;        // grid span >= span_factor * expected width
  double resolution_factor = 50.0;  // grid step <= expected width / resolution_factor
  std::size_t max_points = std::size_t{1} << 22;
  std::size_t min_points = 1024;
};

namespace detail {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Symmetric half-max crossing via linear interpolation around the peak.
inline double fwhm_from_profile(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = y.size();
  std::size_t peak = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (y[i] > y[peak]) peak = i;
  const double half = 0.5 * y[peak];
  double left = x.front(), right = x.back();
  for (std::size_t i = peak; i-- > 0;) {
    if (y[i] <= half) {
      const double t = (half - y[i]) / (y[i + 1] - y[i]);
      left = x[i] + t * (x[i + 1] - x[i]);
      break;
    }
  }
  for (std::size_t i = peak + 1; i < n; ++i) {
    if (y[i] <= half) {
      const double t = (y[i - 1] - half) / (y[i - 1] - y[i]);
      right = x[i - 1] + t * (x[i] - x[i - 1]);
      break;
    }
  }
  return right - left;
}

}  // namespace detail

// Expected zero-jitter coincidence-peak width for grid sizing.
inline double estimated_peak_width(const FilterSpec& f, Pol pol) {
  const double bw = f.fwhm(pol);
  if (f.shape == FilterShape::Lorentzian) return 2.0 * std::log(2.0) / (kPi * bw);
  return 2.0 * kSincHalfArg / (kPi * bw);
}

// Coincidence-peak temporal profile of the filtered biphoton.
//
// The peak shape is the magnitude of the Fourier transform of the filtered
// single-photon spectral intensity (Wiener-Khinchin: the field
// autocorrelation of one photon of the pair), convolved with one Gaussian per
// detector timing jitter and normalized to unit peak. For a Lorentzian filter
// of width B this gives FWHM = 2 ln2/(pi B), reproducing the measured peak
// broadenings (0.8 ns at 540 MHz, 17.6 ns at 25 MHz); offsets between filter
// center and the degeneracy point only add linear spectral phase and drop out
// of the magnitude.
inline TemporalCorrelation biphoton_temporal_correlation(
    const FilterSpec& f, Pol pol, std::span<const double> jitter_fwhms,
    const CorrelationGridOptions& grid = {}) {
  f.validate();
  const double w0 = estimated_peak_width(f, pol);
  double jitter_sq = 0.0;
  for (double j : jitter_fwhms) jitter_sq += j * j;
  const double w_total = std::sqrt(w0 * w0 + jitter_sq);

  const double span = grid.span_factor * w_total;
  const double dt_needed = std::min(w0 / 8.0, w_total / grid.resolution_factor);
  std::size_t n = detail::next_pow2(
      static_cast<std::size_t>(std::ceil(span / dt_needed)));
  n = std::max(n, grid.min_points);
  if (n > grid.max_points)
    throw ResolutionError("temporal correlation grid exceeds max_points");
  const double dt = span / static_cast<double>(n);
  const double dnu = 1.0 / span;

  // Spectrum sampled in wrapped (FFT) order around the filter center.
  const double center = f.effective_center(pol);
  std::vector<std::complex<double>> freq(n);
  double spectral_energy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double idx = (k <= n / 2) ? static_cast<double>(k)
                                    : static_cast<double>(k) - static_cast<double>(n);
    const double t = filter_transmission(f, center + idx * dnu, pol);
    freq[k] = t;
    spectral_energy += t * t * dnu;
  }

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> time;
  fft.fwd(time, freq);

  // |A(tau)|, wrapped order; also accumulate the Parseval sum.
  std::vector<double> mag(n);
  double temporal_energy = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    mag[j] = std::abs(time[j]) * dnu;
    temporal_energy += mag[j] * mag[j] * dt;
  }

  // Detector jitters enter as Gaussian convolutions of the peak profile.
  if (jitter_sq > 0.0) {
    std::vector<std::complex<double>> mag_spectrum;
    std::vector<std::complex<double>> mag_c(mag.begin(), mag.end());
    fft.fwd(mag_spectrum, mag_c);
    for (std::size_t m = 0; m < n; ++m) {
      const double idx = (m <= n / 2) ? static_cast<double>(m)
                                      : static_cast<double>(m) - static_cast<double>(n);
      const double fr = idx * dnu;
      double damp = 1.0;
      for (double j : jitter_fwhms) {
        const double sigma = fwhm_to_sigma(j);
        damp *= std::exp(-2.0 * kPi * kPi * sigma * sigma * fr * fr);
      }
      mag_spectrum[m] *= damp;
    }
    std::vector<std::complex<double>> back;
    fft.inv(back, mag_spectrum);
    for (std::size_t j = 0; j < n; ++j) mag[j] = std::max(0.0, back[j].real());
  }

  // Unwrap to a centered grid and normalize to unit peak.
  TemporalCorrelation out;
  out.tau_grid.resize(n);
  out.profile.resize(n);
  const auto half_n = static_cast<std::ptrdiff_t>(n / 2);
  for (std::size_t j = 0; j < n; ++j) {
    const auto centered = static_cast<std::ptrdiff_t>(j) - half_n;
    out.tau_grid[j] = static_cast<double>(centered) * dt;
    const std::size_t wrapped = (j + n / 2) % n;
    out.profile[j] = mag[wrapped];
  }
  const double peak = *std::max_element(out.profile.begin(), out.profile.end());
  for (double& v : out.profile) v /= peak;
  out.spectral_energy = spectral_energy;
  out.temporal_energy = temporal_energy;
  out.fwhm = detail::fwhm_from_profile(out.tau_grid, out.profile);
  if (out.fwhm < 5.0 * dt)
    throw ResolutionError("temporal correlation grid too coarse for peak width");
  return out;
}

// Zero-jitter coincidence-peak FWHM.
inline double coherence_time(const FilterSpec& f, Pol pol) {
  return biphoton_temporal_correlation(f, pol, {}).fwhm;
}

// Extra pair loss from pushing energy-anticorrelated photons through the same
// filter: -10 log10 [ int T(c+d) T(c-d) dd / int T(c+d) dd ], mirrored about
// the degeneracy point. Exactly 3.01 dB for any Lorentzian, 0 for a sharp
// flat-top.
inline double pair_vs_single_filter_loss(const FilterSpec& f, Pol pol = Pol::V) {
  f.validate();
  const double mirror = f.effective_center(Pol::V);
  const double width = f.fwhm(pol);
  const double offset = std::abs(f.effective_center(pol) - mirror);
  const double reach = 500.0 * width + 4.0 * offset;
  const std::size_t n = (std::size_t{1} << 21) + 1;  // odd count for Simpson
  const double h = 2.0 * reach / static_cast<double>(n - 1);
  double pair_sum = 0.0, single_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = -reach + static_cast<double>(i) * h;
    const double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    const double t_plus = filter_transmission(f, mirror + d, pol);
    const double t_minus = filter_transmission(f, mirror - d, pol);
    pair_sum += w * t_plus * t_minus;
    single_sum += w * t_plus;
  }
  if (single_sum <= 0.0) throw ValidationError("filter transmits nothing near the mirror point");
  return transmission_to_db_loss(pair_sum / single_sum);
}

// ---------------------------------------------------------------------------
// Pump coherence

struct PumpCoherenceTime {
  double tau_pi = 0.0;      // 1/(pi * linewidth): Lorentzian field 1/e time
  double tau_two_pi = 0.0;  // 1/(2 pi * linewidth): alternative convention
};

inline PumpCoherenceTime pump_coherence_time(double linewidth_hz) {
  if (linewidth_hz < 0.0) throw ValidationError("linewidth must be non-negative");
  if (linewidth_hz == 0.0) {
    const double inf = std::numeric_limits<double>::infinity();
    return {inf, inf};
  }
  return {1.0 / (kPi * linewidth_hz), 1.0 / (kTwoPi * linewidth_hz)};
}

}  // namespace pairsim

#endif  // PAIRSIM_SPECTRAL_HPP
