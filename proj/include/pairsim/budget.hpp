#ifndef PAIRSIM_BUDGET_HPP
#define PAIRSIM_BUDGET_HPP

// Brightness and loss-chain arithmetic: itemized dB budget, available pair
// rates, multi-pair probability per detection window, and improvement
// what-ifs.

#include <algorithm>
#include <string>
#include <vector>

#include "pairsim/constants.hpp"
#include "pairsim/errors.hpp"

namespace pairsim {

struct LossBudget {
  double single_photon_db = 0.0;           // crystal -> splitter, per photon
  double lorentzian_pair_penalty_db = 0.0; // energy-anticorrelation through a Lorentzian
  double postselection_db = 0.0;           // time-bin post-selection (half the pairs)
  double splitting_db = 0.0;               // non-deterministic pair separation
  double extra_channel_db = 0.0;           // e.g. long-distance distribution fiber

  void validate() const {
    if (single_photon_db < 0.0 || lorentzian_pair_penalty_db < 0.0 ||
        postselection_db < 0.0 || splitting_db < 0.0 || extra_channel_db < 0.0)
      throw ValidationError("loss items must be non-negative");
  }
};

// Both photons see the propagation loss; the remaining items act on the pair.
inline double total_pair_loss_db(const LossBudget& b) {
  b.validate();
  return 2.0 * b.single_photon_db + b.lorentzian_pair_penalty_db + b.postselection_db +
         b.splitting_db + b.extra_channel_db;
}

struct BrightnessSpec {
  double internal_probability = 4.8e-6;  // pairs per injected pump photon
  double b_full = 2400.0;                // pairs/(s mW MHz) over the full spectrum
  double b_top = 3600.0;                 // pairs/(s mW MHz) at the spectral peak
  double full_bandwidth_hz = 4.0e12;

  void validate() const {
    if (b_full <= 0.0 || b_top < b_full)
      throw ValidationError("brightness must satisfy b_top >= b_full > 0");
  }
};

// Pairs per second available at the source output. The Lorentzian pair
// penalty lives in the budget; the bandwidth argument is the plain filter
// FWHM so the penalty is never double counted.
inline double available_pair_rate(const BrightnessSpec& spec, double filter_bw_mhz,
                                  double pump_mw, const LossBudget& budget) {
  spec.validate();
  if (filter_bw_mhz <= 0.0 || pump_mw < 0.0)
    throw ValidationError("bandwidth must be positive and pump non-negative");
  return spec.b_top * filter_bw_mhz * pump_mw *
         db_loss_to_transmission(total_pair_loss_db(budget));
}

// Mean photon-pair number per detection window, at the source (pre-loss).
inline double mean_pairs_per_window(const BrightnessSpec& spec, double filter_bw_mhz,
                                    double pump_mw, double window_s) {
  spec.validate();
  if (filter_bw_mhz <= 0.0 || pump_mw < 0.0 || window_s < 0.0)
    throw ValidationError("bandwidth must be positive, pump and window non-negative");
  return spec.b_top * filter_bw_mhz * pump_mw * window_s;
}

// Relative entangled-state fidelity drop from double-pair emission. Linear
// small-mu model calibrated so mu = 0.01 gives a 1% drop.
inline double fidelity_penalty_from_multipair(double mu) {
  if (mu < 0.0) throw ValidationError("mean pair number must be non-negative");
  return mu;
}

// The white-noise admixture fraction that produces the same Bell-state
// fidelity drop (drop = 3/4 * p for a pure Bell input).
inline double accidental_fraction_for_penalty(double fidelity_drop) {
  return 4.0 / 3.0 * fidelity_drop;
}

struct Improvements {
  bool flat_top_filter = false;   // -3 dB: remove the Lorentzian pair penalty
  bool spliced_fibers = false;    // -2 dB pair: -1 dB on each photon's propagation
  bool tapered_waveguide = false; // -1 dB pair: -0.5 dB per photon at collection
  bool cavity_splitting = false;  // -3 dB: deterministic pair separation
};

struct ImprovedBudget {
  LossBudget budget;
  std::vector<std::string> clamp_warnings;
};

inline ImprovedBudget apply_improvements(const LossBudget& in, const Improvements& flags) {
  in.validate();
  ImprovedBudget out;
  out.budget = in;
  auto reduce = [&out](double& item, double amount, const char* name) {
    if (item < amount) {
      out.clamp_warnings.push_back(std::string(name) + " reduction clamped at 0 dB");
      item = 0.0;
    } else {
      item -= amount;
    }
  };
  if (flags.flat_top_filter)
    reduce(out.budget.lorentzian_pair_penalty_db, 3.0, "flat-top filter");
  if (flags.spliced_fibers)
    reduce(out.budget.single_photon_db, 1.0, "fiber splicing");
  if (flags.tapered_waveguide)
    reduce(out.budget.single_photon_db, 0.5, "waveguide taper");
  if (flags.cavity_splitting)
    reduce(out.budget.splitting_db, 3.0, "cavity-based splitting");
  return out;
}

struct SourceRateReport {
  double rate_from_internal = 0.0;    // internal probability x pump photon flux
  double rate_from_brightness = 0.0;  // b_full x full bandwidth
  double ratio = 0.0;                 // flagged discrepancy between the two routes
};

inline SourceRateReport rate_from_internal_probability(const BrightnessSpec& spec,
                                                       double pump_mw,
                                                       double pump_wavelength = 780.24e-9) {
  spec.validate();
  if (pump_mw < 0.0) throw ValidationError("pump power must be non-negative");
  const double photon_energy = kPlanck * kSpeedOfLight / pump_wavelength;
  const double flux = pump_mw * 1e-3 / photon_energy;
  SourceRateReport r;
  r.rate_from_internal = spec.internal_probability * flux;
  r.rate_from_brightness = spec.b_full * (spec.full_bandwidth_hz / 1e6) * pump_mw;
  r.ratio = (r.rate_from_brightness > 0.0) ? r.rate_from_internal / r.rate_from_brightness : 0.0;
  return r;
}

}  // namespace pairsim

#endif  // PAIRSIM_BUDGET_HPP
