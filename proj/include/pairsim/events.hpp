#ifndef PAIRSIM_EVENTS_HPP
#define PAIRSIM_EVENTS_HPP

// Seeded Monte Carlo of the full detection chain: Poisson pair emission,
// polarization-dependent MZI time-bin routing, beam-splitter distribution,
// lossy jittered detectors with dark counts and dead time, coincidence
// histograms, and fringe/Bell scans with truth-tagged accidentals.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pairsim/budget.hpp"
#include "pairsim/constants.hpp"
#include "pairsim/errors.hpp"
#include "pairsim/polarization.hpp"
#include "pairsim/rng.hpp"
#include "pairsim/spectral.hpp"

namespace pairsim {

struct DetectorModel {
  double efficiency = 1.0;
  double jitter_fwhm = 0.0;  // s
  double dark_rate = 0.0;    // Hz
  double dead_time = 0.0;    // s, non-paralyzable

  void validate() const {
    if (efficiency < 0.0 || efficiency > 1.0)
      throw ValidationError("detector efficiency must lie in [0, 1]");
    if (jitter_fwhm < 0.0 || dark_rate < 0.0 || dead_time < 0.0)
      throw ValidationError("detector times and rates must be non-negative");
  }
};

enum class Channel : int { Alice = 0, Bob = 1 };
enum class TruthTag : int { Signal = 0, Idler = 1, Dark = 2 };

struct DetectionRecord {
  double timestamp = 0.0;
  Channel channel = Channel::Alice;
  TruthTag tag = TruthTag::Signal;
};

struct PhotonArrival {
  double time = 0.0;
  TruthTag tag = TruthTag::Signal;
};

struct SourceRunConfig {
  double pump_power_mw = 1.0;
  double brightness_peak = 3600.0;  // pairs/(s mW MHz), spectral-peak brightness
  FilterSpec filter;
  double duration = 1.0;            // s
  double mzi_delay = 76e-9;         // s
  double mzi_phase = 0.0;           // rad
  double channel_loss_db_alice = 0.0;
  double channel_loss_db_bob = 0.0;
  std::uint64_t rng_seed = 0;       // all randomness derives from this
  std::size_t event_cap = 50'000'000;

  double pair_rate() const {
    return brightness_peak * (filter.fwhm_v / 1e6) * pump_power_mw;
  }

  void validate() const {
    if (pump_power_mw < 0.0 || brightness_peak <= 0.0 || duration <= 0.0 ||
        mzi_delay < 0.0)
      throw ValidationError("source run parameters out of range");
    filter.validate();
  }
};

// ---------------------------------------------------------------------------
// Emission and routing

// Homogeneous Poisson process at rate = brightness_peak x fwhm_V[MHz] x pump.
inline std::vector<double> generate_pair_times(const SourceRunConfig& cfg, SeededRng& rng) {
  cfg.validate();
  const double rate = cfg.pair_rate();
  const double expected = rate * cfg.duration;
  if (expected > static_cast<double>(cfg.event_cap))
    throw ResourceError("expected pair count exceeds the configured event cap");
  std::vector<double> times;
  if (rate <= 0.0) return times;
  times.reserve(static_cast<std::size_t>(expected * 1.1) + 16);
  double t = rng.exponential(rate);
  while (t < cfg.duration) {
    times.push_back(t);
    t += rng.exponential(rate);
  }
  return times;
}

struct RoutedPhoton {
  double time = 0.0;
  Pol pol = Pol::H;
  TimeBin bin = TimeBin::Early;
};

struct RoutedPair {
  RoutedPhoton signal;
  RoutedPhoton idler;
  double phase = 0.0;  // carried for fringe weighting
};

// Each photon independently takes the short arm (H, early) or the long arm
// (V, late, +mzi_delay) with probability 1/2.
inline RoutedPair route_through_mzi(double pair_time, double mzi_delay, double mzi_phase,
                                    SeededRng& rng) {
  auto route_one = [&](RoutedPhoton& p) {
    if (rng.bernoulli(0.5)) {
      p.pol = Pol::V;
      p.bin = TimeBin::Late;
      p.time = pair_time + mzi_delay;
    } else {
      p.pol = Pol::H;
      p.bin = TimeBin::Early;
      p.time = pair_time;
    }
  };
  RoutedPair pair;
  pair.phase = mzi_phase;
  route_one(pair.signal);
  route_one(pair.idler);
  return pair;
}

// ---------------------------------------------------------------------------
// Detection

// Bernoulli thinning by efficiency and channel loss, Gaussian timing jitter,
// an independent Poisson dark-count stream, then non-paralyzable dead time.
inline std::vector<DetectionRecord> detect(std::span<const PhotonArrival> arrivals,
                                           const DetectorModel& det, Channel channel,
                                           double channel_loss_db, double duration,
                                           SeededRng& rng) {
  det.validate();
  const double p_keep = det.efficiency * db_loss_to_transmission(channel_loss_db);
  const double sigma = det.jitter_fwhm > 0.0 ? fwhm_to_sigma(det.jitter_fwhm) : 0.0;

  std::vector<DetectionRecord> hits;
  hits.reserve(arrivals.size() / 2 + 16);
  for (const auto& a : arrivals) {
    if (!rng.bernoulli(p_keep)) continue;
    double t = a.time;
    if (sigma > 0.0) t += rng.gaussian(0.0, sigma);
    hits.push_back({t, channel, a.tag});
  }
  if (det.dark_rate > 0.0) {
    double t = rng.exponential(det.dark_rate);
    while (t < duration) {
      hits.push_back({t, channel, TruthTag::Dark});
      t += rng.exponential(det.dark_rate);
    }
  }
  std::sort(hits.begin(), hits.end(),
            [](const DetectionRecord& a, const DetectionRecord& b) {
              return a.timestamp < b.timestamp;
            });
  if (det.dead_time > 0.0 && !hits.empty()) {
    std::vector<DetectionRecord> alive;
    alive.reserve(hits.size());
    double last = -std::numeric_limits<double>::infinity();
    for (const auto& h : hits) {
      if (h.timestamp - last >= det.dead_time) {
        alive.push_back(h);
        last = h.timestamp;
      }
    }
    hits.swap(alive);
  }
  return hits;
}

// ---------------------------------------------------------------------------
// Coincidence histogram

struct CoincidenceHistogram {
  std::vector<double> bin_edges;     // n+1 edges, uniform bins centered on 0
  std::vector<std::uint64_t> counts;
  double window_span = 0.0;          // |t_A - t_B| <= span kept

  double bin_width() const { return bin_edges.size() > 1 ? bin_edges[1] - bin_edges[0] : 0.0; }
  double bin_center(std::size_t i) const { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }
  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }
};

// Bins every arrival-time difference t_A - t_B within +-span. Inputs must be
// time sorted (detect() output is).
inline CoincidenceHistogram histogram_coincidences(std::span<const DetectionRecord> alice,
                                                   std::span<const DetectionRecord> bob,
                                                   double bin_width, double span) {
  if (bin_width <= 0.0 || span <= 0.0)
    throw ValidationError("bin width and span must be positive");
  const std::size_t half_bins = static_cast<std::size_t>(std::floor(span / bin_width));
  const std::size_t n_bins = 2 * half_bins + 1;  // odd: one bin centered on zero

  CoincidenceHistogram h;
  h.window_span = span;
  h.counts.assign(n_bins, 0);
  h.bin_edges.resize(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i)
    h.bin_edges[i] = (static_cast<double>(i) - 0.5 * static_cast<double>(n_bins)) * bin_width;

  std::size_t lo = 0;
  for (const auto& a : alice) {
    while (lo < bob.size() && bob[lo].timestamp < a.timestamp - span) ++lo;
    for (std::size_t j = lo; j < bob.size() && bob[j].timestamp <= a.timestamp + span; ++j) {
      const double diff = a.timestamp - bob[j].timestamp;
      const auto idx = static_cast<std::ptrdiff_t>(
          std::floor((diff - h.bin_edges.front()) / bin_width));
      if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(n_bins)) ++h.counts[idx];
    }
  }
  return h;
}

struct HistogramPeak {
  double position = 0.0;  // bin center of the maximum
  double area = 0.0;      // background-subtracted counts within the window
  double fwhm = 0.0;
};

struct ThreePeakReport {
  std::array<HistogramPeak, 3> peaks;  // left (-delay), central, right (+delay)
  double background_per_bin = 0.0;     // accidental floor estimate
};

// Characterizes the three-peak structure around 0 and +-mzi_delay. Peak areas
// are counts within +-mzi_delay/2 of each nominal center, minus the flat
// accidental floor estimated from bins beyond 1.6 delays (when the span
// reaches that far).
inline ThreePeakReport analyze_three_peaks(const CoincidenceHistogram& h, double mzi_delay) {
  if (h.counts.empty()) throw ValidationError("empty histogram");
  ThreePeakReport report;
  const std::array<double, 3> centers = {-mzi_delay, 0.0, mzi_delay};

  double bg_sum = 0.0;
  std::size_t bg_bins = 0;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    if (std::abs(h.bin_center(i)) > 1.6 * mzi_delay) {
      bg_sum += static_cast<double>(h.counts[i]);
      ++bg_bins;
    }
  }
  report.background_per_bin = bg_bins > 0 ? bg_sum / static_cast<double>(bg_bins) : 0.0;

  for (int p = 0; p < 3; ++p) {
    const double c = centers[p];
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      const double x = h.bin_center(i);
      if (std::abs(x - c) <= 0.5 * mzi_delay) {
        xs.push_back(x);
        // Signed subtraction keeps the net area unbiased in the wings.
        ys.push_back(static_cast<double>(h.counts[i]) - report.background_per_bin);
        report.peaks[p].area += ys.back();
      }
    }
    if (xs.empty()) throw ValidationError("histogram span does not cover the peak layout");

    // Position and width come from the half-maximum crossings; a plain max
    // keeps the peak estimate faithful for cusped profiles.
    std::size_t best = 0;
    double best_val = -1.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      if (ys[i] > best_val) {
        best_val = ys[i];
        best = i;
      }
    }
    const double half = 0.5 * best_val;
    double left = xs.front(), right = xs.back();
    for (std::size_t i = best; i-- > 0;) {
      if (ys[i] <= half) {
        const double t = (half - ys[i]) / std::max(1e-300, ys[i + 1] - ys[i]);
        left = xs[i] + t * (xs[i + 1] - xs[i]);
        break;
      }
    }
    for (std::size_t i = best + 1; i < ys.size(); ++i) {
      if (ys[i] <= half) {
        const double t = (ys[i - 1] - half) / std::max(1e-300, ys[i - 1] - ys[i]);
        right = xs[i - 1] + t * (xs[i] - xs[i - 1]);
        break;
      }
    }
    report.peaks[p].position = 0.5 * (left + right);
    report.peaks[p].fwhm = right - left;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Full chain: emission -> intrinsic arrival spread -> MZI -> splitter ->
// detectors -> histogram

// Inverse-CDF sampler over a tabulated temporal profile.
class ProfileSampler {
 public:
  explicit ProfileSampler(const TemporalCorrelation& corr)
      : tau_(corr.tau_grid), cdf_(corr.profile.size(), 0.0) {
    double acc = 0.0;
    for (std::size_t i = 1; i < corr.profile.size(); ++i) {
      acc += 0.5 * (corr.profile[i] + corr.profile[i - 1]) * (tau_[i] - tau_[i - 1]);
      cdf_[i] = acc;
    }
    if (acc <= 0.0) throw ValidationError("temporal profile has zero mass");
    for (auto& c : cdf_) c /= acc;
  }

  double sample(SeededRng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.begin()) return tau_.front();
    if (it == cdf_.end()) return tau_.back();
    const std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
    const double span = cdf_[i] - cdf_[i - 1];
    const double f = span > 0.0 ? (u - cdf_[i - 1]) / span : 0.0;
    return tau_[i - 1] + f * (tau_[i] - tau_[i - 1]);
  }

 private:
  std::vector<double> tau_;
  std::vector<double> cdf_;
};

struct HistogramRun {
  CoincidenceHistogram histogram;
  std::size_t pairs_emitted = 0;
  std::size_t alice_records = 0;
  std::size_t bob_records = 0;
  TemporalCorrelation correlation;         // intrinsic profile used for sampling
  std::vector<DetectionRecord> records;    // merged streams, when requested
};

inline HistogramRun run_coincidence_histogram(const SourceRunConfig& cfg,
                                              const DetectorModel& det_alice,
                                              const DetectorModel& det_bob,
                                              double bin_width, double span,
                                              bool keep_records = false) {
  SeededRng rng(cfg.rng_seed);
  const std::vector<double> births = generate_pair_times(cfg, rng);
  const TemporalCorrelation corr = biphoton_temporal_correlation(cfg.filter, Pol::V, {});
  const ProfileSampler sampler(corr);

  std::vector<PhotonArrival> to_alice, to_bob;
  to_alice.reserve(births.size());
  to_bob.reserve(births.size());
  for (double t : births) {
    const RoutedPair routed = route_through_mzi(t, cfg.mzi_delay, cfg.mzi_phase, rng);
    const double intrinsic = sampler.sample(rng);
    const PhotonArrival signal{routed.signal.time + 0.5 * intrinsic, TruthTag::Signal};
    const PhotonArrival idler{routed.idler.time - 0.5 * intrinsic, TruthTag::Idler};
    // Non-deterministic splitter: each photon picks an output arm.
    (rng.bernoulli(0.5) ? to_alice : to_bob).push_back(signal);
    (rng.bernoulli(0.5) ? to_alice : to_bob).push_back(idler);
  }
  std::sort(to_alice.begin(), to_alice.end(),
            [](const PhotonArrival& a, const PhotonArrival& b) { return a.time < b.time; });
  std::sort(to_bob.begin(), to_bob.end(),
            [](const PhotonArrival& a, const PhotonArrival& b) { return a.time < b.time; });

  const auto alice = detect(to_alice, det_alice, Channel::Alice, cfg.channel_loss_db_alice,
                            cfg.duration, rng);
  const auto bob = detect(to_bob, det_bob, Channel::Bob, cfg.channel_loss_db_bob,
                          cfg.duration, rng);

  HistogramRun run;
  run.pairs_emitted = births.size();
  run.alice_records = alice.size();
  run.bob_records = bob.size();
  run.histogram = histogram_coincidences(alice, bob, bin_width, span);
  run.correlation = corr;
  if (keep_records) {
    run.records.reserve(alice.size() + bob.size());
    run.records.insert(run.records.end(), alice.begin(), alice.end());
    run.records.insert(run.records.end(), bob.begin(), bob.end());
    std::sort(run.records.begin(), run.records.end(),
              [](const DetectionRecord& a, const DetectionRecord& b) {
                return a.timestamp < b.timestamp;
              });
  }
  return run;
}

// ---------------------------------------------------------------------------
// Fringe and Bell scans

struct FringePointResult {
  double true_counts = 0.0;        // coincidences from genuine pairs
  double accidental_counts = 0.0;  // truth-tagged accidental coincidences
  double raw() const { return true_counts + accidental_counts; }
};

struct FringeScanConfig {
  std::size_t pairs_per_point = 100000;
  DetectorModel detector_alice;
  DetectorModel detector_bob;
  double channel_loss_db_alice = 0.0;
  double channel_loss_db_bob = 0.0;
  double coincidence_window = 1e-9;  // s
  double duration_per_point = 1.0;   // s; sets dark-count statistics
};

// One scan point: per-pair joint port outcomes are sampled from the analyzer
// projection probabilities; accidentals are Poisson with the standard
// R_A R_B 2W rate from the singles (signal marginals plus darks).
inline FringePointResult fringe_point_mc(const TwoPhotonDensity& state, double angle_a,
                                         double angle_b, const FringeScanConfig& scan,
                                         SeededRng& rng) {
  scan.detector_alice.validate();
  scan.detector_bob.validate();
  const AnalyzerSetting a_t(angle_a, Port::Transmitted);
  const AnalyzerSetting b_t(angle_b, Port::Transmitted);
  const double p_joint = project(state, a_t, b_t);
  const double eff_a =
      scan.detector_alice.efficiency * db_loss_to_transmission(scan.channel_loss_db_alice);
  const double eff_b =
      scan.detector_bob.efficiency * db_loss_to_transmission(scan.channel_loss_db_bob);

  FringePointResult out;
  const double p_coinc = p_joint * eff_a * eff_b;
  for (std::size_t i = 0; i < scan.pairs_per_point; ++i)
    if (rng.bernoulli(p_coinc)) out.true_counts += 1.0;

  const double pair_rate = static_cast<double>(scan.pairs_per_point) / scan.duration_per_point;
  const double p_a_marg = project(state, a_t, AnalyzerSetting(angle_b, Port::Transmitted)) +
                          project(state, a_t, AnalyzerSetting(angle_b, Port::Reflected));
  const double p_b_marg = project(state, AnalyzerSetting(angle_a, Port::Transmitted), b_t) +
                          project(state, AnalyzerSetting(angle_a, Port::Reflected), b_t);
  const double singles_a = pair_rate * p_a_marg * eff_a + scan.detector_alice.dark_rate;
  const double singles_b = pair_rate * p_b_marg * eff_b + scan.detector_bob.dark_rate;
  const double acc_mean =
      singles_a * singles_b * 2.0 * scan.coincidence_window * scan.duration_per_point;
  out.accidental_counts = static_cast<double>(rng.poisson(acc_mean));
  return out;
}

struct FringeScanData {
  std::vector<double> x;            // swept variable (rad)
  std::vector<double> raw;          // raw coincidence counts
  std::vector<double> accidentals;  // truth-tagged accidental part
};

// Bob-angle sweep at fixed Alice angle (Bell-type fringe).
inline FringeScanData fringe_scan_mc(const TwoPhotonDensity& state, double angle_a,
                                     std::span<const double> angles_b,
                                     const FringeScanConfig& scan, SeededRng& rng) {
  FringeScanData data;
  for (double b : angles_b) {
    const FringePointResult r = fringe_point_mc(state, angle_a, b, scan, rng);
    data.x.push_back(b);
    data.raw.push_back(r.raw());
    data.accidentals.push_back(r.accidental_counts);
  }
  return data;
}

// Phase sweep with both analyzers in the diagonal basis (Alice at D, Bob at
// A), giving counts proportional to (1 - V cos phi)/4.
inline FringeScanData phase_scan_mc(std::span<const double> phases, double state_visibility,
                                    const FringeScanConfig& scan, SeededRng& rng) {
  FringeScanData data;
  for (double phi : phases) {
    const TwoPhotonDensity rho =
        TwoPhotonDensity::werner(state_visibility, TwoPhotonState::phase_bell(phi));
    const FringePointResult r =
        fringe_point_mc(rho, kPi / 4.0, 3.0 * kPi / 4.0, scan, rng);
    data.x.push_back(phi);
    data.raw.push_back(r.raw());
    data.accidentals.push_back(r.accidental_counts);
  }
  return data;
}

// Port-combination counts for one CHSH setting pair: the reflected port is
// realized by rotating the analyzer by 90 degrees.
struct SettingPairCounts {
  double pp = 0.0, pm = 0.0, mp = 0.0, mm = 0.0;
};

inline SettingPairCounts chsh_counts_mc(const TwoPhotonDensity& state, double angle_a,
                                        double angle_b, const FringeScanConfig& scan,
                                        SeededRng& rng) {
  SettingPairCounts c;
  c.pp = fringe_point_mc(state, angle_a, angle_b, scan, rng).raw();
  c.pm = fringe_point_mc(state, angle_a, angle_b + kPi / 2.0, scan, rng).raw();
  c.mp = fringe_point_mc(state, angle_a + kPi / 2.0, angle_b, scan, rng).raw();
  c.mm = fringe_point_mc(state, angle_a + kPi / 2.0, angle_b + kPi / 2.0, scan, rng).raw();
  return c;
}

}  // namespace pairsim

#endif  // PAIRSIM_EVENTS_HPP
