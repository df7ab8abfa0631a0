#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <vector>

#include "pairsim/analysis.hpp"
#include "pairsim/events.hpp"
#include "pairsim/presets.hpp"

using namespace pairsim;
using Catch::Approx;

namespace {

SourceRunConfig config_25mhz(double pump_mw, double duration, std::uint64_t seed) {
  SourceRunConfig cfg;
  cfg.pump_power_mw = pump_mw;
  cfg.filter = presets::psfbg_25mhz();
  cfg.duration = duration;
  cfg.rng_seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("pair generation is a seeded poisson process at the configured rate") {
  const auto cfg = config_25mhz(7.0, 1.0, 99);
  CHECK(cfg.pair_rate() == Approx(3600.0 * 25.0 * 7.0));

  SeededRng rng(cfg.rng_seed);
  const auto times = generate_pair_times(cfg, rng);
  const double expected = cfg.pair_rate() * cfg.duration;  // 6.3e5
  const double sigma = std::sqrt(expected);
  CHECK(std::abs(static_cast<double>(times.size()) - expected) < 4.0 * sigma);
  for (std::size_t i = 1; i < times.size(); ++i) REQUIRE(times[i] >= times[i - 1]);

  SeededRng rng2(cfg.rng_seed);
  const auto replay = generate_pair_times(cfg, rng2);
  REQUIRE(replay == times);

  auto empty_cfg = cfg;
  empty_cfg.pump_power_mw = 0.0;
  SeededRng rng3(1);
  CHECK(generate_pair_times(empty_cfg, rng3).empty());

  auto capped = cfg;
  capped.event_cap = 1000;
  SeededRng rng4(1);
  CHECK_THROWS_AS(generate_pair_times(capped, rng4), ResourceError);
}

TEST_CASE("mzi routing splits each photon evenly over the four outcomes") {
  SeededRng rng(8);
  const int n = 200000;
  std::array<int, 4> combos{};
  int same_bin = 0, ll = 0;
  for (int i = 0; i < n; ++i) {
    const auto pair = route_through_mzi(1.0, 76e-9, 0.3, rng);
    const int idx = static_cast<int>(pair.signal.bin) * 2 + static_cast<int>(pair.idler.bin);
    ++combos[idx];
    if (pair.signal.bin == pair.idler.bin) {
      ++same_bin;
      if (pair.signal.bin == TimeBin::Late) ++ll;
    }
    // Polarization is slaved to the arm: H-early, V-late.
    REQUIRE((pair.signal.pol == Pol::V) == (pair.signal.bin == TimeBin::Late));
    const double dt = pair.signal.bin == TimeBin::Late ? 76e-9 : 0.0;
    REQUIRE(pair.signal.time == Approx(1.0 + dt));
  }
  const double sigma = std::sqrt(n * 0.25 * 0.75);
  for (int c : combos) CHECK(std::abs(c - n / 4.0) < 3.0 * sigma);
  // Post-selected late-late fraction among same-bin events is one half.
  const double sigma_ll = std::sqrt(same_bin * 0.25);
  CHECK(std::abs(ll - same_bin / 2.0) < 3.0 * sigma_ll);

  // Degenerate delay collapses the bins onto one arrival time.
  const auto collapsed = route_through_mzi(2.0, 0.0, 0.0, rng);
  CHECK(collapsed.signal.time == 2.0);
  CHECK(collapsed.idler.time == 2.0);
}

TEST_CASE("detection chain: thinning, darks, jitter, dead time") {
  DetectorModel det;
  det.efficiency = 0.0;
  det.dark_rate = 1e3;
  SeededRng rng(11);
  std::vector<PhotonArrival> arrivals(5000, PhotonArrival{0.5, TruthTag::Signal});
  const auto only_darks = detect(arrivals, det, Channel::Alice, 0.0, 1.0, rng);
  for (const auto& r : only_darks) REQUIRE(r.tag == TruthTag::Dark);
  // 1e-6/ns dark probability = 1 kHz: 1000 +- 3 sigma counts in a second.
  CHECK(std::abs(static_cast<double>(only_darks.size()) - 1000.0) < 3.0 * std::sqrt(1000.0));
  for (std::size_t i = 1; i < only_darks.size(); ++i)
    REQUIRE(only_darks[i].timestamp >= only_darks[i - 1].timestamp);

  // Non-paralyzable dead time: a burst of three hits within 1 us leaves one.
  DetectorModel gated;
  gated.efficiency = 1.0;
  gated.dead_time = 10e-6;
  std::vector<PhotonArrival> burst = {{1.0, TruthTag::Signal},
                                      {1.0 + 0.4e-6, TruthTag::Signal},
                                      {1.0 + 0.9e-6, TruthTag::Signal}};
  SeededRng rng2(1);
  const auto survived = detect(burst, gated, Channel::Bob, 0.0, 2.0, rng2);
  REQUIRE(survived.size() == 1);
  CHECK(survived[0].timestamp == Approx(1.0));

  // Channel loss thins like efficiency: 3.01 dB halves the rate.
  DetectorModel lossy;
  lossy.efficiency = 1.0;
  SeededRng rng3(5);
  const auto half = detect(arrivals, lossy, Channel::Alice, 3.0103, 1.0, rng3);
  CHECK(std::abs(static_cast<double>(half.size()) - 2500.0) < 3.0 * std::sqrt(1250.0));

  CHECK_THROWS_AS([&] {
    DetectorModel bad;
    bad.efficiency = 1.5;
    SeededRng r(1);
    return detect(arrivals, bad, Channel::Alice, 0.0, 1.0, r);
  }(), ValidationError);
}

TEST_CASE("coincidence histogram shows the three-peak time-bin structure") {
  SourceRunConfig cfg;
  cfg.pump_power_mw = 0.4;
  cfg.filter = presets::psfbg_540mhz();
  cfg.duration = 0.5;
  cfg.rng_seed = 31;
  DetectorModel ideal;  // unit efficiency, no jitter/darks/dead time
  // Span reaches past 1.6 delays so the flat accidental floor is estimated
  // and subtracted from the peak areas.
  const auto run = run_coincidence_histogram(cfg, ideal, ideal, 100e-12, 200e-9);
  const auto report = analyze_three_peaks(run.histogram, cfg.mzi_delay);

  CHECK(std::abs(report.peaks[0].position + 76e-9) <= 100e-12);
  CHECK(std::abs(report.peaks[1].position) <= 100e-12);
  CHECK(std::abs(report.peaks[2].position - 76e-9) <= 100e-12);

  // Central area = twice each side peak; compare center against the side sum.
  const double side = report.peaks[0].area + report.peaks[2].area;
  const double center = report.peaks[1].area;
  CHECK(std::abs(center - side) < 3.0 * std::sqrt(center + side));

  // Detected singles bookkeeping: every photon reaches a detector here, so
  // each channel holds half of 2N photons on average.
  const double n_photons = 2.0 * static_cast<double>(run.pairs_emitted);
  const double sigma = std::sqrt(n_photons * 0.25);
  CHECK(std::abs(static_cast<double>(run.alice_records) - 0.5 * n_photons) < 4.0 * sigma);

  // Determinism: identical seed and config give bit-identical histograms.
  const auto replay = run_coincidence_histogram(cfg, ideal, ideal, 100e-12, 200e-9);
  REQUIRE(replay.histogram.counts == run.histogram.counts);
}

TEST_CASE("rate bookkeeping through efficiency and loss") {
  SourceRunConfig cfg;
  cfg.pump_power_mw = 0.4;
  cfg.filter = presets::psfbg_540mhz();
  cfg.duration = 0.5;
  cfg.rng_seed = 77;
  cfg.channel_loss_db_alice = 3.0103;  // halve Alice's stream
  DetectorModel det;
  det.efficiency = 0.2;
  const auto run = run_coincidence_histogram(cfg, det, det, 1e-9, 200e-9);
  const double n_photons = 2.0 * static_cast<double>(run.pairs_emitted);
  const double expect_alice = 0.5 * n_photons * 0.2 * 0.5;
  const double expect_bob = 0.5 * n_photons * 0.2;
  CHECK(std::abs(static_cast<double>(run.alice_records) - expect_alice) <
        4.0 * std::sqrt(expect_alice));
  CHECK(std::abs(static_cast<double>(run.bob_records) - expect_bob) <
        4.0 * std::sqrt(expect_bob));
}

TEST_CASE("pure dark streams give a flat poisson accidental floor") {
  DetectorModel dark_only;
  dark_only.efficiency = 1.0;
  dark_only.dark_rate = 1e4;
  const double bin_width = 1e-6, span = 50e-6, duration = 1.0;
  // Expected accidental floor R_A R_B bin T per bin.
  const double expect_per_bin = 1e4 * 1e4 * bin_width * duration;

  const int runs = 20;
  std::vector<std::vector<std::uint64_t>> counts;
  for (int r = 0; r < runs; ++r) {
    SeededRng rng(1000 + r);
    const auto alice = detect({}, dark_only, Channel::Alice, 0.0, duration, rng);
    const auto bob = detect({}, dark_only, Channel::Bob, 0.0, duration, rng);
    counts.push_back(histogram_coincidences(alice, bob, bin_width, span).counts);
  }

  // Mean level matches the accidental formula.
  double grand = 0.0;
  for (const auto& c : counts)
    for (auto v : c) grand += static_cast<double>(v);
  const double n_bins = static_cast<double>(counts[0].size());
  const double mean = grand / (runs * n_bins);
  CHECK(mean == Approx(expect_per_bin).epsilon(0.05));

  // Dispersion test: per-bin counts across seeded runs behave like Poisson
  // draws (chi-square at the 1% level, normal approximation).
  double dispersion = 0.0;
  for (std::size_t b = 0; b < counts[0].size(); ++b) {
    double m = 0.0;
    for (int r = 0; r < runs; ++r) m += static_cast<double>(counts[r][b]);
    m /= runs;
    REQUIRE(m > 0.0);
    for (int r = 0; r < runs; ++r) {
      const double d = static_cast<double>(counts[r][b]) - m;
      dispersion += d * d / m;
    }
  }
  const double dof = n_bins * (runs - 1);
  CHECK(std::abs(dispersion - dof) < 2.576 * std::sqrt(2.0 * dof));
}

TEST_CASE("fringe scans follow the projection probabilities") {
  FringeScanConfig scan;
  scan.pairs_per_point = 20000;
  scan.duration_per_point = 1.0;

  // Ideal Phi-: phase sweep in the diagonal bases gives (1 - cos phi)/4.
  std::vector<double> phases;
  for (int i = 0; i < 16; ++i) phases.push_back(-kPi + 3.5 * kPi * i / 15.0);
  SeededRng rng(5);
  const auto data = phase_scan_mc(phases, 1.0, scan, rng);
  const auto fit = fit_sinusoid(data.x, data.raw);
  CHECK(fit.visibility > 0.99);
  CHECK(fit.visibility < 1.0 + 3.0 * fit.sigma_v);
  CHECK(std::abs(wrap_to_pi(fit.phase)) < 0.05);

  // Counts track the analytic law point by point (4-sigma envelope).
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const double expect = scan.pairs_per_point * fringe_projection_probability(phases[i], 1.0);
    REQUIRE(std::abs(data.raw[i] - expect) < 4.0 * std::sqrt(expect + 9.0));
  }

  // A maximally mixed state shows no fringe.
  SeededRng rng2(6);
  const auto flat = fringe_scan_mc(TwoPhotonDensity::maximally_mixed(), kPi / 4.0,
                                   phases, scan, rng2);
  const auto flat_fit = fit_sinusoid(flat.x, flat.raw, 2.0);
  CHECK(flat_fit.visibility < 3.0 * flat_fit.sigma_v + 0.02);
}

TEST_CASE("dark counts dilute raw visibility and subtraction recovers it") {
  FringeScanConfig scan;
  scan.pairs_per_point = 5000;
  scan.duration_per_point = 800.0;  // low rate: darks matter
  scan.detector_alice = presets::ingaas();
  scan.detector_bob = presets::ingaas();
  scan.coincidence_window = 10e-9;

  std::vector<double> phases;
  for (int i = 0; i < 16; ++i) phases.push_back(-kPi + 3.5 * kPi * i / 15.0);

  const double v_true = 0.98;
  SeededRng rng(21);
  const auto noisy = phase_scan_mc(phases, v_true, scan, rng);
  const auto raw_fit = fit_sinusoid(noisy.x, noisy.raw);
  const auto net_fit = visibility_net(noisy.x, noisy.raw, noisy.accidentals);
  CHECK(raw_fit.visibility < net_fit.visibility);
  CHECK(std::abs(net_fit.visibility - v_true) < 3.0 * net_fit.sigma_v);

  // Raising the dark rate monotonically degrades the raw visibility.
  double prev_v = 1.0;
  for (double dark : {0.0, 2e3, 8e3}) {
    auto s = scan;
    s.detector_alice.dark_rate = dark;
    s.detector_bob.dark_rate = dark;
    SeededRng r(33);
    const auto d = phase_scan_mc(phases, v_true, s, r);
    const auto f = fit_sinusoid(d.x, d.raw);
    REQUIRE(f.visibility < prev_v + 0.02);
    prev_v = f.visibility;
  }
}

TEST_CASE("net visibility estimator is unbiased over seeded runs") {
  FringeScanConfig scan;
  scan.pairs_per_point = 4000;
  scan.duration_per_point = 200.0;
  scan.detector_alice = presets::ingaas();
  scan.detector_bob = presets::ingaas();
  scan.coincidence_window = 10e-9;

  std::vector<double> phases;
  for (int i = 0; i < 16; ++i) phases.push_back(-kPi + 3.5 * kPi * i / 15.0);

  const double v_true = 0.95;
  double sum_v = 0.0, sum_sigma = 0.0;
  const int runs = 50;
  for (int i = 0; i < runs; ++i) {
    SeededRng rng(500 + i);
    const auto d = phase_scan_mc(phases, v_true, scan, rng);
    const auto f = visibility_net(d.x, d.raw, d.accidentals);
    sum_v += f.visibility;
    sum_sigma += f.sigma_v;
  }
  const double mean_v = sum_v / runs;
  const double mean_sigma = sum_sigma / runs;
  CHECK(std::abs(mean_v - v_true) < 2.0 * mean_sigma / std::sqrt(static_cast<double>(runs)));
}

TEST_CASE("monte carlo chsh approaches the Tsirelson bound") {
  FringeScanConfig scan;
  scan.pairs_per_point = 20000;
  const auto rho = TwoPhotonDensity::from_pure(TwoPhotonState::bell_phi_minus());
  const auto st = ChshSettings::optimal_phi_minus();
  SeededRng rng(8);
  std::array<double, 4> es{}, sigmas{};
  const std::array<std::pair<double, double>, 4> pairs = {
      std::pair{st.a, st.b}, {st.a, st.b_prime}, {st.a_prime, st.b},
      {st.a_prime, st.b_prime}};
  for (int i = 0; i < 4; ++i) {
    const auto c = chsh_counts_mc(rho, pairs[i].first, pairs[i].second, scan, rng);
    const auto est = correlation_from_counts(c.pp, c.pm, c.mp, c.mm);
    es[i] = est.e;
    sigmas[i] = est.sigma;
  }
  const auto bell = bell_from_fringes(es, sigmas);
  CHECK(std::abs(bell.s - 2.0 * std::sqrt(2.0)) < 3.0 * bell.sigma_s);
  CHECK(bell.n_sigma_violation > 40.0);
}
