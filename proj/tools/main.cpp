// pairsim: entangled photon-pair source simulator CLI.
//
// Subcommands map onto the library modules: spectrum, histogram, fringe,
// bell, budget, lock, check. Configuration comes from an optional JSON file
// plus flag overrides (flags win); every run is deterministic given the
// effective config, and each output file carries the config hash and seed in
// its '#' header.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical/fit failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pairsim/pairsim.hpp"

using json = nlohmann::json;
using namespace pairsim;

namespace {

json default_config() {
  return json{
      {"scenario", "default"},
      {"seed", 12345},
      {"pump_power_mw", 7.0},
      {"phase", kPi},
      {"output_dir", "."},
      {"filter", {{"preset", "psfbg25mhz"}}},
      {"detector", {{"preset", "ingaas"}}},
      {"spectrum",
       {{"temperature_k", 387.0},
        {"span_nm", 80.0},
        {"points", 2001},
        {"temp_scan", nullptr}}},
      {"histogram",
       {{"duration_s", 0.5}, {"bin_width_s", 1e-10}, {"span_s", 1.2e-7}}},
      {"fringe",
       {{"sweep", "phase"},
        {"points", 16},
        {"pairs_per_point", 100000},
        {"visibility", 1.0},
        {"coincidence_window_s", 1e-9},
        {"duration_per_point_s", 1.0}}},
      {"bell", {{"pairs_per_setting", 100000}, {"visibility", 1.0}}},
      {"budget",
       {{"improvements", json::array()}, {"extra_channel_db", 0.0}}},
      {"lock",
       {{"duration_s", 10.0},
        {"dt_s", 5e-6},
        {"open_loop", false},
        {"target_phase", nullptr},
        {"sweep", nullptr},
        {"dither_amplitude", 0.01},
        {"dither_frequency_hz", 20e3},
        {"demod_time_constant_s", 2.5e-4},
        {"kp", 288.0},
        {"ki", 1.44e5},
        {"kd", 0.144},
        {"setpoint", 0.0},
        {"temperature_noise_k", 3.2e-4},
        {"temperature_ramp_k_per_s", 0.0},
        {"pzt_range_rad", 60.0},
        {"pzt_response_time_s", 1e-3},
        {"trace_max_rows", 20000}}},
      {"check",
       {{"tau_laser_s", nullptr},
        {"bin_delay_s", 76e-9},
        {"tau_photon_s", nullptr},
        {"tau_detector_s", nullptr},
        {"margin", 2.0}}}};
}

void merge_into(json& base, const json& overlay) {
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object())
      merge_into(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
}

FilterSpec filter_from_config(const json& cfg) {
  const auto& f = cfg.at("filter");
  const std::string preset = f.at("preset").get<std::string>();
  if (preset != "custom") return presets::filter_for(presets::filter_preset_from_name(preset));
  FilterSpec spec;
  const std::string shape = f.at("shape").get<std::string>();
  if (shape == "lorentzian")
    spec.shape = FilterShape::Lorentzian;
  else if (shape == "flat_top")
    spec.shape = FilterShape::FlatTop;
  else
    throw ValidationError("filter shape must be lorentzian or flat_top");
  spec.center_v = f.at("center_v_hz").get<double>();
  spec.fwhm_v = f.at("fwhm_v_hz").get<double>();
  spec.center_h = f.value("center_h_hz", spec.center_v);
  spec.fwhm_h = f.value("fwhm_h_hz", spec.fwhm_v);
  spec.temperature_tuning = f.value("temperature_tuning_hz_per_k", 0.0);
  spec.temperature = f.value("temperature_k", 0.0);
  spec.reference_temperature = f.value("reference_temperature_k", spec.temperature);
  spec.edge_width = f.value("edge_width_hz", 0.0);
  spec.validate();
  return spec;
}

DetectorModel detector_from_config(const json& cfg) {
  const auto& d = cfg.at("detector");
  const std::string preset = d.at("preset").get<std::string>();
  if (preset != "custom")
    return presets::detector_for(presets::detector_preset_from_name(preset));
  DetectorModel det;
  det.efficiency = d.at("efficiency").get<double>();
  det.jitter_fwhm = d.value("jitter_fwhm_s", 0.0);
  det.dark_rate = d.value("dark_rate_hz", 0.0);
  det.dead_time = d.value("dead_time_s", 0.0);
  det.validate();
  return det;
}

LossBudget budget_from_config(const json& cfg) {
  const auto& f = cfg.at("filter");
  const std::string preset = f.at("preset").get<std::string>();
  LossBudget budget;
  if (preset != "custom") {
    budget = presets::loss_for(presets::filter_preset_from_name(preset));
  } else if (cfg.at("budget").contains("single_photon_db")) {
    const auto& b = cfg.at("budget");
    budget.single_photon_db = b.at("single_photon_db").get<double>();
    budget.lorentzian_pair_penalty_db = b.value("lorentzian_pair_penalty_db", 0.0);
    budget.postselection_db = b.value("postselection_db", 3.0);
    budget.splitting_db = b.value("splitting_db", 3.0);
  } else {
    throw ValidationError("custom filter needs an explicit budget block");
  }
  budget.extra_channel_db = cfg.at("budget").value("extra_channel_db", 0.0);
  return budget;
}

// Hash of the physics-relevant configuration: where outputs land must not
// change what gets computed.
std::uint64_t config_hash(const json& cfg) {
  json stripped = cfg;
  stripped.erase("output_dir");
  return fnv1a64(stripped.dump());
}

std::string out_path(const json& cfg, const std::string& name) {
  std::filesystem::path dir(cfg.at("output_dir").get<std::string>());
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

void print_kv(const std::string& key, double value) {
  std::printf("%s=%.9g\n", key.c_str(), value);
}

// ---------------------------------------------------------------------------

int cmd_spectrum(const json& cfg) {
  const SpdcConfig spdc = presets::spdc();
  const auto& sc = cfg.at("spectrum");
  const double span_nm = sc.at("span_nm").get<double>();
  const int points = sc.at("points").get<int>();
  const double lambda0_nm = spdc.degenerate_wavelength() * 1e9;
  const std::uint64_t hash = config_hash(cfg);
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();

  std::vector<double> temps;
  if (!sc.at("temp_scan").is_null()) {
    const auto& ts = sc.at("temp_scan");
    const double lo = ts.at("min_k").get<double>(), hi = ts.at("max_k").get<double>();
    const int n = ts.at("steps").get<int>();
    for (int i = 0; i < n; ++i)
      temps.push_back(n > 1 ? lo + (hi - lo) * i / (n - 1) : lo);
  } else {
    temps.push_back(sc.at("temperature_k").get<double>());
  }

  const bool scan = temps.size() > 1;
  const std::vector<std::string> cols =
      scan ? std::vector<std::string>{"temperature_k", "wavelength_nm", "relative_density"}
           : std::vector<std::string>{"wavelength_nm", "relative_density"};
  TableWriter table(out_path(cfg, "spectrum.txt"), hash, seed, cols);

  std::vector<double> lam(points), dens(points);
  for (double t : temps) {
    for (int i = 0; i < points; ++i) {
      lam[i] = points > 1 ? lambda0_nm - span_nm / 2 + span_nm * i / (points - 1) : lambda0_nm;
      dens[i] = spdc_spectral_density(spdc, t, wavelength_to_frequency(lam[i] * 1e-9));
      if (scan)
        table.row(std::vector<double>{t, lam[i], dens[i]});
      else
        table.row(std::vector<double>{lam[i], dens[i]});
    }
  }
  if (!scan && points > 4) {
    const double fwhm_nm = detail::fwhm_from_profile(lam, dens);
    print_kv("peak_wavelength_nm", lam[std::max_element(dens.begin(), dens.end()) - dens.begin()]);
    print_kv("fwhm_nm", fwhm_nm);
    print_kv("fwhm_thz", fwhm_nm * 1e-9 * kSpeedOfLight /
                             (spdc.degenerate_wavelength() * spdc.degenerate_wavelength()) / 1e12);
  }
  return 0;
}

int cmd_histogram(const json& cfg) {
  SourceRunConfig run_cfg;
  run_cfg.pump_power_mw = cfg.at("pump_power_mw").get<double>();
  run_cfg.filter = filter_from_config(cfg);
  run_cfg.duration = cfg.at("histogram").at("duration_s").get<double>();
  run_cfg.mzi_phase = cfg.at("phase").get<double>();
  run_cfg.rng_seed = cfg.at("seed").get<std::uint64_t>();
  const DetectorModel det = detector_from_config(cfg);
  const double bin_width = cfg.at("histogram").at("bin_width_s").get<double>();
  const double span = cfg.at("histogram").at("span_s").get<double>();
  const bool dump_events = cfg.at("histogram").value("dump_events", false);

  const auto run = run_coincidence_histogram(run_cfg, det, det, bin_width, span, dump_events);
  const std::vector<std::string> cols = {"bin_center_s", "counts"};
  TableWriter table(out_path(cfg, "histogram.txt"), config_hash(cfg), run_cfg.rng_seed, cols);
  for (std::size_t i = 0; i < run.histogram.counts.size(); ++i)
    table.row(std::vector<double>{run.histogram.bin_center(i),
                                  static_cast<double>(run.histogram.counts[i])});

  // Intrinsic coincidence-peak profile the arrival times were drawn from.
  const std::vector<std::string> corr_cols = {"tau_s", "relative_density"};
  TableWriter corr_table(out_path(cfg, "correlation.txt"), config_hash(cfg),
                         run_cfg.rng_seed, corr_cols);
  for (std::size_t i = 0; i < run.correlation.tau_grid.size(); ++i)
    corr_table.row(std::vector<double>{run.correlation.tau_grid[i], run.correlation.profile[i]});

  if (dump_events) {
    const std::vector<std::string> ev_cols = {"timestamp_ns", "channel", "truth_tag"};
    TableWriter events(out_path(cfg, "events.txt"), config_hash(cfg), run_cfg.rng_seed, ev_cols);
    for (const auto& r : run.records)
      events.row(std::vector<double>{r.timestamp * 1e9,
                                     static_cast<double>(static_cast<int>(r.channel)),
                                     static_cast<double>(static_cast<int>(r.tag))});
  }

  const auto report = analyze_three_peaks(run.histogram, run_cfg.mzi_delay);
  print_kv("pairs_emitted", static_cast<double>(run.pairs_emitted));
  print_kv("coincidences", static_cast<double>(run.histogram.total()));
  const char* names[3] = {"left", "central", "right"};
  for (int i = 0; i < 3; ++i) {
    print_kv(std::string(names[i]) + "_peak_position_s", report.peaks[i].position);
    print_kv(std::string(names[i]) + "_peak_area", report.peaks[i].area);
    print_kv(std::string(names[i]) + "_peak_fwhm_s", report.peaks[i].fwhm);
  }
  print_kv("background_per_bin", report.background_per_bin);
  print_kv("central_to_side_ratio",
           report.peaks[1].area / std::max(1.0, report.peaks[0].area + report.peaks[2].area) * 2.0);
  return 0;
}

int cmd_fringe(const json& cfg) {
  const auto& fr = cfg.at("fringe");
  FringeScanConfig scan;
  scan.pairs_per_point = fr.at("pairs_per_point").get<std::size_t>();
  scan.detector_alice = detector_from_config(cfg);
  scan.detector_bob = scan.detector_alice;
  scan.coincidence_window = fr.at("coincidence_window_s").get<double>();
  scan.duration_per_point = fr.at("duration_per_point_s").get<double>();

  const int points = fr.at("points").get<int>();
  const double visibility = fr.at("visibility").get<double>();
  const std::string sweep = fr.at("sweep").get<std::string>();
  SeededRng rng(cfg.at("seed").get<std::uint64_t>());

  FringeScanData data;
  double omega = 1.0;
  if (sweep == "phase") {
    std::vector<double> phases;
    for (int i = 0; i < points; ++i)
      phases.push_back(-kPi + (3.5 * kPi) * i / std::max(1, points - 1));
    data = phase_scan_mc(phases, visibility, scan, rng);
    omega = 1.0;
  } else if (sweep == "hwp") {
    // Bob's HWP dial angle: the polarization rotation is twice the dial.
    const double phase = cfg.at("phase").get<double>();
    const auto rho = TwoPhotonDensity::werner(visibility, TwoPhotonState::phase_bell(phase));
    std::vector<double> dials, pol_angles;
    for (int i = 0; i < points; ++i) {
      const double dial = kPi * i / std::max(1, points - 1);
      dials.push_back(dial);
      pol_angles.push_back(2.0 * dial);
    }
    data = fringe_scan_mc(rho, kPi / 4.0, pol_angles, scan, rng);
    data.x = dials;
    omega = 4.0;
  } else {
    throw ValidationError("fringe sweep must be 'phase' or 'hwp'");
  }

  const std::vector<std::string> cols = {"x_rad", "counts", "accidental_counts"};
  TableWriter table(out_path(cfg, "fringe.txt"), config_hash(cfg),
                    cfg.at("seed").get<std::uint64_t>(), cols);
  for (std::size_t i = 0; i < data.x.size(); ++i)
    table.row(std::vector<double>{data.x[i], data.raw[i], data.accidentals[i]});

  const auto raw_fit = fit_sinusoid(data.x, data.raw, omega);
  const auto net_fit = visibility_net(data.x, data.raw, data.accidentals, omega);
  print_kv("raw_visibility", raw_fit.visibility);
  print_kv("raw_sigma_v", raw_fit.sigma_v);
  print_kv("raw_chi2_reduced", raw_fit.chi2_reduced);
  print_kv("net_visibility", net_fit.visibility);
  print_kv("net_sigma_v", net_fit.sigma_v);
  print_kv("net_chi2_reduced", net_fit.chi2_reduced);
  std::printf("nonlocal=%s\n",
              visibility_threshold_check(net_fit.visibility) == Locality::Nonlocal ? "yes" : "no");
  return 0;
}

int cmd_bell(const json& cfg) {
  const auto& bl = cfg.at("bell");
  FringeScanConfig scan;
  scan.pairs_per_point = bl.at("pairs_per_setting").get<std::size_t>();
  scan.detector_alice = detector_from_config(cfg);
  scan.detector_bob = scan.detector_alice;
  const double visibility = bl.at("visibility").get<double>();
  const double phase = cfg.at("phase").get<double>();
  const auto rho = TwoPhotonDensity::werner(visibility, TwoPhotonState::phase_bell(phase));
  // Settings chosen for the phi = pi (Phi-) state.
  const auto st = ChshSettings::optimal_phi_minus();
  SeededRng rng(cfg.at("seed").get<std::uint64_t>());

  const std::array<std::pair<double, double>, 4> pairs = {
      std::pair{st.a, st.b}, {st.a, st.b_prime}, {st.a_prime, st.b}, {st.a_prime, st.b_prime}};
  std::array<double, 4> es{}, sigmas{};
  const std::vector<std::string> cols = {"angle_a_rad", "angle_b_rad", "c_pp", "c_pm",
                                         "c_mp",        "c_mm",        "e",    "sigma_e"};
  TableWriter table(out_path(cfg, "bell.txt"), config_hash(cfg),
                    cfg.at("seed").get<std::uint64_t>(), cols);
  for (int i = 0; i < 4; ++i) {
    const auto c = chsh_counts_mc(rho, pairs[i].first, pairs[i].second, scan, rng);
    const auto est = correlation_from_counts(c.pp, c.pm, c.mp, c.mm);
    es[i] = est.e;
    sigmas[i] = est.sigma;
    table.row(std::vector<double>{pairs[i].first, pairs[i].second, c.pp, c.pm, c.mp, c.mm,
                                  est.e, est.sigma});
  }
  const auto bell = bell_from_fringes(es, sigmas);
  print_kv("s", bell.s);
  print_kv("sigma_s", bell.sigma_s);
  print_kv("n_sigma_violation", bell.n_sigma_violation);
  return 0;
}

int cmd_budget(const json& cfg) {
  LossBudget budget = budget_from_config(cfg);
  Improvements flags;
  for (const auto& name : cfg.at("budget").at("improvements")) {
    const std::string s = name.get<std::string>();
    if (s == "flat_top")
      flags.flat_top_filter = true;
    else if (s == "splices")
      flags.spliced_fibers = true;
    else if (s == "taper")
      flags.tapered_waveguide = true;
    else if (s == "cavity")
      flags.cavity_splitting = true;
    else
      throw ValidationError("unknown improvement flag: " + s);
  }
  const auto improved = apply_improvements(budget, flags);
  budget = improved.budget;
  for (const auto& w : improved.clamp_warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

  const FilterSpec filter = filter_from_config(cfg);
  const DetectorModel det = detector_from_config(cfg);
  const BrightnessSpec spec = presets::brightness();
  const double pump = cfg.at("pump_power_mw").get<double>();

  // Itemized table with running total.
  const std::vector<std::string> cols = {"item_index", "item_db", "running_total_db"};
  TableWriter table(out_path(cfg, "budget.txt"), config_hash(cfg),
                    cfg.at("seed").get<std::uint64_t>(), cols);
  struct Item {
    const char* name;
    double db;
  };
  const Item items[] = {{"single_photon_alice", budget.single_photon_db},
                        {"single_photon_bob", budget.single_photon_db},
                        {"lorentzian_pair_penalty", budget.lorentzian_pair_penalty_db},
                        {"postselection", budget.postselection_db},
                        {"splitting", budget.splitting_db},
                        {"extra_channel", budget.extra_channel_db}};
  double running = 0.0;
  int idx = 0;
  for (const auto& item : items) {
    running += item.db;
    table.row(std::vector<double>{static_cast<double>(idx), item.db, running});
    std::printf("item_%d_%s_db=%.9g\n", idx, item.name, item.db);
    ++idx;
  }
  print_kv("total_pair_loss_db", total_pair_loss_db(budget));

  const double bw_mhz = filter.fwhm_v / 1e6;
  print_kv("available_rate_per_s_mw", available_pair_rate(spec, bw_mhz, 1.0, budget));
  print_kv("available_rate_per_s", available_pair_rate(spec, bw_mhz, pump, budget));

  // Detection window: max of photon coherence time and the two-detector
  // jitter convolution.
  const double window =
      std::max(coherence_time(filter, Pol::V), std::sqrt(2.0) * det.jitter_fwhm);
  const double mu = mean_pairs_per_window(spec, bw_mhz, pump, window);
  print_kv("detection_window_s", window);
  print_kv("mu_pairs_per_window", mu);
  print_kv("multipair_fidelity_penalty", fidelity_penalty_from_multipair(mu));

  const auto rates = rate_from_internal_probability(spec, pump);
  print_kv("source_rate_internal_probability", rates.rate_from_internal);
  print_kv("source_rate_brightness_route", rates.rate_from_brightness);
  print_kv("source_rate_route_ratio", rates.ratio);
  if (filter.shape == FilterShape::Lorentzian)
    print_kv("lorentzian_pair_penalty_quadrature_db", pair_vs_single_filter_loss(filter));
  return 0;
}

int cmd_lock(const json& cfg) {
  const auto& lk = cfg.at("lock");
  PhasePlant plant;
  plant.temperature_noise = lk.at("temperature_noise_k").get<double>();
  plant.temperature_ramp = lk.at("temperature_ramp_k_per_s").get<double>();
  plant.pzt_range = lk.at("pzt_range_rad").get<double>();
  plant.pzt_response_time = lk.at("pzt_response_time_s").get<double>();
  LockConfig lock;
  lock.dither_amplitude = lk.at("dither_amplitude").get<double>();
  lock.dither_frequency = lk.at("dither_frequency_hz").get<double>();
  lock.demod_time_constant = lk.at("demod_time_constant_s").get<double>();
  lock.kp = lk.at("kp").get<double>();
  lock.ki = lk.at("ki").get<double>();
  lock.kd = lk.at("kd").get<double>();
  lock.setpoint = lk.at("setpoint").get<double>();
  lock.rng_seed = cfg.at("seed").get<std::uint64_t>();
  if (lk.at("open_loop").get<bool>()) lock.kp = lock.ki = lock.kd = 0.0;
  const double duration = lk.at("duration_s").get<double>();
  const double dt = lk.at("dt_s").get<double>();

  if (lock.demod_bandwidth_marginal())
    std::fprintf(stderr, "warning: dither_frequency * demod_time_constant < 5\n");

  if (!lk.at("sweep").is_null()) {
    // Phase-target sweep: settle at each target, report the achieved phase
    // and the analytic fringe rate it produces.
    const auto& sw = lk.at("sweep");
    const double start = sw.at("start_rad").get<double>();
    const double stop = sw.at("stop_rad").get<double>();
    const int steps = sw.at("steps").get<int>();
    const double settle_window = sw.value("settle_s", 0.1);
    LockSimulator sim(plant, lock, dt);
    const auto warmup = static_cast<std::size_t>(std::ceil(0.4 / dt));
    for (std::size_t i = 0; i < warmup; ++i) sim.step();

    const std::vector<std::string> cols = {"target_rad", "achieved_rad", "settle_time_s",
                                           "fringe_rate"};
    TableWriter table(out_path(cfg, "lock_sweep.txt"), config_hash(cfg), lock.rng_seed, cols);
    int failures = 0;
    for (int i = 0; i < steps; ++i) {
      const double target = steps > 1 ? start + (stop - start) * i / (steps - 1) : start;
      const auto rep = set_phase(sim, target, settle_window, dt);
      if (rep.settle_time < 0.0) ++failures;
      table.row(std::vector<double>{target, rep.achieved_phase, rep.settle_time,
                                    fringe_rate(wrap_to_pi(rep.achieved_phase), 1.0)});
    }
    print_kv("sweep_steps", steps);
    print_kv("sweep_failures", failures);
    return failures == 0 ? 0 : 3;
  }

  if (!lk.at("target_phase").is_null())
    lock.phi_e_offset = lock.setpoint - lk.at("target_phase").get<double>();

  const auto run = run_lock(plant, lock, duration, dt);
  const std::vector<std::string> cols = {"t_s", "phi_r_rad", "error_signal", "actuation_rad"};
  TableWriter table(out_path(cfg, "lock.txt"), config_hash(cfg), lock.rng_seed, cols);
  const std::size_t max_rows = lk.at("trace_max_rows").get<std::size_t>();
  const std::size_t stride = std::max<std::size_t>(1, run.trace.t.size() / max_rows);
  for (std::size_t i = 0; i < run.trace.t.size(); i += stride)
    table.row(std::vector<double>{run.trace.t[i], run.trace.phi_r[i], run.trace.error[i],
                                  run.trace.actuation[i]});

  print_kv("residual_rms_rad", run.summary.residual_rms);
  print_kv("max_abs_residual_rad", run.summary.max_abs_residual);
  print_kv("drift_rms_unwrapped_rad", run.summary.drift_rms_unwrapped);
  print_kv("settle_time_s", run.summary.settle_time);
  print_kv("mean_fidelity", run.summary.mean_fidelity);
  print_kv("unwind_events", run.summary.unwind_events);
  return 0;
}

int cmd_check(const json& cfg) {
  const auto& ck = cfg.at("check");
  const FilterSpec filter = filter_from_config(cfg);
  const DetectorModel det = detector_from_config(cfg);
  const double tau_laser = ck.at("tau_laser_s").is_null()
                               ? pump_coherence_time(presets::kPumpLinewidth).tau_pi
                               : ck.at("tau_laser_s").get<double>();
  const double tau_photon = ck.at("tau_photon_s").is_null()
                                ? coherence_time(filter, Pol::V)
                                : ck.at("tau_photon_s").get<double>();
  const double tau_detector = ck.at("tau_detector_s").is_null()
                                  ? 2.0 * det.jitter_fwhm
                                  : ck.at("tau_detector_s").get<double>();
  const double bin_delay = ck.at("bin_delay_s").get<double>();
  const double margin = ck.at("margin").get<double>();

  const auto report = check_timescale_ordering(tau_laser, bin_delay, tau_photon,
                                               tau_detector, margin);
  print_kv("tau_laser_s", tau_laser);
  print_kv("bin_delay_s", bin_delay);
  print_kv("tau_photon_s", tau_photon);
  print_kv("tau_detector_s", tau_detector);
  print_kv("margin", margin);
  print_kv("laser_ratio", report.laser_ratio);
  print_kv("postselect_ratio", report.postselect_ratio);
  std::printf("laser_ok=%s\n", report.laser_ok ? "yes" : "no");
  std::printf("postselect_ok=%s\n", report.postselect_ok ? "yes" : "no");
  std::printf("pass=%s\n", report.pass ? "yes" : "no");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Telecom-band polarization-entangled photon-pair source simulator"};
  app.require_subcommand(1);

  std::string config_path, emit_config_path, out_dir, filter_name, detector_name;
  std::optional<std::uint64_t> seed;
  std::optional<double> pump_mw, phase;

  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--emit-config", emit_config_path, "write the effective config and continue");
  app.add_option("--out", out_dir, "output directory (default: $PAIRSIM_OUTDIR or '.')");
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--pump-mw", pump_mw, "pump power in mW");
  app.add_option("--phase", phase, "interferometer phase in rad");
  app.add_option("--filter", filter_name, "filter preset: dwdm100ghz|psfbg540mhz|psfbg25mhz");
  app.add_option("--detector", detector_name, "detector preset: ingaas|snspd");

  auto* sc_spectrum = app.add_subcommand("spectrum", "emission spectrum vs wavelength");
  std::optional<double> temperature, span_nm;
  std::optional<int> sp_points;
  std::string temp_scan;
  sc_spectrum->add_option("--temperature", temperature, "crystal temperature in K");
  sc_spectrum->add_option("--span-nm", span_nm, "wavelength span around degeneracy");
  sc_spectrum->add_option("--points", sp_points, "number of grid points");
  sc_spectrum->add_option("--temp-scan", temp_scan, "min:max:steps temperature scan");

  auto* sc_hist = app.add_subcommand("histogram", "coincidence histogram and peak report");
  std::optional<double> h_duration, h_bin, h_span;
  bool h_dump = false;
  sc_hist->add_option("--duration", h_duration, "run duration in s");
  sc_hist->add_option("--bin-width", h_bin, "histogram bin width in s");
  sc_hist->add_option("--span", h_span, "histogram half span in s");
  sc_hist->add_flag("--dump-events", h_dump, "also write the raw detection records");

  auto* sc_fringe = app.add_subcommand("fringe", "fringe scan with visibility fits");
  std::string f_sweep;
  std::optional<int> f_points;
  std::optional<std::size_t> f_pairs;
  std::optional<double> f_visibility, f_window, f_duration;
  sc_fringe->add_option("--sweep", f_sweep, "phase|hwp");
  sc_fringe->add_option("--points", f_points, "scan points");
  sc_fringe->add_option("--pairs-per-point", f_pairs, "pairs per scan point");
  sc_fringe->add_option("--visibility", f_visibility, "state visibility in [0,1]");
  sc_fringe->add_option("--window", f_window, "coincidence window in s");
  sc_fringe->add_option("--duration-per-point", f_duration, "integration time per point in s");

  auto* sc_bell = app.add_subcommand("bell", "CHSH Bell parameter from four settings");
  std::optional<std::size_t> b_pairs;
  std::optional<double> b_visibility;
  sc_bell->add_option("--pairs-per-setting", b_pairs, "pairs per setting pair");
  sc_bell->add_option("--visibility", b_visibility, "state visibility in [0,1]");

  auto* sc_budget = app.add_subcommand("budget", "loss chain, rates, multi-pair numbers");
  std::string improvements;
  std::optional<double> extra_db;
  sc_budget->add_option("--improve", improvements,
                        "comma list of flat_top,splices,taper,cavity");
  sc_budget->add_option("--extra-channel-db", extra_db, "extra pair-level channel loss");

  auto* sc_lock = app.add_subcommand("lock", "phase stabilization loop");
  std::optional<double> l_duration, l_dt, l_target;
  std::string l_sweep;
  bool l_open = false;
  sc_lock->add_option("--duration", l_duration, "run duration in s");
  sc_lock->add_option("--dt", l_dt, "simulation step in s");
  sc_lock->add_option("--target", l_target, "target interferometer phase in rad");
  sc_lock->add_option("--sweep", l_sweep, "start:stop:steps phase sweep");
  sc_lock->add_flag("--open-loop", l_open, "zero the controller gains");

  auto* sc_check = app.add_subcommand("check", "timescale ordering report");
  std::optional<double> c_laser, c_photon, c_detector, c_margin;
  sc_check->add_option("--tau-laser", c_laser, "pump coherence time in s");
  sc_check->add_option("--tau-photon", c_photon, "photon coherence time in s");
  sc_check->add_option("--tau-detector", c_detector, "detector timing spread in s");
  sc_check->add_option("--margin", c_margin, "required ordering margin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    json cfg = default_config();
    if (const char* env = std::getenv("PAIRSIM_OUTDIR")) cfg["output_dir"] = env;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ValidationError("cannot read config file: " + config_path);
      json file_cfg = json::parse(in);
      merge_into(cfg, file_cfg);
    }
    // Flags override the file.
    if (!out_dir.empty()) cfg["output_dir"] = out_dir;
    if (seed) cfg["seed"] = *seed;
    if (pump_mw) cfg["pump_power_mw"] = *pump_mw;
    if (phase) cfg["phase"] = *phase;
    if (!filter_name.empty()) cfg["filter"] = {{"preset", filter_name}};
    if (!detector_name.empty()) cfg["detector"] = {{"preset", detector_name}};

    if (temperature) cfg["spectrum"]["temperature_k"] = *temperature;
    if (span_nm) cfg["spectrum"]["span_nm"] = *span_nm;
    if (sp_points) cfg["spectrum"]["points"] = *sp_points;
    if (!temp_scan.empty()) {
      double lo, hi;
      int n;
      if (std::sscanf(temp_scan.c_str(), "%lf:%lf:%d", &lo, &hi, &n) != 3)
        throw ValidationError("--temp-scan expects min:max:steps");
      cfg["spectrum"]["temp_scan"] = {{"min_k", lo}, {"max_k", hi}, {"steps", n}};
    }
    if (h_duration) cfg["histogram"]["duration_s"] = *h_duration;
    if (h_bin) cfg["histogram"]["bin_width_s"] = *h_bin;
    if (h_span) cfg["histogram"]["span_s"] = *h_span;
    if (h_dump) cfg["histogram"]["dump_events"] = true;
    if (!f_sweep.empty()) cfg["fringe"]["sweep"] = f_sweep;
    if (f_points) cfg["fringe"]["points"] = *f_points;
    if (f_pairs) cfg["fringe"]["pairs_per_point"] = *f_pairs;
    if (f_visibility) cfg["fringe"]["visibility"] = *f_visibility;
    if (f_window) cfg["fringe"]["coincidence_window_s"] = *f_window;
    if (f_duration) cfg["fringe"]["duration_per_point_s"] = *f_duration;
    if (b_pairs) cfg["bell"]["pairs_per_setting"] = *b_pairs;
    if (b_visibility) cfg["bell"]["visibility"] = *b_visibility;
    if (!improvements.empty()) {
      json arr = json::array();
      std::string s = improvements;
      std::size_t pos;
      while ((pos = s.find(',')) != std::string::npos) {
        arr.push_back(s.substr(0, pos));
        s.erase(0, pos + 1);
      }
      if (!s.empty()) arr.push_back(s);
      cfg["budget"]["improvements"] = arr;
    }
    if (extra_db) cfg["budget"]["extra_channel_db"] = *extra_db;
    if (l_duration) cfg["lock"]["duration_s"] = *l_duration;
    if (l_dt) cfg["lock"]["dt_s"] = *l_dt;
    if (l_target) cfg["lock"]["target_phase"] = *l_target;
    if (l_open) cfg["lock"]["open_loop"] = true;
    if (!l_sweep.empty()) {
      double lo, hi;
      int n;
      if (std::sscanf(l_sweep.c_str(), "%lf:%lf:%d", &lo, &hi, &n) != 3)
        throw ValidationError("--sweep expects start:stop:steps");
      cfg["lock"]["sweep"] = {{"start_rad", lo}, {"stop_rad", hi}, {"steps", n}};
    }
    if (c_laser) cfg["check"]["tau_laser_s"] = *c_laser;
    if (c_photon) cfg["check"]["tau_photon_s"] = *c_photon;
    if (c_detector) cfg["check"]["tau_detector_s"] = *c_detector;
    if (c_margin) cfg["check"]["margin"] = *c_margin;

    if (!emit_config_path.empty()) {
      std::ofstream out(emit_config_path);
      if (!out) throw ValidationError("cannot write config file: " + emit_config_path);
      out << cfg.dump(2) << "\n";
    }

    if (sc_spectrum->parsed()) return cmd_spectrum(cfg);
    if (sc_hist->parsed()) return cmd_histogram(cfg);
    if (sc_fringe->parsed()) return cmd_fringe(cfg);
    if (sc_bell->parsed()) return cmd_bell(cfg);
    if (sc_budget->parsed()) return cmd_budget(cfg);
    if (sc_lock->parsed()) return cmd_lock(cfg);
    if (sc_check->parsed()) return cmd_check(cfg);
    return 2;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const FitError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const ResolutionError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const ResourceError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const PostSelectionError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
