#ifndef PAIRSIM_PHASELOCK_HPP
#define PAIRSIM_PHASELOCK_HPP

// Time-domain simulation of the interferometer phase stabilization: a
// temperature-drift plant, dither + lock-in error extraction from the
// reference-beam detector, a PI(D) controller driving a rate-limited PZT
// fiber stretcher, and the resulting residual-phase statistics.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pairsim/constants.hpp"
#include "pairsim/errors.hpp"
#include "pairsim/rng.hpp"

namespace pairsim {

struct PhasePlant {
  double initial_phase = 0.0;         // rad, interferometer phase at t = 0
  double dphi_dk = 1.0e3;             // rad per kelvin of fiber temperature
  double temperature_noise = 3.2e-4;  // K/sqrt(s), random-walk diffusion
  double temperature_ramp = 0.0;      // K/s deterministic drift
  double pzt_range = 60.0;            // rad of total stretcher throw
  double pzt_response_time = 1e-3;    // s, first-order actuator lag

  void validate() const {
    if (dphi_dk <= 0.0) throw ValidationError("dphi_dk must be positive");
    if (temperature_noise < 0.0 || pzt_range <= 0.0 || pzt_response_time <= 0.0)
      throw ValidationError("plant parameters out of range");
  }
};

struct LockConfig {
  double dither_amplitude = 0.01;      // rad on the reference beam
  double dither_frequency = 20e3;      // Hz
  double demod_time_constant = 2.5e-4; // s, lock-in low-pass
  // PID zeros near 1000 rad/s; one cancels the PZT lag.
  double kp = 288.0;
  double ki = 1.44e5;
  double kd = 0.144;
  double setpoint = 0.0;               // 0 or pi: where phi_r + phi_e is held
  double phi_e_offset = 0.0;           // rad added by the phase modulator
  std::uint64_t rng_seed = 1;

  void validate() const {
    if (dither_amplitude < 0.0 || dither_frequency <= 0.0 || demod_time_constant <= 0.0)
      throw ValidationError("lock-in parameters out of range");
  }
  bool demod_bandwidth_marginal() const {
    return dither_frequency * demod_time_constant < 5.0;
  }
};

// D-port intensity of the diagonal reference beam.
inline double detector_intensity(double phi_r, double phi_e) {
  const double s = std::sin(0.5 * (phi_r + phi_e));
  return s * s;
}

// First-harmonic lock-in: multiply by the dither reference, single-pole
// low-pass. Near lock the output is (amplitude/2) * sin(phi_r + phi_e),
// vanishing at both setpoints with opposite slopes.
class LockInDemodulator {
 public:
  LockInDemodulator(double dither_frequency, double time_constant)
      : omega_(kTwoPi * dither_frequency), tc_(time_constant) {}

  double feed(double intensity, double t, double dt) {
    const double mixed = 2.0 * intensity * std::sin(omega_ * t);
    output_ += (mixed - output_) * dt / tc_;
    return output_;
  }
  double output() const { return output_; }

 private:
  double omega_;
  double tc_;
  double output_ = 0.0;
};

struct LockTrace {
  std::vector<double> t;
  std::vector<double> phi_r;      // interferometer phase
  std::vector<double> error;      // demodulated error signal
  std::vector<double> actuation;  // PZT position (rad)
};

struct LockSummary {
  double residual_rms = 0.0;        // RMS of wrap(phi_tot - setpoint)
  double max_abs_residual = 0.0;
  double drift_rms_unwrapped = 0.0; // RMS without wrapping (open-loop drift)
  double mean_fidelity = 0.0;       // mean cos^2(residual/2)
  double settle_time = -1.0;        // s to the first sustained pi/100 entry
  int unwind_events = 0;
  bool demod_bandwidth_warning = false;
};

namespace detail {

// First time the error magnitude stays inside the band for a full dwell.
class SettleDetector {
 public:
  SettleDetector(double band, double dwell) : band_(band), dwell_(dwell) {}

  void feed(double t, double abs_error) {
    if (settled_) return;
    if (abs_error <= band_) {
      if (streak_start_ < 0.0) streak_start_ = t;
      if (t - streak_start_ >= dwell_) settled_ = true;
    } else {
      streak_start_ = -1.0;
    }
  }
  double settle_time() const { return settled_ ? streak_start_ : -1.0; }

 private:
  double band_;
  double dwell_;
  double streak_start_ = -1.0;
  bool settled_ = false;
};

}  // namespace detail

// Stepped closed-loop simulation. The lock holds phi_r + phi_e at the
// setpoint; the interferometer phase is steered by offsetting phi_e, so the
// locked value is phi_r = setpoint - phi_e_offset.
class LockSimulator {
 public:
  LockSimulator(const PhasePlant& plant, const LockConfig& lock, double dt)
      : plant_(plant),
        lock_(lock),
        dt_(dt),
        rng_(lock.rng_seed),
        demod_(lock.dither_frequency, lock.demod_time_constant),
        phi_e_offset_(lock.phi_e_offset) {
    plant_.validate();
    lock_.validate();
    if (dt <= 0.0 || dt > 1.0 / (10.0 * lock.dither_frequency))
      throw ValidationError("time step must satisfy dt <= 1/(10 dither_frequency)");
    // Lock at pi sits on the negative slope of the error signal.
    feedback_sign_ = std::abs(wrap_to_pi(lock_.setpoint)) > kPi / 2.0 ? -1.0 : 1.0;
  }

  void set_target_phase(double target) { phi_e_offset_ = lock_.setpoint - target; }
  double target_phase() const { return lock_.setpoint - phi_e_offset_; }

  void step() {
    temperature_dev_ += plant_.temperature_ramp * dt_ +
                        plant_.temperature_noise * std::sqrt(dt_) * rng_.gaussian();
    const double phi_r = plant_.initial_phase + plant_.dphi_dk * temperature_dev_ + pzt_pos_;
    const double dither = lock_.dither_amplitude * std::sin(kTwoPi * lock_.dither_frequency * t_);
    const double intensity = detector_intensity(phi_r, phi_e_offset_ + dither);
    const double err = feedback_sign_ * demod_.feed(intensity, t_, dt_);

    integrator_ += lock_.ki * err * dt_;
    const double derivative = lock_.kd * (err - prev_error_) / dt_;
    prev_error_ = err;
    const double command = -(lock_.kp * err + integrator_ + derivative);

    pzt_pos_ += (command - pzt_pos_) * dt_ / plant_.pzt_response_time;
    if (std::abs(pzt_pos_) > 0.5 * plant_.pzt_range) {
      // Fringe hop: rewind the actuator by one period and shift the
      // integrator so the commanded position follows (the wrapped residual
      // is unchanged by a 2 pi move).
      const double hop = pzt_pos_ > 0.0 ? kTwoPi : -kTwoPi;
      pzt_pos_ -= hop;
      integrator_ += hop;
      ++unwind_events_;
    }
    t_ += dt_;
    last_phi_r_ = plant_.initial_phase + plant_.dphi_dk * temperature_dev_ + pzt_pos_;
    last_error_ = err;
  }

  double time() const { return t_; }
  double interferometer_phase() const { return last_phi_r_; }
  double actuation() const { return pzt_pos_; }
  double error_signal() const { return last_error_; }
  double residual() const { return wrap_to_pi(last_phi_r_ + phi_e_offset_ - lock_.setpoint); }
  double residual_unwrapped() const { return last_phi_r_ + phi_e_offset_ - lock_.setpoint; }
  int unwind_events() const { return unwind_events_; }

 private:
  PhasePlant plant_;
  LockConfig lock_;
  double dt_;
  SeededRng rng_;
  LockInDemodulator demod_;
  double phi_e_offset_;
  double feedback_sign_ = 1.0;
  double t_ = 0.0;
  double temperature_dev_ = 0.0;
  double pzt_pos_ = 0.0;
  double integrator_ = 0.0;
  double prev_error_ = 0.0;
  double last_phi_r_ = 0.0;
  double last_error_ = 0.0;
  int unwind_events_ = 0;
};

struct LockRun {
  LockTrace trace;
  LockSummary summary;
};

inline LockRun run_lock(const PhasePlant& plant, const LockConfig& lock, double duration,
                        double dt) {
  if (duration <= 0.0) throw ValidationError("duration must be positive");
  LockSimulator sim(plant, lock, dt);
  const auto n = static_cast<std::size_t>(std::ceil(duration / dt));

  LockRun run;
  run.trace.t.reserve(n);
  run.trace.phi_r.reserve(n);
  run.trace.error.reserve(n);
  run.trace.actuation.reserve(n);

  double sum_sq = 0.0, sum_sq_unwrapped = 0.0, sum_fid = 0.0, max_abs = 0.0;
  detail::SettleDetector settle(kPi / 100.0, 2e-3);
  for (std::size_t i = 0; i < n; ++i) {
    sim.step();
    const double res = sim.residual();
    run.trace.t.push_back(sim.time());
    run.trace.phi_r.push_back(sim.interferometer_phase());
    run.trace.error.push_back(sim.error_signal());
    run.trace.actuation.push_back(sim.actuation());
    sum_sq += res * res;
    sum_sq_unwrapped += sim.residual_unwrapped() * sim.residual_unwrapped();
    sum_fid += std::cos(0.5 * res) * std::cos(0.5 * res);
    max_abs = std::max(max_abs, std::abs(res));
    settle.feed(sim.time(), std::abs(res));
  }
  const double dn = static_cast<double>(n);
  run.summary.residual_rms = std::sqrt(sum_sq / dn);
  run.summary.drift_rms_unwrapped = std::sqrt(sum_sq_unwrapped / dn);
  run.summary.mean_fidelity = sum_fid / dn;
  run.summary.max_abs_residual = max_abs;
  run.summary.settle_time = settle.settle_time();
  run.summary.unwind_events = sim.unwind_events();
  run.summary.demod_bandwidth_warning = lock.demod_bandwidth_marginal();
  return run;
}

struct SettleReport {
  double target = 0.0;
  double settle_time = -1.0;     // s from the phase-offset change, -1 if never
  double achieved_phase = 0.0;   // phi_r at the end of the segment
  double final_error = 0.0;      // |wrap(phi_r - target)| at the end
};

// Steers the locked interferometer phase to `target` by offsetting the
// modulator phase, then tracks settling into the pi/100 band (first entry
// sustained for 2 ms). The offset moves along the shortest path mod 2 pi,
// ramped in sub-steps of at most pi/2 so the loop never starts from the
// zero-slope point of the error signal.
inline SettleReport set_phase(LockSimulator& sim, double target, double settle_duration,
                              double dt) {
  const double t0 = sim.time();
  SettleReport report;
  report.target = target;
  detail::SettleDetector settle(kPi / 100.0, 2e-3);

  const double full_delta = wrap_to_pi(target - sim.target_phase());
  const double effective_target = sim.target_phase() + full_delta;
  const int sub_steps = std::max(1, static_cast<int>(std::ceil(std::abs(full_delta) / (kPi / 2.0))));
  const double ramp_dwell = 2.0 * dt + 1e-3;
  const auto n_total = static_cast<std::size_t>(std::ceil(settle_duration / dt));
  std::size_t i = 0;
  for (int s = 1; s <= sub_steps; ++s) {
    sim.set_target_phase(effective_target -
                         full_delta * (1.0 - static_cast<double>(s) / sub_steps));
    const std::size_t dwell_steps =
        (s < sub_steps) ? static_cast<std::size_t>(std::ceil(ramp_dwell / dt)) : 0;
    for (std::size_t k = 0; k < dwell_steps && i < n_total; ++k, ++i) {
      sim.step();
      settle.feed(sim.time() - t0,
                  std::abs(wrap_to_pi(sim.interferometer_phase() - target)));
    }
  }
  for (; i < n_total; ++i) {
    sim.step();
    settle.feed(sim.time() - t0,
                std::abs(wrap_to_pi(sim.interferometer_phase() - target)));
  }
  report.achieved_phase = sim.interferometer_phase();
  report.final_error = std::abs(wrap_to_pi(report.achieved_phase - target));
  report.settle_time = settle.settle_time();
  return report;
}

// Expected entangled-state fidelity under a residual-phase record: the time
// average of cos^2(residual/2). For Gaussian residuals of std sigma this
// equals (1 + exp(-sigma^2/2))/2.
inline double fidelity_under_lock(std::span<const double> residuals) {
  if (residuals.empty()) throw ValidationError("empty residual record");
  double s = 0.0;
  for (double r : residuals) {
    const double c = std::cos(0.5 * r);
    s += c * c;
  }
  return s / static_cast<double>(residuals.size());
}

}  // namespace pairsim

#endif  // PAIRSIM_PHASELOCK_HPP
