#ifndef PAIRSIM_POLARIZATION_HPP
#define PAIRSIM_POLARIZATION_HPP

// Exact two-photon polarization algebra: the unbalanced-MZI preparation
// stage, time-bin post-selection, analyzer projections, CHSH correlations,
// fidelities, and the dephasing/accidental noise channels.
//
// Basis order for two-photon objects is {HH, HV, VH, VV}, signal first.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>

#include "pairsim/constants.hpp"
#include "pairsim/errors.hpp"

namespace pairsim {

using Complex = std::complex<double>;

inline constexpr double kNormTolerance = 1e-12;

enum class Pol : int { H = 0, V = 1 };
enum class TimeBin : int { Early = 0, Late = 1 };
enum class Port : int { Transmitted = 0, Reflected = 1 };

// ---------------------------------------------------------------------------
// States

struct SinglePhotonPol {
  Complex amp_h{1.0, 0.0};
  Complex amp_v{0.0, 0.0};

  double squared_norm() const { return std::norm(amp_h) + std::norm(amp_v); }
  bool is_normalized(double tol = kNormTolerance) const {
    return std::abs(squared_norm() - 1.0) <= tol;
  }

  static SinglePhotonPol horizontal() { return {1.0, 0.0}; }
  static SinglePhotonPol vertical() { return {0.0, 1.0}; }
  static SinglePhotonPol diagonal() { return {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)}; }
  static SinglePhotonPol antidiagonal() { return {1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0)}; }
  // alpha|H> + beta|V>, normalized.
  static SinglePhotonPol from_amplitudes(Complex alpha, Complex beta) {
    const double n = std::sqrt(std::norm(alpha) + std::norm(beta));
    if (n == 0.0) throw ValidationError("zero single-photon state");
    return {alpha / n, beta / n};
  }
};

struct TwoPhotonState {
  Eigen::Vector4cd amp = Eigen::Vector4cd::Zero();  // {HH, HV, VH, VV}

  double squared_norm() const { return amp.squaredNorm(); }
  bool is_normalized(double tol = kNormTolerance) const {
    return std::abs(squared_norm() - 1.0) <= tol;
  }
  TwoPhotonState normalized() const {
    TwoPhotonState out;
    out.amp = amp / amp.norm();
    return out;
  }

  // (|HH> + e^{i phi} |VV>)/sqrt(2); phi = pi gives the Phi- Bell state.
  static TwoPhotonState phase_bell(double phi) {
    TwoPhotonState s;
    const double r = 1.0 / std::sqrt(2.0);
    s.amp(0) = r;
    s.amp(3) = r * std::exp(Complex(0.0, phi));
    return s;
  }
  static TwoPhotonState bell_phi_plus() { return phase_bell(0.0); }
  static TwoPhotonState bell_phi_minus() { return phase_bell(kPi); }
  static TwoPhotonState bell_psi_plus() {
    TwoPhotonState s;
    const double r = 1.0 / std::sqrt(2.0);
    s.amp(1) = r;
    s.amp(2) = r;
    return s;
  }
  static TwoPhotonState bell_psi_minus() {
    TwoPhotonState s;
    const double r = 1.0 / std::sqrt(2.0);
    s.amp(1) = r;
    s.amp(2) = -r;
    return s;
  }
};

inline TwoPhotonState tensor_product(const SinglePhotonPol& signal,
                                     const SinglePhotonPol& idler) {
  TwoPhotonState s;
  s.amp(0) = signal.amp_h * idler.amp_h;
  s.amp(1) = signal.amp_h * idler.amp_v;
  s.amp(2) = signal.amp_v * idler.amp_h;
  s.amp(3) = signal.amp_v * idler.amp_v;
  return s;
}

struct TwoPhotonDensity {
  Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();

  static TwoPhotonDensity from_pure(const TwoPhotonState& s) {
    TwoPhotonDensity d;
    d.rho = s.amp * s.amp.adjoint();
    return d;
  }

  static TwoPhotonDensity maximally_mixed() {
    TwoPhotonDensity d;
    d.rho = Eigen::Matrix4cd::Identity() / 4.0;
    return d;
  }

  // visibility * |bell><bell| + (1 - visibility) * I/4.
  static TwoPhotonDensity werner(double visibility,
                                 const TwoPhotonState& bell = TwoPhotonState::bell_phi_minus()) {
    if (visibility < 0.0 || visibility > 1.0)
      throw ValidationError("Werner visibility must lie in [0, 1]");
    TwoPhotonDensity d = from_pure(bell);
    d.rho = visibility * d.rho + (1.0 - visibility) * Eigen::Matrix4cd::Identity() / 4.0;
    return d;
  }

  double trace() const { return rho.trace().real(); }

  bool is_physical(double tol = kNormTolerance, double psd_tol = 1e-10) const {
    if (std::abs(rho.trace().real() - 1.0) > tol) return false;
    if (std::abs(rho.trace().imag()) > tol) return false;
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(rho);
    return es.eigenvalues().minCoeff() >= -psd_tol;
  }
};

// Photon tagged with an explicit early/late time bin. Index layout:
// pol_s*8 + bin_s*4 + pol_i*2 + bin_i.
struct TimeBinnedTwoPhotonState {
  std::array<Complex, 16> amp{};
  double bin_delay = 0.0;  // seconds between early and late bins

  static int index(Pol pol_s, TimeBin bin_s, Pol pol_i, TimeBin bin_i) {
    return static_cast<int>(pol_s) * 8 + static_cast<int>(bin_s) * 4 +
           static_cast<int>(pol_i) * 2 + static_cast<int>(bin_i);
  }

  Complex& at(Pol ps, TimeBin bs, Pol pi, TimeBin bi) { return amp[index(ps, bs, pi, bi)]; }
  Complex at(Pol ps, TimeBin bs, Pol pi, TimeBin bi) const { return amp[index(ps, bs, pi, bi)]; }

  double squared_norm() const {
    double n = 0.0;
    for (const auto& a : amp) n += std::norm(a);
    return n;
  }
  bool is_normalized(double tol = kNormTolerance) const {
    return std::abs(squared_norm() - 1.0) <= tol;
  }
};

// Polarization analyzer: projection axis angle (radians, normalized to
// [0, pi)) and the PBS output port. HWP dial angles are half the projection
// angle; that doubling happens at the CLI boundary, not here.
struct AnalyzerSetting {
  double angle = 0.0;
  Port port = Port::Transmitted;

  AnalyzerSetting() = default;
  AnalyzerSetting(double angle_rad, Port p = Port::Transmitted) : port(p) {
    double a = std::fmod(angle_rad, kPi);
    if (a < 0.0) a += kPi;
    angle = a;
  }

  // cos(t)|H> + sin(t)|V> for the transmitted port, orthogonal for reflected.
  SinglePhotonPol axis() const {
    const double c = std::cos(angle), s = std::sin(angle);
    if (port == Port::Transmitted) return {c, s};
    return {-s, c};
  }
};

// ---------------------------------------------------------------------------
// Preparation stage

// Unbalanced-MZI transform: H components stay in the early bin, V components
// pick up the late bin and a phase factor e^{i*half_phase} per photon. The
// full two-photon VV contribution therefore carries e^{i*2*half_phase}.
inline TimeBinnedTwoPhotonState mzi_transform(const SinglePhotonPol& signal,
                                              const SinglePhotonPol& idler,
                                              double half_phase, double bin_delay) {
  if (!signal.is_normalized() || !idler.is_normalized())
    throw ValidationError("mzi_transform requires normalized input photons");
  const Complex late = std::exp(Complex(0.0, half_phase));
  const Complex s_h = signal.amp_h, s_v = signal.amp_v * late;
  const Complex i_h = idler.amp_h, i_v = idler.amp_v * late;

  TimeBinnedTwoPhotonState out;
  out.bin_delay = bin_delay;
  out.at(Pol::H, TimeBin::Early, Pol::H, TimeBin::Early) = s_h * i_h;
  out.at(Pol::H, TimeBin::Early, Pol::V, TimeBin::Late) = s_h * i_v;
  out.at(Pol::V, TimeBin::Late, Pol::H, TimeBin::Early) = s_v * i_h;
  out.at(Pol::V, TimeBin::Late, Pol::V, TimeBin::Late) = s_v * i_v;
  return out;
}

struct PostSelection {
  TwoPhotonState state;
  double survival_probability = 0.0;
};

// Keeps only the same-bin components (early,early) and (late,late), merging
// them coherently onto the polarization basis, and renormalizes. The survival
// probability is the squared norm of everything kept.
inline PostSelection postselect_zero_delay(const TimeBinnedTwoPhotonState& in) {
  TwoPhotonState kept;
  double kept_norm = 0.0;
  for (int ps = 0; ps < 2; ++ps) {
    for (int pi = 0; pi < 2; ++pi) {
      const Complex early = in.at(static_cast<Pol>(ps), TimeBin::Early,
                                  static_cast<Pol>(pi), TimeBin::Early);
      const Complex late = in.at(static_cast<Pol>(ps), TimeBin::Late,
                                 static_cast<Pol>(pi), TimeBin::Late);
      kept_norm += std::norm(early) + std::norm(late);
      kept.amp(ps * 2 + pi) = early + late;
    }
  }
  const double merged = kept.squared_norm();
  if (merged <= 1e-12)
    throw PostSelectionError("post-selection kept no same-bin amplitude");
  PostSelection out;
  out.state.amp = kept.amp / std::sqrt(merged);
  out.survival_probability = kept_norm;
  return out;
}

// ---------------------------------------------------------------------------
// Timescale ordering (laser coherence >> bin delay >> photon + detector)

struct TimescaleReport {
  bool pass = false;
  bool laser_ok = false;        // tau_laser >= margin * bin_delay
  bool postselect_ok = false;   // bin_delay >= margin * (tau_photon + tau_detector)
  double laser_ratio = 0.0;     // tau_laser / bin_delay
  double postselect_ratio = 0.0;  // bin_delay / (tau_photon + tau_detector)
  double margin = 0.0;
};

inline TimescaleReport check_timescale_ordering(double tau_laser, double bin_delay,
                                                double tau_photon, double tau_detector,
                                                double margin) {
  if (tau_laser <= 0.0 || bin_delay <= 0.0 || tau_photon <= 0.0 ||
      tau_detector <= 0.0 || margin <= 0.0)
    throw ValidationError("timescales and margin must be positive");
  TimescaleReport r;
  r.margin = margin;
  r.laser_ratio = tau_laser / bin_delay;
  r.postselect_ratio = bin_delay / (tau_photon + tau_detector);
  r.laser_ok = r.laser_ratio >= margin;
  r.postselect_ok = r.postselect_ratio >= margin;
  r.pass = r.laser_ok && r.postselect_ok;
  return r;
}

// ---------------------------------------------------------------------------
// Measurement

namespace detail {
inline Eigen::Vector4cd analyzer_pair_vector(const AnalyzerSetting& a,
                                             const AnalyzerSetting& b) {
  const SinglePhotonPol va = a.axis(), vb = b.axis();
  Eigen::Vector4cd v;
  v(0) = va.amp_h * vb.amp_h;
  v(1) = va.amp_h * vb.amp_v;
  v(2) = va.amp_v * vb.amp_h;
  v(3) = va.amp_v * vb.amp_v;
  return v;
}
}  // namespace detail

inline double project(const TwoPhotonState& state, const AnalyzerSetting& a,
                      const AnalyzerSetting& b) {
  const Eigen::Vector4cd v = detail::analyzer_pair_vector(a, b);
  return std::norm(v.dot(state.amp));  // Eigen dot conjugates the left factor
}

inline double project(const TwoPhotonDensity& density, const AnalyzerSetting& a,
                      const AnalyzerSetting& b) {
  const Eigen::Vector4cd v = detail::analyzer_pair_vector(a, b);
  return (v.adjoint() * density.rho * v)(0).real();
}

// Paper-convention fringe: R_c = (1 - V cos phi)/2, swinging over [0, 1] for
// unit visibility.
inline double fringe_rate(double phi, double visibility) {
  if (visibility < 0.0 || visibility > 1.0)
    throw ValidationError("visibility must lie in [0, 1]");
  return 0.5 * (1.0 - visibility * std::cos(phi));
}

// Raw double-projection probability behind the same fringe: both analyzers at
// 45 degrees see (1 - V cos phi)/4 out of the four port combinations.
inline double fringe_projection_probability(double phi, double visibility) {
  if (visibility < 0.0 || visibility > 1.0)
    throw ValidationError("visibility must lie in [0, 1]");
  return 0.25 * (1.0 - visibility * std::cos(phi));
}

// Correlation coefficient E = P(++) + P(--) - P(+-) - P(-+) over the two
// analyzer ports at polarization angles (angle_a, angle_b).
template <typename StateLike>
inline double correlation_e(const StateLike& state, double angle_a, double angle_b) {
  const AnalyzerSetting ap(angle_a, Port::Transmitted), am(angle_a, Port::Reflected);
  const AnalyzerSetting bp(angle_b, Port::Transmitted), bm(angle_b, Port::Reflected);
  return project(state, ap, bp) + project(state, am, bm) - project(state, ap, bm) -
         project(state, am, bp);
}

struct ChshSettings {
  double a = 0.0;
  double a_prime = 0.0;
  double b = 0.0;
  double b_prime = 0.0;

  // Optimal for the Phi- state (E = cos 2(a+b)): polarization angles
  // 0, 45, 67.5, 22.5 degrees.
  static ChshSettings optimal_phi_minus() {
    return {0.0, kPi / 4.0, 3.0 * kPi / 8.0, kPi / 8.0};
  }
  // Optimal for the Phi+ state (E = cos 2(a-b)).
  static ChshSettings optimal_phi_plus() {
    return {0.0, kPi / 4.0, kPi / 8.0, 3.0 * kPi / 8.0};
  }
};

// S = |E(a,b) - E(a,b') + E(a',b) + E(a',b')|.
template <typename StateLike>
inline double chsh_s(const StateLike& state, const ChshSettings& s) {
  return std::abs(correlation_e(state, s.a, s.b) - correlation_e(state, s.a, s.b_prime) +
                  correlation_e(state, s.a_prime, s.b) +
                  correlation_e(state, s.a_prime, s.b_prime));
}

inline double fidelity(const TwoPhotonState& state, const TwoPhotonState& target) {
  return std::norm(target.amp.dot(state.amp));
}

inline double fidelity(const TwoPhotonDensity& density, const TwoPhotonState& target) {
  return (target.amp.adjoint() * density.rho * target.amp)(0).real();
}

// ---------------------------------------------------------------------------
// Noise channels

// Gaussian jitter of the interferometer phase. A basis state with k V-photons
// carries e^{i k delta/2}, so the (j,k) coherence is damped by
// exp(-(n_j - n_k)^2 sigma^2 / 8); the HH-VV coherence gets exp(-sigma^2/2)
// and the fidelity to the matching Bell state becomes (1 + exp(-sigma^2/2))/2.
inline TwoPhotonDensity dephase_by_phase_jitter(const TwoPhotonState& state, double sigma) {
  if (sigma < 0.0) throw ValidationError("jitter sigma must be non-negative");
  static constexpr std::array<int, 4> kVCount = {0, 1, 1, 2};
  TwoPhotonDensity out = TwoPhotonDensity::from_pure(state);
  for (int j = 0; j < 4; ++j) {
    for (int k = 0; k < 4; ++k) {
      const int dn = kVCount[j] - kVCount[k];
      out.rho(j, k) *= std::exp(-0.125 * dn * dn * sigma * sigma);
    }
  }
  return out;
}

// White-noise admixture from accidental (multi-pair / dark) coincidences:
// (1 - p) rho + p I/4. Fidelity to any Bell state drops by 3p/4 exactly.
inline TwoPhotonDensity admix_accidentals(const TwoPhotonDensity& rho, double p_accidental) {
  if (p_accidental < 0.0 || p_accidental > 1.0)
    throw ValidationError("accidental fraction must lie in [0, 1]");
  TwoPhotonDensity out;
  out.rho = (1.0 - p_accidental) * rho.rho +
            p_accidental * Eigen::Matrix4cd::Identity() / 4.0;
  return out;
}

}  // namespace pairsim

#endif  // PAIRSIM_POLARIZATION_HPP
