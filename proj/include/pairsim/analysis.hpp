#ifndef PAIRSIM_ANALYSIS_HPP
#define PAIRSIM_ANALYSIS_HPP

// Statistical extraction from fringe scans: weighted sinusoidal fits with
// visibility and uncertainty, correlation coefficients from port counts, the
// Bell parameter with error propagation, and the nonlocality threshold.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "pairsim/constants.hpp"
#include "pairsim/errors.hpp"

namespace pairsim {

struct FringeFit {
  double amplitude = 0.0;  // offset * visibility
  double offset = 0.0;
  double phase = 0.0;      // fringe origin x0 in y = offset (1 - V cos(w x - x0))
  double visibility = 0.0;
  double sigma_v = 0.0;
  double chi2_reduced = 0.0;
  int n_points = 0;
};

namespace detail {

// Weighted linear least squares on the basis {1, cos(w x), sin(w x)}. The
// model y = offset (1 - V cos(w x - x0)) is linear in (a0, a1, a2) with
// a0 = offset, a1 = -offset V cos x0, a2 = -offset V sin x0; the fixed-period
// sinusoid therefore has an exact one-step solution, and errors follow from
// the weighted normal-equation covariance by the delta method.
inline FringeFit fit_sinusoid_core(std::span<const double> x, std::span<const double> y,
                                   std::span<const double> variance, double omega) {
  const std::size_t n = x.size();
  if (n != y.size() || n != variance.size())
    throw ValidationError("fit inputs must have equal length");
  if (n < 5) throw ValidationError("fringe fit needs at least 5 points");
  const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
  if ((*xmax - *xmin) * omega < kPi - 1e-9)
    throw ValidationError("fringe fit needs at least half a period of data");

  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d atb = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 1.0 / std::max(variance[i], 1.0);
    const Eigen::Vector3d row(1.0, std::cos(omega * x[i]), std::sin(omega * x[i]));
    ata += w * row * row.transpose();
    atb += w * y[i] * row;
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(ata);
  if (!lu.isInvertible())
    throw FitError("fringe fit: singular normal equations (degenerate abscissae)");
  const Eigen::Vector3d a = lu.solve(atb);
  const Eigen::Matrix3d cov = lu.inverse();

  FringeFit fit;
  fit.n_points = static_cast<int>(n);
  fit.offset = a(0);
  fit.amplitude = std::hypot(a(1), a(2));
  if (fit.offset <= 0.0) throw FitError("fringe fit: non-positive offset");
  fit.visibility = fit.amplitude / fit.offset;
  fit.phase = std::atan2(-a(2), -a(1));

  // Delta method for V = sqrt(a1^2 + a2^2)/a0.
  const double amp = std::max(fit.amplitude, 1e-300);
  Eigen::Vector3d g(-fit.visibility / a(0), a(1) / (a(0) * amp), a(2) / (a(0) * amp));
  fit.sigma_v = std::sqrt(std::max(0.0, double(g.transpose() * cov * g)));

  double chi2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 1.0 / std::max(variance[i], 1.0);
    const double model = a(0) + a(1) * std::cos(omega * x[i]) + a(2) * std::sin(omega * x[i]);
    chi2 += w * (y[i] - model) * (y[i] - model);
  }
  fit.chi2_reduced = (n > 3) ? chi2 / static_cast<double>(n - 3) : 0.0;
  return fit;
}

}  // namespace detail

// Fit of Poisson-noise fringe counts: weights 1/max(count, 1) (zero counts
// get unit weight). omega is the known angular frequency of the fringe in the
// abscissa variable (1 for a phase sweep, 4 for an HWP dial-angle sweep).
inline FringeFit fit_sinusoid(std::span<const double> x, std::span<const double> counts,
                              double omega = 1.0) {
  std::vector<double> variance(counts.begin(), counts.end());
  return detail::fit_sinusoid_core(x, counts, variance, omega);
}

// Accidental-subtracted fit: pointwise raw - accidental with added Poisson
// variances.
inline FringeFit visibility_net(std::span<const double> x, std::span<const double> raw,
                                std::span<const double> accidental, double omega = 1.0) {
  const std::size_t n = x.size();
  if (raw.size() != n || accidental.size() != n)
    throw ValidationError("net visibility inputs must have equal length");
  std::vector<double> net(n), variance(n);
  for (std::size_t i = 0; i < n; ++i) {
    net[i] = raw[i] - accidental[i];
    variance[i] = raw[i] + accidental[i];
  }
  return detail::fit_sinusoid_core(x, net, variance, omega);
}

struct CorrelationEstimate {
  double e = 0.0;
  double sigma = 0.0;
};

// E and its binomial error from the four port-combination counts.
inline CorrelationEstimate correlation_from_counts(double c_pp, double c_pm, double c_mp,
                                                   double c_mm) {
  const double same = c_pp + c_mm;
  const double cross = c_pm + c_mp;
  const double total = same + cross;
  if (total <= 0.0) throw ValidationError("correlation needs at least one count");
  CorrelationEstimate out;
  out.e = (same - cross) / total;
  out.sigma = std::sqrt(4.0 * std::max(same, 1.0) * std::max(cross, 1.0) /
                        (total * total * total));
  return out;
}

struct BellResult {
  double s = 0.0;
  double sigma_s = 0.0;
  double n_sigma_violation = 0.0;
};

// S = |E(a,b) - E(a,b') + E(a',b) + E(a',b')| with quadrature error
// propagation; e_values ordered as (E(a,b), E(a,b'), E(a',b), E(a',b')).
inline BellResult bell_from_fringes(const std::array<double, 4>& e_values,
                                    const std::array<double, 4>& sigmas) {
  BellResult r;
  r.s = std::abs(e_values[0] - e_values[1] + e_values[2] + e_values[3]);
  double var = 0.0;
  for (double s : sigmas) {
    if (s <= 0.0) throw ValidationError("correlation errors must be positive");
    var += s * s;
  }
  r.sigma_s = std::sqrt(var);
  r.n_sigma_violation = (r.s - 2.0) / r.sigma_s;
  return r;
}

enum class Locality { Local, Nonlocal };

// CHSH violation requires V > 1/sqrt(2); the boundary itself stays local.
inline Locality visibility_threshold_check(double visibility) {
  return visibility > 1.0 / std::sqrt(2.0) ? Locality::Nonlocal : Locality::Local;
}

}  // namespace pairsim

#endif  // PAIRSIM_ANALYSIS_HPP
