#ifndef PAIRSIM_RNG_HPP
#define PAIRSIM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include "pairsim/constants.hpp"
#include "pairsim/errors.hpp"

namespace pairsim {

// Seeded generator with explicit bit-to-double mappings so that streams are
// bit-identical across platforms (std distributions are implementation
// defined; mt19937_64 itself is pinned by the standard).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Exponential with the given rate (events per unit).
  double exponential(double rate) {
    if (rate <= 0.0) throw ValidationError("exponential rate must be positive");
    return -std::log(uniform_pos()) / rate;
  }

  // Standard normal via Box-Muller; the spare is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = kTwoPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

  // Poisson counts: Knuth's product method for small means, a rounded normal
  // approximation above 64 (adequate for accidental-floor sampling).
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 64.0) {
      const double limit = std::exp(-mean);
      std::uint64_t k = 0;
      double p = 1.0;
      do {
        ++k;
        p *= uniform_pos();
      } while (p > limit);
      return k - 1;
    }
    const double g = gaussian(mean, std::sqrt(mean));
    return g < 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(g));
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pairsim

#endif  // PAIRSIM_RNG_HPP
