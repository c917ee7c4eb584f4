#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace vbsim {

// Counter-keyed random stream. Every (master seed, key...) tuple maps to an
// independent SplitMix64 sequence, so a Monte Carlo work item draws the same
// numbers no matter which thread runs it or in what order.
//
// Variates are produced by hand (53-bit uniforms, Box-Muller normals) rather
// than through <random> distributions, whose output is library-defined.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t state) : state_(state) {}

  static RngStream substream(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                             std::uint64_t c = 0) {
    std::uint64_t h = mix(master ^ 0x6a09e667f3bcc909ULL);
    h = mix(h ^ mix(a + 0x9e3779b97f4a7c15ULL));
    h = mix(h ^ mix(b + 0xbb67ae8584caa73bULL));
    h = mix(h ^ mix(c + 0x3c6ef372fe94f82bULL));
    return RngStream(h);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_open_closed() {
    return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open_closed();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace vbsim
