#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace kerrflow {

/// splitmix64 stream. Every campaign sample owns a stream derived from
/// (seed, index) so results do not depend on scheduling.
class SampleRng {
 public:
  SampleRng(std::uint64_t seed, std::uint64_t index) : state_(mix(seed ^ mix(index + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool coin() { return (next() >> 63) != 0; }

  /// Log-uniform in (origin + lo, origin + hi) measured from origin.
  double log_uniform_offset(double origin, double lo, double hi) {
    return origin + std::exp(uniform(std::log(lo), std::log(hi)));
  }

  /// Polar angle with cos(theta) uniform in (-1, 1).
  double polar_angle() { return std::acos(uniform(-1.0, 1.0)); }

  void unit_circle(double& c, double& s) {
    const double t = uniform(0.0, 2.0 * std::numbers::pi);
    c = std::cos(t);
    s = std::sin(t);
  }

  void unit_sphere(double& x, double& y, double& z) {
    z = uniform(-1.0, 1.0);
    const double rho = std::sqrt(1.0 - z * z);
    double c, s;
    unit_circle(c, s);
    x = rho * c;
    y = rho * s;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace kerrflow
