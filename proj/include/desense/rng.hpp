#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "desense/numeric.hpp"

namespace desense {

/// splitmix64 finalizer; used to derive independent per-case seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic per-case random stream. The mapping from engine output to
/// doubles is spelled out here (53-bit uniforms, Box-Muller normals, no
/// cached spare) so the stream is fully specified by this code rather than
/// by library internals, and a case's draws never depend on how work is
/// scheduled across threads.
class CaseRng {
 public:
  CaseRng(std::uint64_t seed, std::uint64_t case_index) {
    std::uint64_t s = seed + 0x9e3779b97f4a7c15ULL * (case_index + 1);
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    engine_.seed(a ^ (b << 1));
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double low, double high) { return low + (high - low) * uniform01(); }

  /// Standard normal via Box-Muller; consumes exactly two engine draws.
  double normal() {
    constexpr double two_pi = 6.283185307179586476925286766559;
    double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  Vector normal_vector(int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace desense
