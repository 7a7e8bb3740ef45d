#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace qplayout {

// Seeded source for trace generation and segmentation. Raw bits come from
// std::mt19937_64, whose output sequence is fixed by the standard; the
// transforms below are written out so results do not depend on a particular
// standard library's distribution classes.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // (0, 1]
  double uniform_open_low() { return 1.0 - uniform(); }

  double exponential(double mean) { return -mean * std::log(uniform_open_low()); }

  // Box-Muller; consumes two uniforms per call.
  double normal() {
    const double r = std::sqrt(-2.0 * std::log(uniform_open_low()));
    return r * std::cos(2.0 * std::numbers::pi * uniform());
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace qplayout
