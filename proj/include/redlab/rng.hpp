#pragma once

// All randomness derives from one 64-bit master seed. Sub-streams are keyed
// by a counter so that task i gets the same stream regardless of the order
// in which tasks run.

#include <cmath>
#include <cstdint>
#include <random>

namespace redlab {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of sub-stream `stream` of `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::uint64_t stream) { return Rng(derive_seed(master, stream)); }

/// Standard normal draws via the Box-Muller transform on 53-bit uniforms.
/// Written out so the stream is identical across standard libraries.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do u1 = uniform(); while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  Rng& engine() { return rng_; }

 private:
  Rng rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace redlab
