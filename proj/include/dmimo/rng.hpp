#pragma once

#include <complex>
#include <cstdint>
#include <cmath>
#include <random>
#include <string_view>

namespace dmimo {

/// Deterministic random stream. Distributions are implemented by hand on top
/// of std::mt19937_64 so that sequences are bit-reproducible across platforms
/// and standard library versions. Monte Carlo workers derive independent
/// substreams with Rng::stream(), keyed by an experiment tag and trial index,
/// so results do not depend on how trials are partitioned over threads.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  static uint64_t mix(uint64_t seed, std::string_view tag, uint64_t index) {
    // FNV-1a over (seed, tag, index), then splitmix64 finalization.
    uint64_t h = 1469598103934665603ULL;
    auto feed = [&h](const void* data, size_t n) {
      const auto* b = static_cast<const unsigned char*>(data);
      for (size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ULL;
      }
    };
    feed(&seed, sizeof(seed));
    feed(tag.data(), tag.size());
    feed(&index, sizeof(index));
    h += 0x9e3779b97f4a7c15ULL;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
    return h ^ (h >> 31);
  }

  static Rng stream(uint64_t seed, std::string_view tag, uint64_t index) {
    return Rng(mix(seed, tag, index));
  }

  uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  uint64_t uniform_int(uint64_t n) {
    // Rejection-free modulo is fine here; n is tiny compared to 2^64.
    return engine_() % n;
  }

  /// Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Circularly-symmetric complex Gaussian with E|x|^2 = variance.
  std::complex<double> cnormal(double variance = 1.0) {
    const double s = std::sqrt(variance / 2.0);
    return {s * normal(), s * normal()};
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace dmimo
